//! Reference UE element radiation patterns and pattern metrics.
//!
//! The directive pattern uses the parabolic attenuation template
//!
//! ```text
//! A_V(θ'') = −min{12((θ''−90)/θ_3dB)², SLA_V}
//! A_H(φ'') = −min{12(φ''/φ_3dB)², A_max}
//! A(θ'', φ'') = G_max − min{−(A_V + A_H), A_max}
//! ```
//!
//! with boresight at `(θ'' = 90°, φ'' = 0°)`. The defaults (5.3 dBi,
//! 125°, 22.5 dB) give a pattern whose sphere-averaged linear gain is
//! within a few hundredths of a dB of unity.

use thiserror::Error;

use crate::scalar::{from_db, to_db, Real};
use crate::sphere_geom::Direction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatternError {
    #[error("invalid pattern parameter: {0}")]
    InvalidParams(&'static str),
    #[error("quadrature step {0} deg is coarser than 1 deg")]
    QuadratureTooCoarse(f64),
    #[error("quadrature step must be positive, got {0}")]
    InvalidStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Directive,
    Isotropic,
}

/// Element pattern parameters. Gains in dBi, widths in degrees, caps in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternParams<T> {
    pub kind: PatternKind,
    pub g_max: T,
    pub theta_3db: T,
    pub phi_3db: T,
    pub sla_v: T,
    pub a_max: T,
}

impl<T: Real> PatternParams<T> {
    pub fn new(g_max: T, theta_3db: T, phi_3db: T, sla_v: T, a_max: T) -> Result<Self, PatternError> {
        let p = Self {
            kind: PatternKind::Directive,
            g_max,
            theta_3db,
            phi_3db,
            sla_v,
            a_max,
        };
        p.validate()?;
        Ok(p)
    }

    /// 5.3 dBi peak, 125° half-power beamwidth in both cuts, 22.5 dB caps.
    pub fn directive_default() -> Self {
        Self {
            kind: PatternKind::Directive,
            g_max: T::lit(5.3),
            theta_3db: T::lit(125.0),
            phi_3db: T::lit(125.0),
            sla_v: T::lit(22.5),
            a_max: T::lit(22.5),
        }
    }

    /// 0 dBi in every direction.
    pub fn isotropic() -> Self {
        Self {
            kind: PatternKind::Isotropic,
            g_max: T::zero(),
            ..Self::directive_default()
        }
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        if self.kind == PatternKind::Isotropic {
            return Ok(());
        }
        if !(self.g_max.is_finite()
            && self.theta_3db.is_finite()
            && self.phi_3db.is_finite()
            && self.sla_v.is_finite()
            && self.a_max.is_finite())
        {
            return Err(PatternError::InvalidParams("non-finite value"));
        }
        if self.theta_3db <= T::zero() || self.phi_3db <= T::zero() {
            return Err(PatternError::InvalidParams("beamwidths must be positive"));
        }
        if self.sla_v < T::zero() || self.a_max < T::zero() {
            return Err(PatternError::InvalidParams("attenuation caps must be non-negative"));
        }
        Ok(())
    }

    /// Directional gain in dBi at an antenna-frame direction.
    pub fn gain_db(&self, d: &Direction<T>) -> T {
        self.gain_db_at(d.theta(), d.phi())
    }

    /// [`gain_db`](Self::gain_db) on raw angles; `phi` is expected in `[-180, 180]`.
    pub fn gain_db_at(&self, theta_deg: T, phi_deg: T) -> T {
        match self.kind {
            PatternKind::Isotropic => T::zero(),
            PatternKind::Directive => {
                let twelve = T::lit(12.0);
                let v = (theta_deg - T::lit(90.0)) / self.theta_3db;
                let h = phi_deg / self.phi_3db;
                let a_v = -(twelve * v * v).min(self.sla_v);
                let a_h = -(twelve * h * h).min(self.a_max);
                self.g_max - (-(a_v + a_h)).min(self.a_max)
            }
        }
    }

    /// Polarized field amplitudes, all power in the `θ''` component.
    pub fn field_pair(&self, d: &Direction<T>) -> FieldPair<T> {
        FieldPair {
            f_theta: from_db(self.gain_db(d)).sqrt(),
            f_phi: T::zero(),
        }
    }
}

/// Real field amplitudes in the `θ̂`/`φ̂` basis of some frame. The squared
/// magnitudes sum to the linear directional gain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldPair<T> {
    pub f_theta: T,
    pub f_phi: T,
}

impl<T: Real> FieldPair<T> {
    pub fn new(f_theta: T, f_phi: T) -> Self {
        Self { f_theta, f_phi }
    }

    #[inline]
    pub fn power(&self) -> T {
        self.f_theta * self.f_theta + self.f_phi * self.f_phi
    }

    /// Both components scaled by a linear amplitude factor.
    #[inline]
    pub fn scaled(&self, k: T) -> Self {
        Self {
            f_theta: self.f_theta * k,
            f_phi: self.f_phi * k,
        }
    }
}

/// Free function form of [`PatternParams::gain_db`].
pub fn gain_db<T: Real>(p: &PatternParams<T>, d: &Direction<T>) -> T {
    p.gain_db(d)
}

/// Free function form of [`PatternParams::field_pair`].
pub fn field_pair<T: Real>(p: &PatternParams<T>, d: &Direction<T>) -> FieldPair<T> {
    p.field_pair(d)
}

/// Summary figures of a pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMetrics<T> {
    pub peak_dbi: T,
    /// Half-power beamwidth of the azimuth cut through boresight. 360 when
    /// the cut never drops 3 dB.
    pub hpbw_az_deg: T,
    /// Half-power beamwidth of the elevation cut through boresight. 180 when
    /// the cut never drops 3 dB.
    pub hpbw_el_deg: T,
    pub fbr_db: T,
    pub efficiency_db: T,
}

pub const DEFAULT_QUADRATURE_STEP_DEG: f64 = 0.25;

/// Peak, beamwidths, front-to-back ratio and radiation efficiency.
///
/// Efficiency is `10·log10((1/4π)∮10^(A/10) sinθ dθ dφ)` with midpoint
/// quadrature on an equiangular grid of `step_deg`.
pub fn pattern_metrics<T: Real>(p: &PatternParams<T>, step_deg: T) -> Result<PatternMetrics<T>, PatternError> {
    if !(step_deg > T::zero()) {
        return Err(PatternError::InvalidStep(step_deg.as_f64()));
    }
    if step_deg > T::one() {
        return Err(PatternError::QuadratureTooCoarse(step_deg.as_f64()));
    }
    let (n90, n180) = (T::lit(90.0), T::lit(180.0));

    if p.kind == PatternKind::Isotropic {
        return Ok(PatternMetrics {
            peak_dbi: T::zero(),
            hpbw_az_deg: T::lit(360.0),
            hpbw_el_deg: n180,
            fbr_db: T::zero(),
            efficiency_db: T::zero(),
        });
    }

    let n_theta = (n180 / step_deg).ceil().to_usize().unwrap_or(0);
    let n_phi = (T::lit(360.0) / step_deg).ceil().to_usize().unwrap_or(0);
    let dth = n180 / T::from_usize(n_theta).unwrap();
    let dph = T::lit(360.0) / T::from_usize(n_phi).unwrap();

    // Grid nodes for the peak, cell centres for the integral.
    let boresight = p.gain_db_at(n90, T::zero());
    let mut peak = boresight;
    let mut total = T::zero();
    for i in 0..=n_theta {
        let th_node = dth * T::from_usize(i).unwrap();
        let th_mid = th_node + dth / T::lit(2.0);
        let sin_mid = th_mid.to_radians().sin();
        let mut row = T::zero();
        for j in 0..n_phi {
            let ph_node = -n180 + dph * T::from_usize(j).unwrap();
            peak = peak.max(p.gain_db_at(th_node, ph_node));
            if i < n_theta {
                row = row + from_db(p.gain_db_at(th_mid, ph_node + dph / T::lit(2.0)));
            }
        }
        if i < n_theta {
            total = total + row * sin_mid;
        }
    }
    let cell = dth.to_radians() * dph.to_radians();
    let efficiency = total * cell / (T::lit(4.0) * T::PI());

    let target = boresight - T::lit(3.0);
    let az = |x: T| p.gain_db_at(n90, x);
    let el = |x: T| p.gain_db_at(x, T::zero());
    let az_hi = half_power_crossing(&az, T::zero(), n180, step_deg, target);
    let az_lo = half_power_crossing(&az, T::zero(), -n180, step_deg, target);
    let el_hi = half_power_crossing(&el, n90, n180, step_deg, target);
    let el_lo = half_power_crossing(&el, n90, T::zero(), step_deg, target);
    let hpbw_az = match (az_hi, az_lo) {
        (Some(hi), Some(lo)) => hi - lo,
        _ => T::lit(360.0),
    };
    let hpbw_el = match (el_hi, el_lo) {
        (Some(hi), Some(lo)) => hi - lo,
        _ => n180,
    };

    Ok(PatternMetrics {
        peak_dbi: peak,
        hpbw_az_deg: hpbw_az,
        hpbw_el_deg: hpbw_el,
        fbr_db: boresight - p.gain_db_at(n90, n180),
        efficiency_db: to_db(efficiency),
    })
}

/// Walks from `start` towards `end` in `step` increments until `f` drops to
/// `target`, then bisects the bracket.
fn half_power_crossing<T: Real, F: Fn(T) -> T>(f: &F, start: T, end: T, step: T, target: T) -> Option<T> {
    let dir = if end >= start { T::one() } else { -T::one() };
    let span = (end - start).abs();
    let mut prev = start;
    let mut x = start;
    loop {
        let travelled = (x - start).abs();
        if travelled >= span {
            return None;
        }
        x = start + dir * (travelled + step).min(span);
        if f(x) <= target {
            break;
        }
        prev = x;
    }
    let (mut a, mut b) = (prev, x);
    for _ in 0..200 {
        let m = (a + b) / T::lit(2.0);
        if m == a || m == b {
            break;
        }
        if f(m) > target {
            a = m;
        } else {
            b = m;
        }
    }
    Some((a + b) / T::lit(2.0))
}
