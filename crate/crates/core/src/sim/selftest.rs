//! Built-in numeric self-test: pattern anchors, radiation efficiency and
//! the rotation/polarization identities on random samples.

use std::time::Instant;

use rand::Rng;

use super::rng::{substream, Purpose};
use crate::element_pattern::{pattern_metrics, PatternParams, DEFAULT_QUADRATURE_STEP_DEG};
use crate::sphere_geom::{polarization_angle, rotation_matrix, transform_direction, Direction, RotationAngles};

const SELF_TEST_SEED: u64 = 0x5e1f_7e57;
pub const GEOMETRY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Peak, half-power crossings and back-lobe of the default pattern.
pub fn check_pattern_anchors() -> CheckResult {
    let t0 = Instant::now();
    let p = PatternParams::<f64>::directive_default();
    let peak = p.gain_db_at(90.0, 0.0);
    let back = p.gain_db_at(90.0, 180.0);
    let m = pattern_metrics(&p, DEFAULT_QUADRATURE_STEP_DEG);
    let (hpbw_az, hpbw_el) = m.as_ref().map(|m| (m.hpbw_az_deg, m.hpbw_el_deg)).unwrap_or((f64::NAN, f64::NAN));
    let elapsed = t0.elapsed().as_secs_f64();
    let passed = peak == 5.3 && back == -17.2 && (hpbw_az - 125.0).abs() <= 1.0 && (hpbw_el - 125.0).abs() <= 1.0 && elapsed < 1.0;
    CheckResult {
        name: "pattern anchors",
        passed,
        detail: format!("peak {peak} dBi, back {back} dBi, hpbw az {hpbw_az:.4} el {hpbw_el:.4} deg, {elapsed:.3} s"),
    }
}

/// Sphere-averaged linear gain of the directive and isotropic patterns.
pub fn check_efficiency() -> CheckResult {
    let t0 = Instant::now();
    let dir = pattern_metrics(&PatternParams::<f64>::directive_default(), DEFAULT_QUADRATURE_STEP_DEG);
    let iso = pattern_metrics(&PatternParams::<f64>::isotropic(), DEFAULT_QUADRATURE_STEP_DEG);
    let elapsed = t0.elapsed().as_secs_f64();
    let (e_dir, e_iso) = match (dir, iso) {
        (Ok(a), Ok(b)) => (a.efficiency_db, b.efficiency_db),
        _ => (f64::NAN, f64::NAN),
    };
    CheckResult {
        name: "efficiency",
        passed: e_dir.abs() <= 0.5 && e_iso == 0.0 && elapsed < 5.0,
        detail: format!("directive {e_dir:.5} dB, isotropic {e_iso} dB, {elapsed:.3} s"),
    }
}

/// Worst-case errors over random rotations and directions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeometryErrors {
    pub round_trip_deg: f64,
    pub orthonormality: f64,
    pub determinant: f64,
    pub psi_unit: f64,
    pub power_rel: f64,
}

pub fn geometry_errors(samples: usize, seed: u64) -> GeometryErrors {
    let mut rng = substream(seed, 0, Purpose::Orientation);
    let mut e = GeometryErrors::default();
    let mut n = 0;
    while n < samples {
        let a = RotationAngles::new(rng.gen_range(-180.0..180.0), rng.gen_range(-180.0..180.0), rng.gen_range(-180.0..180.0));
        let d = Direction::gcs((2.0 * rng.gen::<f64>() - 1.0).acos().to_degrees(), rng.gen_range(-180.0..180.0)).expect("sampled direction");
        let r = rotation_matrix(&a);
        let primed = transform_direction(&r, &d, true);
        // Stay a little away from poles where azimuth is ill-conditioned.
        if d.theta() < 0.01 || d.theta() > 179.99 || primed.theta() < 0.01 || primed.theta() > 179.99 {
            continue;
        }
        n += 1;
        let back = transform_direction(&r, &primed, false);
        let dphi = crate::scalar::wrap_deg(back.phi() - d.phi()).abs();
        e.round_trip_deg = e.round_trip_deg.max((back.theta() - d.theta()).abs()).max(dphi);
        e.orthonormality = e.orthonormality.max(r.orthonormality_error());
        e.determinant = e.determinant.max((r.determinant() - 1.0).abs());

        let psi = polarization_angle(&r, &d).expect("non-polar sample");
        e.psi_unit = e.psi_unit.max((psi.cos_psi.powi(2) + psi.sin_psi.powi(2) - 1.0).abs());
        let (ft, fp): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (gt, gp) = psi.apply(ft, fp);
        let before = ft * ft + fp * fp;
        if before > 0.0 {
            e.power_rel = e.power_rel.max(((gt * gt + gp * gp) - before).abs() / before);
        }
    }
    e
}

pub fn check_geometry() -> CheckResult {
    let t0 = Instant::now();
    let e = geometry_errors(GEOMETRY_SAMPLES, SELF_TEST_SEED);
    let elapsed = t0.elapsed().as_secs_f64();
    CheckResult {
        name: "geometry",
        passed: e.round_trip_deg < 1e-9 && e.orthonormality < 1e-12 && e.determinant < 1e-12 && e.psi_unit < 1e-12 && e.power_rel < 1e-12 && elapsed < 2.0,
        detail: format!(
            "round trip {:.2e} deg, RtR-I {:.2e}, det-1 {:.2e}, cos2+sin2-1 {:.2e}, power {:.2e}, {elapsed:.3} s",
            e.round_trip_deg, e.orthonormality, e.determinant, e.psi_unit, e.power_rel
        ),
    }
}

pub fn run_self_test() -> Vec<CheckResult> {
    vec![check_pattern_anchors(), check_efficiency(), check_geometry()]
}
