//! Per-port receive field patterns in the global frame, effective gain,
//! single-ray response, coherent combining, sphere sweeps and per-direction
//! gain imbalance.
//!
//! A global direction is chained down to the antenna frame,
//!
//! ```text
//! d (GCS) --Ω_UTᵀ--> d' (LCS) --R_elemᵀ--> d'' (ACS)
//! ```
//!
//! the element field is evaluated there with all power in `θ''`, and the
//! polarization is rotated back up through both frames. Blockage and port
//! loss scale both components by `10^(−L/20)`.

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::blockage::{AttenuationTable, BlockageError, BlockageScenario, ModelARegion};
use crate::device_layout::{DeviceLayout, Polarization, Port};
use crate::element_pattern::{FieldPair, PatternParams};
use crate::scalar::{dot, from_db, to_db, Real, Vec3};
use crate::sphere_geom::{polarization_angle, rotation_matrix, transform_direction, Direction, Frame, GeomError, Rotation, RotationAngles};

/// Floor returned by [`effective_gain_db`] for a zero field.
pub const GAIN_FLOOR_DB: f64 = -400.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Blockage(#[from] BlockageError),
    #[error("antenna {0} not present in the layout")]
    UnknownAntenna(u32),
    #[error("port loss list has {got} entries, layout has {want} ports")]
    PortLossLength { got: usize, want: usize },
    #[error("port loss must be finite and >= 0 dB")]
    NegativePortLoss,
    #[error("empty input")]
    EmptyInput,
    #[error("{fields} fields but {weights} weights")]
    LengthMismatch { fields: usize, weights: usize },
    #[error("combining weights are all zero")]
    ZeroWeights,
    #[error("grid step {0} deg does not evenly divide the sphere")]
    InvalidStep(f64),
    #[error("at least two antennas are required, got {0}")]
    TooFewAntennas(usize),
    #[error("direction must be given in the global frame")]
    WrongFrame,
}

/// Everything needed to evaluate one device in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UeState<T> {
    pub layout: DeviceLayout<T>,
    /// Ω_UT: rotation taking device-frame vectors into the global frame.
    pub orientation: RotationAngles<T>,
    pub scenario: BlockageScenario,
    pub carrier_hz: f64,
    /// Extra loss per port in [`DeviceLayout::ports`] order.
    pub port_loss_db: Vec<T>,
    /// Legacy fixed-region blocker applied on top of the element-wise model.
    pub model_a: Option<ModelARegion>,
}

impl<T: Real> UeState<T> {
    pub fn new(layout: DeviceLayout<T>, orientation: RotationAngles<T>, scenario: BlockageScenario, carrier_hz: f64, port_loss_db: Vec<T>) -> Result<Self, SynthesisError> {
        let want = layout.port_count();
        if port_loss_db.len() != want {
            return Err(SynthesisError::PortLossLength { got: port_loss_db.len(), want });
        }
        if port_loss_db.iter().any(|l| !(l.is_finite() && *l >= T::zero())) {
            return Err(SynthesisError::NegativePortLoss);
        }
        Ok(Self {
            layout,
            orientation,
            scenario,
            carrier_hz,
            port_loss_db,
            model_a: None,
        })
    }

    /// Free-space, zero port loss, given orientation.
    pub fn free_space(layout: DeviceLayout<T>, orientation: RotationAngles<T>, carrier_hz: f64) -> Self {
        let n = layout.port_count();
        Self {
            layout,
            orientation,
            scenario: BlockageScenario::FreeSpace,
            carrier_hz,
            port_loss_db: vec![T::zero(); n],
            model_a: None,
        }
    }

    pub fn with_model_a(mut self, region: ModelARegion) -> Self {
        self.model_a = Some(region);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PortChain<T> {
    port: Port,
    rotation: Rotation<T>,
    pattern: PatternParams<T>,
    /// Blockage plus port loss.
    loss_db: T,
    amplitude: T,
}

/// A [`UeState`] with rotations and table lookups resolved once.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedUe<T> {
    ue_rotation: Rotation<T>,
    chains: Vec<PortChain<T>>,
    model_a: Option<ModelARegion>,
    positions_mm: Vec<Vec3<T>>,
}

impl<T: Real> PreparedUe<T> {
    pub fn new(u: &UeState<T>, table: &AttenuationTable) -> Result<Self, SynthesisError> {
        let ports = u.layout.ports();
        if u.port_loss_db.len() != ports.len() {
            return Err(SynthesisError::PortLossLength { got: u.port_loss_db.len(), want: ports.len() });
        }
        let mut chains = Vec::with_capacity(ports.len());
        let mut positions_mm = Vec::with_capacity(ports.len());
        for (port, extra) in ports.into_iter().zip(&u.port_loss_db) {
            let e = &u.layout.elements[port.element_index];
            let block = table.element_attenuation_db(u.scenario, e.id, u.carrier_hz)?;
            let loss_db = T::lit(block) + *extra;
            chains.push(PortChain {
                port,
                rotation: rotation_matrix(&e.port_orientation(port.polarization)),
                pattern: e.pattern,
                loss_db,
                amplitude: from_db(-loss_db).sqrt(),
            });
            positions_mm.push(e.position_mm);
        }
        Ok(Self {
            ue_rotation: rotation_matrix(&u.orientation),
            chains,
            model_a: u.model_a,
            positions_mm,
        })
    }

    pub fn ports(&self) -> Vec<Port> {
        self.chains.iter().map(|c| c.port).collect()
    }

    pub fn port_count(&self) -> usize {
        self.chains.len()
    }

    /// Total fixed loss (blockage plus port loss) of a port in dB.
    pub fn port_loss_db(&self, port_index: usize) -> T {
        self.chains[port_index].loss_db
    }

    /// Port positions rotated into the global frame, in metres.
    pub fn positions_gcs_m(&self) -> Vec<Vec3<T>> {
        let mm = T::lit(1e-3);
        self.positions_mm
            .iter()
            .map(|p| self.ue_rotation.apply(p).map(|v| v * mm))
            .collect()
    }

    /// Index of the primary-polarization port of an antenna.
    pub fn port_index(&self, antenna_id: u32) -> Option<usize> {
        self.chains
            .iter()
            .position(|c| c.port.element_id == antenna_id && c.port.polarization == Polarization::Primary)
    }

    /// Field of one port toward a global direction.
    pub fn port_field(&self, port_index: usize, d: &Direction<T>) -> Result<FieldPair<T>, SynthesisError> {
        if d.frame() != Frame::Gcs {
            return Err(SynthesisError::WrongFrame);
        }
        let c = &self.chains[port_index];
        let d_lcs = transform_direction(&self.ue_rotation, d, true);
        let d_acs = transform_direction(&c.rotation, &d_lcs, true);
        let f_acs = c.pattern.field_pair(&d_acs);

        let to_lcs = polarization_angle(&c.rotation, &d_lcs)?;
        let (lt, lp) = to_lcs.apply(f_acs.f_theta, f_acs.f_phi);
        let to_gcs = polarization_angle(&self.ue_rotation, d)?;
        let (gt, gp) = to_gcs.apply(lt, lp);

        let mut amp = c.amplitude;
        if let Some(region) = &self.model_a {
            let dd = Direction::gcs(d.theta().as_f64(), d.phi().as_f64())?;
            let extra = region.attenuation_db(&dd);
            if extra > 0.0 {
                amp = amp * from_db(T::lit(-extra)).sqrt();
            }
        }
        Ok(FieldPair::new(gt * amp, gp * amp))
    }

    /// Field of an antenna's primary port toward a global direction.
    pub fn antenna_field(&self, antenna_id: u32, d: &Direction<T>) -> Result<FieldPair<T>, SynthesisError> {
        let idx = self.port_index(antenna_id).ok_or(SynthesisError::UnknownAntenna(antenna_id))?;
        self.port_field(idx, d)
    }

    /// Fields of every port toward one direction, in port order.
    pub fn all_fields(&self, d: &Direction<T>) -> Result<Vec<FieldPair<T>>, SynthesisError> {
        (0..self.chains.len()).map(|i| self.port_field(i, d)).collect()
    }
}

/// Receive field of an antenna (primary polarization) toward a global direction.
pub fn antenna_field_gcs<T: Real>(u: &UeState<T>, antenna_id: u32, d: &Direction<T>, table: &AttenuationTable) -> Result<FieldPair<T>, SynthesisError> {
    if u.layout.element(antenna_id).is_none() {
        return Err(SynthesisError::UnknownAntenna(antenna_id));
    }
    PreparedUe::new(u, table)?.antenna_field(antenna_id, d)
}

/// `10·log10(|F_θ|² + |F_φ|²)`, floored at [`GAIN_FLOOR_DB`].
pub fn effective_gain_db<T: Real>(f: &FieldPair<T>) -> T {
    power_to_db(f.power())
}

fn power_to_db<T: Real>(p: T) -> T {
    let floor = T::lit(GAIN_FLOOR_DB);
    if p > T::zero() {
        to_db(p).max(floor)
    } else {
        floor
    }
}

/// 2×2 polarization coupling matrix, rows and columns ordered (θ, φ).
pub type Coupling<T> = [[Complex<T>; 2]; 2];

/// `e^{j·phase}·[rx_θ, rx_φ]·C·[tx_θ, tx_φ]ᵀ` for a single ray.
pub fn ray_response<T: Real>(rx: &FieldPair<T>, coupling: &Coupling<T>, tx: &FieldPair<T>, phase_rad: T) -> Complex<T> {
    let r = [rx.f_theta, rx.f_phi];
    let t = [tx.f_theta, tx.f_phi];
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..2 {
        for j in 0..2 {
            acc = acc + coupling[i][j] * (r[i] * t[j]);
        }
    }
    acc * Complex::from_polar(T::one(), phase_rad)
}

/// Identity coupling (co-polar, no cross-polar leakage).
pub fn identity_coupling<T: Real>() -> Coupling<T> {
    let (o, l) = (Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()));
    [[l, o], [o, l]]
}

/// Complex field pair produced by combining.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFieldPair<T> {
    pub f_theta: Complex<T>,
    pub f_phi: Complex<T>,
}

impl<T: Real> ComplexFieldPair<T> {
    pub fn power(&self) -> T {
        self.f_theta.norm_sqr() + self.f_phi.norm_sqr()
    }

    pub fn gain_db(&self) -> T {
        power_to_db(self.power())
    }
}

/// Geometric phase `e^{j·k·r·ρ̂}` of each antenna position toward a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionPhase<'a, T> {
    pub carrier_hz: f64,
    /// Global-frame positions in metres, one per combined field.
    pub positions_m: &'a [Vec3<T>],
    pub direction: Direction<T>,
}

/// Weighted coherent sum. Weights are rescaled to unit total power.
pub fn combine_coherent<T: Real>(fields: &[FieldPair<T>], weights: &[Complex<T>], phase: Option<&PositionPhase<'_, T>>) -> Result<ComplexFieldPair<T>, SynthesisError> {
    if fields.is_empty() {
        return Err(SynthesisError::EmptyInput);
    }
    if fields.len() != weights.len() {
        return Err(SynthesisError::LengthMismatch { fields: fields.len(), weights: weights.len() });
    }
    if let Some(p) = phase {
        if p.positions_m.len() != fields.len() {
            return Err(SynthesisError::LengthMismatch { fields: fields.len(), weights: p.positions_m.len() });
        }
    }
    let norm = weights.iter().fold(T::zero(), |a, w| a + w.norm_sqr()).sqrt();
    if !(norm > T::zero()) {
        return Err(SynthesisError::ZeroWeights);
    }
    let geo = phase.map(|p| {
        let k = T::lit(2.0 * std::f64::consts::PI * p.carrier_hz / crate::device_layout::SPEED_OF_LIGHT);
        let rho = p.direction.unit_vector();
        p.positions_m
            .iter()
            .map(|r| Complex::from_polar(T::one(), k * dot(r, &rho)))
            .collect::<Vec<_>>()
    });
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = ComplexFieldPair { f_theta: zero, f_phi: zero };
    for (i, (f, w)) in fields.iter().zip(weights).enumerate() {
        let mut c = *w / norm;
        if let Some(g) = &geo {
            c = c * g[i];
        }
        out.f_theta = out.f_theta + c * f.f_theta;
        out.f_phi = out.f_phi + c * f.f_phi;
    }
    Ok(out)
}

/// Equal-power weights `1/√n`.
pub fn equal_weights<T: Real>(n: usize) -> Vec<Complex<T>> {
    let w = T::one() / T::from_usize(n).unwrap().sqrt();
    vec![Complex::new(w, T::zero()); n]
}

/// Per-port gain and field over an equiangular sphere grid. θ samples sit at
/// cell centres `(i + ½)·Δθ`, φ samples at `−180 + j·Δφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainGrid<T> {
    pub theta_step: T,
    pub phi_step: T,
    pub n_theta: usize,
    pub n_phi: usize,
    pub ports: Vec<Port>,
    /// Global-frame port positions in metres.
    pub positions_m: Vec<Vec3<T>>,
    /// `gain_db[port][i * n_phi + j]`.
    pub gain_db: Vec<Vec<T>>,
    pub fields: Vec<Vec<FieldPair<T>>>,
}

impl<T: Real> GainGrid<T> {
    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta_at(&self, i: usize) -> T {
        (T::from_usize(i).unwrap() + T::lit(0.5)) * self.theta_step
    }

    pub fn phi_at(&self, j: usize) -> T {
        T::lit(-180.0) + T::from_usize(j).unwrap() * self.phi_step
    }

    /// Direction of flat sample index `k`.
    pub fn direction(&self, k: usize) -> Direction<T> {
        Direction::gcs(self.theta_at(k / self.n_phi), self.phi_at(k % self.n_phi)).expect("grid direction valid")
    }

    pub fn port_indices(&self, ids: &[u32]) -> Result<Vec<usize>, SynthesisError> {
        let mut out = Vec::new();
        for &id in ids {
            let before = out.len();
            out.extend(self.ports.iter().enumerate().filter(|(_, p)| p.element_id == id).map(|(i, _)| i));
            if out.len() == before {
                return Err(SynthesisError::UnknownAntenna(id));
            }
        }
        Ok(out)
    }

    pub fn max_gain_db(&self) -> T {
        self.gain_db.iter().flatten().fold(T::neg_infinity(), |a, &g| a.max(g))
    }

    pub fn min_gain_db(&self) -> T {
        self.gain_db.iter().flatten().fold(T::infinity(), |a, &g| a.min(g))
    }
}

fn steps_for(span: f64, step: f64) -> Result<usize, SynthesisError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(SynthesisError::InvalidStep(step));
    }
    let n = span / step;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 {
        return Err(SynthesisError::InvalidStep(step));
    }
    Ok(r as usize)
}

/// Evaluates every port over the full sphere. Rows are computed in
/// parallel; the result does not depend on the thread count.
pub fn sphere_sweep<T: Real>(u: &UeState<T>, table: &AttenuationTable, theta_step: T, phi_step: T) -> Result<GainGrid<T>, SynthesisError> {
    let prepared = PreparedUe::new(u, table)?;
    sweep_prepared(&prepared, theta_step, phi_step)
}

pub fn sweep_prepared<T: Real>(prepared: &PreparedUe<T>, theta_step: T, phi_step: T) -> Result<GainGrid<T>, SynthesisError> {
    let n_theta = steps_for(180.0, theta_step.as_f64())?;
    let n_phi = steps_for(360.0, phi_step.as_f64())?;
    let n_ports = prepared.port_count();
    let mut grid = GainGrid {
        theta_step,
        phi_step,
        n_theta,
        n_phi,
        ports: prepared.ports(),
        positions_m: prepared.positions_gcs_m(),
        gain_db: Vec::new(),
        fields: Vec::new(),
    };
    let rows: Vec<Vec<Vec<FieldPair<T>>>> = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            let theta = grid.theta_at(i);
            (0..n_phi)
                .map(|j| {
                    let d = Direction::gcs(theta, grid.phi_at(j))?;
                    prepared.all_fields(&d)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut fields = vec![Vec::with_capacity(n_theta * n_phi); n_ports];
    for row in rows {
        for sample in row {
            for (p, f) in sample.into_iter().enumerate() {
                fields[p].push(f);
            }
        }
    }
    grid.gain_db = fields.iter().map(|v| v.iter().map(effective_gain_db).collect()).collect();
    grid.fields = fields;
    Ok(grid)
}

/// Per-direction spread between the best and worst selected antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceStats<T> {
    /// Δ per grid sample, same flat indexing as [`GainGrid::gain_db`].
    pub delta_db: Vec<T>,
    /// Solid-angle weights (`sinθ`) per sample.
    pub weights: Vec<T>,
    pub max_db: T,
}

impl<T: Real> ImbalanceStats<T> {
    /// Solid-angle-weighted fraction of directions with Δ strictly above `x_db`.
    pub fn fraction_above(&self, x_db: T) -> T {
        let (mut above, mut total) = (T::zero(), T::zero());
        for (d, w) in self.delta_db.iter().zip(&self.weights) {
            total = total + *w;
            if *d > x_db {
                above = above + *w;
            }
        }
        above / total
    }

    /// Solid-angle-weighted mean Δ.
    pub fn mean_db(&self) -> T {
        let (mut s, mut total) = (T::zero(), T::zero());
        for (d, w) in self.delta_db.iter().zip(&self.weights) {
            s = s + *d * *w;
            total = total + *w;
        }
        s / total
    }
}

/// Imbalance over the ports of `active_ids` (both polarizations of dual
/// locations are included).
pub fn imbalance_stats<T: Real>(g: &GainGrid<T>, active_ids: &[u32]) -> Result<ImbalanceStats<T>, SynthesisError> {
    let idx = g.port_indices(active_ids)?;
    if idx.len() < 2 {
        return Err(SynthesisError::TooFewAntennas(idx.len()));
    }
    let mut delta = Vec::with_capacity(g.len());
    let mut weights = Vec::with_capacity(g.len());
    let mut max_db = T::neg_infinity();
    for k in 0..g.len() {
        let (mut hi, mut lo) = (T::neg_infinity(), T::infinity());
        for &p in &idx {
            let v = g.gain_db[p][k];
            hi = hi.max(v);
            lo = lo.min(v);
        }
        let d = hi - lo;
        max_db = max_db.max(d);
        delta.push(d);
        weights.push(g.theta_at(k / g.n_phi).to_radians().sin());
    }
    Ok(ImbalanceStats { delta_db: delta, weights, max_db })
}

/// Peak over the grid of the coherent combination of the given ports.
///
/// With `carrier_hz` set, each port's field carries its geometric phase.
pub fn combined_peak_db<T: Real>(g: &GainGrid<T>, port_indices: &[usize], weights: &[Complex<T>], carrier_hz: Option<f64>) -> Result<T, SynthesisError> {
    if port_indices.is_empty() {
        return Err(SynthesisError::EmptyInput);
    }
    let positions: Vec<Vec3<T>> = port_indices.iter().map(|&p| g.positions_m[p]).collect();
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            let fields: Vec<FieldPair<T>> = port_indices.iter().map(|&p| g.fields[p][k]).collect();
            let phase = carrier_hz.map(|carrier_hz| PositionPhase {
                carrier_hz,
                positions_m: &positions,
                direction: g.direction(k),
            });
            combine_coherent(&fields, weights, phase.as_ref()).map(|c| c.gain_db())
        })
        .try_reduce(|| T::neg_infinity(), |a, b| Ok(a.max(b)))
}

/// Result of combining one pair of ports with equal weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCombining<T> {
    pub a: Port,
    pub b: Port,
    pub peak_a_db: T,
    pub peak_b_db: T,
    pub combined_peak_db: T,
}

impl<T: Real> PairCombining<T> {
    /// Combined peak minus the better single-port peak.
    pub fn gain_over_best_single_db(&self) -> T {
        self.combined_peak_db - self.peak_a_db.max(self.peak_b_db)
    }
}

/// Equal-weight combining of every pair among `active_ids`.
pub fn pairwise_combining<T: Real>(g: &GainGrid<T>, active_ids: &[u32], carrier_hz: Option<f64>) -> Result<Vec<PairCombining<T>>, SynthesisError> {
    let idx = g.port_indices(active_ids)?;
    if idx.len() < 2 {
        return Err(SynthesisError::TooFewAntennas(idx.len()));
    }
    let peak = |p: usize| g.gain_db[p].iter().fold(T::neg_infinity(), |a, &v| a.max(v));
    let w = equal_weights::<T>(2);
    let mut out = Vec::new();
    for (n, &a) in idx.iter().enumerate() {
        for &b in &idx[n + 1..] {
            out.push(PairCombining {
                a: g.ports[a],
                b: g.ports[b],
                peak_a_db: peak(a),
                peak_b_db: peak(b),
                combined_peak_db: combined_peak_db(g, &[a, b], &w, carrier_hz)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device_layout::{reference_handset, AntennaElement, LayoutKind};
    use approx::assert_abs_diff_eq;

    fn handset_state(scenario: BlockageScenario, carrier: f64) -> UeState<f64> {
        let mut u = UeState::free_space(reference_handset(), RotationAngles::zero(), carrier);
        u.scenario = scenario;
        u
    }

    #[test]
    fn boresight_field_identity_orientation() {
        let layout = DeviceLayout {
            kind: LayoutKind::Cpe,
            form_factor_mm: [0.0, 200.0, 200.0],
            elements: vec![AntennaElement {
                id: 1,
                position_mm: [0.0; 3],
                orientation: RotationAngles::zero(),
                pattern: PatternParams::directive_default(),
                dual_polarized: false,
            }],
        };
        let u = UeState::free_space(layout, RotationAngles::zero(), 3.5e9);
        let f = antenna_field_gcs(&u, 1, &Direction::gcs(90.0, 0.0).unwrap(), &AttenuationTable::example()).unwrap();
        assert_abs_diff_eq!(f.f_theta, 1.8408, epsilon = 1e-4);
        assert_abs_diff_eq!(f.f_phi, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn blocked_boresight_gain() {
        let u = handset_state(BlockageScenario::OneHandBrowsing, 2.0e9);
        let f = antenna_field_gcs(&u, 4, &Direction::gcs(90.0, -90.0).unwrap(), &AttenuationTable::example()).unwrap();
        assert_abs_diff_eq!(effective_gain_db(&f), 5.3 - 10.8, epsilon = 1e-9);
    }

    #[test]
    fn unknown_antenna_and_frame() {
        let u = handset_state(BlockageScenario::FreeSpace, 3.5e9);
        let t = AttenuationTable::example();
        assert_eq!(
            antenna_field_gcs(&u, 9, &Direction::gcs(90.0, 0.0).unwrap(), &t),
            Err(SynthesisError::UnknownAntenna(9))
        );
        assert_eq!(
            antenna_field_gcs(&u, 1, &Direction::lcs(90.0, 0.0).unwrap(), &t),
            Err(SynthesisError::WrongFrame)
        );
    }

    #[test]
    fn gain_floor() {
        assert_eq!(effective_gain_db(&FieldPair::new(1.0, 0.0)), 0.0);
        assert_abs_diff_eq!(effective_gain_db(&FieldPair::new(1.8408_f64, 0.0)), 5.3, epsilon = 1e-3);
        assert_eq!(effective_gain_db(&FieldPair::new(0.0_f64, 0.0)), GAIN_FLOOR_DB);
    }

    #[test]
    fn ray_examples() {
        let c = identity_coupling::<f64>();
        let v = FieldPair::new(1.0, 0.0);
        let h = FieldPair::new(0.0, 1.0);
        assert_abs_diff_eq!(ray_response(&v, &c, &v, 0.0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ray_response(&v, &c, &h, 0.0).norm(), 0.0, epsilon = 1e-15);
        let r = ray_response(&v, &c, &v, std::f64::consts::PI);
        assert_abs_diff_eq!(r.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn combining_basics() {
        let f = FieldPair::new(1.3_f64, 0.4);
        let two = combine_coherent(&[f, f], &equal_weights(2), None).unwrap();
        assert_abs_diff_eq!(two.gain_db() - effective_gain_db(&f), 10.0 * 2f64.log10(), epsilon = 1e-12);
        let one = combine_coherent(&[f], &[Complex::new(1.0, 0.0)], None).unwrap();
        assert_abs_diff_eq!(one.gain_db(), effective_gain_db(&f), epsilon = 1e-12);
        // Unnormalized weights are rescaled.
        let big = combine_coherent(&[f, f], &[Complex::new(3.0, 0.0); 2], None).unwrap();
        assert_abs_diff_eq!(big.power(), two.power(), epsilon = 1e-12);
        assert_eq!(combine_coherent::<f64>(&[], &[], None), Err(SynthesisError::EmptyInput));
        assert!(combine_coherent(&[f], &equal_weights(2), None).is_err());
        assert_eq!(combine_coherent(&[f], &[Complex::new(0.0, 0.0)], None), Err(SynthesisError::ZeroWeights));
    }

    #[test]
    fn position_phase_cancels_at_half_wave() {
        // Two isotropic-like fields half a wavelength apart along x cancel toward +x.
        let carrier = 3.0e9;
        let half = crate::device_layout::SPEED_OF_LIGHT / carrier / 2.0;
        let pos = [[0.0, 0.0, 0.0], [half, 0.0, 0.0]];
        let f = FieldPair::new(1.0, 0.0);
        let toward = |t, p| PositionPhase { carrier_hz: carrier, positions_m: &pos, direction: Direction::gcs(t, p).unwrap() };
        let c = combine_coherent(&[f, f], &equal_weights(2), Some(&toward(90.0, 0.0))).unwrap();
        assert!(c.power() < 1e-20);
        let c = combine_coherent(&[f, f], &equal_weights(2), Some(&toward(90.0, 90.0))).unwrap();
        assert_abs_diff_eq!(c.power(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_shape_and_steps() {
        let u = handset_state(BlockageScenario::FreeSpace, 3.5e9);
        let g = sphere_sweep(&u, &AttenuationTable::example(), 10.0, 15.0).unwrap();
        assert_eq!((g.n_theta, g.n_phi), (18, 24));
        assert_eq!(g.gain_db.len(), 8);
        assert!(g.gain_db.iter().all(|v| v.len() == 18 * 24));
        assert_eq!(g.theta_at(0), 5.0);
        assert_eq!(g.phi_at(0), -180.0);
        assert_eq!(
            sphere_sweep(&u, &AttenuationTable::example(), 7.0, 10.0),
            Err(SynthesisError::InvalidStep(7.0))
        );
    }

    #[test]
    fn imbalance_needs_two() {
        let u = handset_state(BlockageScenario::FreeSpace, 3.5e9);
        let g = sphere_sweep(&u, &AttenuationTable::example(), 10.0, 10.0).unwrap();
        assert_eq!(imbalance_stats(&g, &[1]).unwrap_err(), SynthesisError::TooFewAntennas(1));
        assert_eq!(imbalance_stats(&g, &[1, 42]).unwrap_err(), SynthesisError::UnknownAntenna(42));
    }

    #[test]
    fn colocated_pair_has_no_imbalance() {
        let e = AntennaElement {
            id: 1,
            position_mm: [0.0; 3],
            orientation: RotationAngles::new(20.0, 10.0, 5.0),
            pattern: PatternParams::directive_default(),
            dual_polarized: false,
        };
        let layout = DeviceLayout {
            kind: LayoutKind::Cpe,
            form_factor_mm: [0.0, 200.0, 200.0],
            elements: vec![e, AntennaElement { id: 2, ..e }],
        };
        let u = UeState::free_space(layout, RotationAngles::new(40.0, -30.0, 10.0), 3.5e9);
        let g = sphere_sweep(&u, &AttenuationTable::example(), 5.0, 5.0).unwrap();
        let s = imbalance_stats(&g, &[1, 2]).unwrap();
        assert!(s.delta_db.iter().all(|d| *d == 0.0));
        assert_eq!(s.fraction_above(0.0), 0.0);
    }

    #[test]
    fn port_loss_length_checked() {
        let r = UeState::new(reference_handset::<f64>(), RotationAngles::zero(), BlockageScenario::FreeSpace, 3.5e9, vec![0.0; 3]);
        assert_eq!(r.unwrap_err(), SynthesisError::PortLossLength { got: 3, want: 8 });
        let r = UeState::new(reference_handset::<f64>(), RotationAngles::zero(), BlockageScenario::FreeSpace, 3.5e9, vec![-1.0; 8]);
        assert_eq!(r.unwrap_err(), SynthesisError::NegativePortLoss);
    }

    #[test]
    fn port_loss_shifts_gain() {
        let mut u = handset_state(BlockageScenario::FreeSpace, 3.5e9);
        u.port_loss_db[2] = 2.5;
        let p = PreparedUe::new(&u, &AttenuationTable::example()).unwrap();
        let f = p.antenna_field(3, &Direction::gcs(90.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(effective_gain_db(&f), 5.3 - 2.5, epsilon = 1e-9);
        assert_eq!(p.port_loss_db(2), 2.5);
    }
}
