//! Seeded Monte-Carlo over blockage scenarios, device orientations and
//! port imbalance.

use rand::Rng;
use rayon::prelude::*;

use super::config::{OrientationDist, SimConfig};
use super::rng::{substream, Purpose};
use super::SimError;
use crate::blockage::{port_imbalance_draw, sample_scenario, BlockageScenario};
use crate::device_layout::Port;
use crate::field_synthesis::{effective_gain_db, PreparedUe, UeState};
use crate::sphere_geom::{Direction, RotationAngles};

/// Probe-grid imbalance of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSummary {
    pub max_imbalance_db: f64,
    /// Solid-angle-weighted fraction of probe directions above 10 dB.
    pub fraction_above_10db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub scenario: BlockageScenario,
    pub orientation: RotationAngles<f64>,
    pub port_loss_db: Vec<f64>,
    /// Gain of each active port toward the serving direction.
    pub serving_gain_db: Vec<f64>,
    pub best_port: Port,
    pub serving_imbalance_db: f64,
    pub probe: Option<ProbeSummary>,
}

/// Haar-uniform rotation drawn as z-y-x angles: α, γ uniform and
/// `β = asin(2u − 1)`. Consumes three `f64`s.
pub fn uniform_orientation<R: Rng + ?Sized>(rng: &mut R) -> RotationAngles<f64> {
    let a: f64 = rng.gen();
    let b: f64 = rng.gen();
    let g: f64 = rng.gen();
    RotationAngles::new(360.0 * a - 180.0, (2.0 * b - 1.0).asin().to_degrees(), 360.0 * g - 180.0)
}

/// Probe directions: cell-centred θ, φ from −180, both at `step_deg`.
pub fn probe_directions(step_deg: f64) -> Vec<Direction<f64>> {
    if step_deg <= 0.0 {
        return Vec::new();
    }
    let n_t = (180.0 / step_deg).round() as usize;
    let n_p = (360.0 / step_deg).round() as usize;
    let mut out = Vec::with_capacity(n_t * n_p);
    for i in 0..n_t {
        for j in 0..n_p {
            out.push(Direction::gcs((i as f64 + 0.5) * step_deg, -180.0 + j as f64 * step_deg).expect("probe direction"));
        }
    }
    out
}

/// Runs every replication. Replication `r` draws only from substreams of
/// `(seed, r)`, so output is identical for any thread count.
pub fn monte_carlo_run(cfg: &SimConfig) -> Result<Vec<ReplicationRecord>, SimError> {
    let seed = cfg.require_seed()?;
    let all_ports = cfg.layout.ports();
    let active: Vec<usize> = all_ports
        .iter()
        .enumerate()
        .filter(|(_, p)| cfg.run.active_ids.contains(&p.element_id))
        .map(|(i, _)| i)
        .collect();
    if active.is_empty() {
        return Err(SimError::Validation(vec!["no active ports".into()]));
    }
    let probes = probe_directions(cfg.run.probe_step_deg);
    let probe_weights: Vec<f64> = probes.iter().map(|d| d.theta().to_radians().sin()).collect();
    let probe_total: f64 = probe_weights.iter().sum();

    (0..cfg.run.replications as u64)
        .into_par_iter()
        .map(|r| {
            let scenario = sample_scenario(&cfg.probabilities, &mut substream(seed, r, Purpose::Scenario));
            let orientation = match cfg.run.orientation {
                OrientationDist::Fixed(a) => a,
                OrientationDist::Uniform => uniform_orientation(&mut substream(seed, r, Purpose::Orientation)),
            };
            let port_loss_db = port_imbalance_draw(
                cfg.port_imbalance.enabled,
                cfg.port_imbalance.range_db,
                all_ports.len(),
                &mut substream(seed, r, Purpose::PortLoss),
            )?;
            let mut ue = UeState::new(cfg.layout.clone(), orientation, scenario, cfg.run.carrier_hz, port_loss_db.clone())?;
            ue.model_a = cfg.model_a;
            let prepared = PreparedUe::new(&ue, &cfg.table)?;

            let gains_toward = |d: &Direction<f64>| -> Result<Vec<f64>, SimError> {
                active
                    .iter()
                    .map(|&p| Ok(effective_gain_db(&prepared.port_field(p, d)?)))
                    .collect()
            };
            let serving_gain_db = gains_toward(&cfg.run.serving)?;
            let (best, worst) = spread(&serving_gain_db);

            let probe = if probes.is_empty() {
                None
            } else {
                let mut max_imbalance_db = f64::NEG_INFINITY;
                let mut above = 0.0;
                for (d, w) in probes.iter().zip(&probe_weights) {
                    let g = gains_toward(d)?;
                    let (hi, lo) = spread(&g);
                    let delta = g[hi] - g[lo];
                    max_imbalance_db = max_imbalance_db.max(delta);
                    if delta > 10.0 {
                        above += w;
                    }
                }
                Some(ProbeSummary {
                    max_imbalance_db,
                    fraction_above_10db: above / probe_total,
                })
            };

            Ok(ReplicationRecord {
                replication: r,
                scenario,
                orientation,
                port_loss_db,
                best_port: all_ports[active[best]],
                serving_imbalance_db: serving_gain_db[best] - serving_gain_db[worst],
                serving_gain_db,
                probe,
            })
        })
        .collect()
}

/// Indices of the first maximum and first minimum.
fn spread(v: &[f64]) -> (usize, usize) {
    let (mut hi, mut lo) = (0, 0);
    for (i, x) in v.iter().enumerate() {
        if *x > v[hi] {
            hi = i;
        }
        if *x < v[lo] {
            lo = i;
        }
    }
    (hi, lo)
}
