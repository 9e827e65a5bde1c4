//! CSV output for each subcommand.
//!
//! All files are UTF-8 with a header row and `.` decimals. Floats are
//! written in shortest round-trip form, so re-parsing a file reproduces
//! the in-memory values exactly.
//!
//! | file          | columns                                                            |
//! |---------------|--------------------------------------------------------------------|
//! | pattern cut   | `phi_deg, gain_dbi` or `phi_deg, ant_<port>_dbi...`                 |
//! | sphere map    | `theta_deg, phi_deg, ant_<port>_dbi...`                             |
//! | imbalance     | `imbalance_db, cdf` (solid-angle weighted)                          |
//! | combine       | `ant_a, ant_b, peak_a_dbi, peak_b_dbi, combined_peak_dbi, gain_over_best_single_db` |
//! | blockage MC   | `replication, scenario, alpha_deg, beta_deg, gamma_deg, loss_<port>_db..., gain_<port>_dbi..., best_port, serving_imbalance_db[, probe_max_imbalance_db, probe_frac_above_10db]` |

use std::path::Path;

use super::cdf::EmpiricalCdf;
use super::config::SimConfig;
use super::mc::{monte_carlo_run, ReplicationRecord};
use super::{io_err, SimError};
use crate::field_synthesis::{effective_gain_db, imbalance_stats, pairwise_combining, sweep_prepared, GainGrid, PairCombining, PreparedUe, UeState};
use crate::sphere_geom::Direction;

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a CSV written by this module: header plus string cells.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), SimError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| io_err(path, e))?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Device state used by the deterministic subcommands: the nominal
/// orientation, `run.scenario` and no port loss.
pub fn nominal_state(cfg: &SimConfig) -> Result<UeState<f64>, SimError> {
    let n = cfg.layout.port_count();
    let mut u = UeState::new(cfg.layout.clone(), cfg.run.orientation.nominal(), cfg.run.scenario, cfg.run.carrier_hz, vec![0.0; n])?;
    u.model_a = cfg.model_a;
    Ok(u)
}

fn active_ports(prepared: &PreparedUe<f64>, ids: &[u32]) -> Vec<usize> {
    prepared
        .ports()
        .iter()
        .enumerate()
        .filter(|(_, p)| ids.contains(&p.element_id))
        .map(|(i, _)| i)
        .collect()
}

/// A cut at fixed `theta_deg` with `phi` stepping by `run.phi_step_deg`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCut {
    pub header: Vec<String>,
    pub phi_deg: Vec<f64>,
    /// One column per series.
    pub columns: Vec<Vec<f64>>,
}

/// Builds a cut of either the raw antenna-frame pattern or every active
/// port in the global frame. `normalize` subtracts each series' peak.
pub fn pattern_cut(cfg: &SimConfig, theta_deg: f64, normalize: bool, raw: bool) -> Result<PatternCut, SimError> {
    let step = cfg.run.phi_step_deg;
    let n = (360.0 / step).round() as usize;
    let phi_deg: Vec<f64> = (0..n).map(|j| -180.0 + j as f64 * step).collect();
    let (header, mut columns) = if raw {
        let col = phi_deg
            .iter()
            .map(|&p| Ok(cfg.pattern.gain_db(&Direction::acs(theta_deg, p).map_err(crate::field_synthesis::SynthesisError::from)?)))
            .collect::<Result<Vec<f64>, SimError>>()?;
        (vec!["phi_deg".to_string(), "gain_dbi".to_string()], vec![col])
    } else {
        let prepared = PreparedUe::new(&nominal_state(cfg)?, &cfg.table)?;
        let ports = active_ports(&prepared, &cfg.run.active_ids);
        let all = prepared.ports();
        let mut header = vec!["phi_deg".to_string()];
        header.extend(ports.iter().map(|&p| format!("ant_{}_dbi", all[p])));
        let mut cols = vec![Vec::with_capacity(n); ports.len()];
        for &p in &phi_deg {
            let d = Direction::gcs(theta_deg, p).map_err(crate::field_synthesis::SynthesisError::from)?;
            for (c, &port) in cols.iter_mut().zip(&ports) {
                c.push(effective_gain_db(&prepared.port_field(port, &d)?));
            }
        }
        (header, cols)
    };
    if normalize {
        for c in &mut columns {
            let peak = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            c.iter_mut().for_each(|v| *v -= peak);
        }
    }
    Ok(PatternCut { header, phi_deg, columns })
}

/// Writes a pattern cut and returns the number of data rows.
pub fn pattern_cut_export(cfg: &SimConfig, theta_deg: f64, normalize: bool, raw: bool, out: &Path) -> Result<usize, SimError> {
    let cut = pattern_cut(cfg, theta_deg, normalize, raw)?;
    let rows: Vec<Vec<String>> = cut
        .phi_deg
        .iter()
        .enumerate()
        .map(|(j, &p)| std::iter::once(num(p)).chain(cut.columns.iter().map(|c| num(c[j]))).collect())
        .collect();
    write_csv(out, &cut.header, &rows)?;
    Ok(rows.len())
}

/// Full-sphere sweep of the nominal device state.
pub fn nominal_sweep(cfg: &SimConfig) -> Result<GainGrid<f64>, SimError> {
    let prepared = PreparedUe::new(&nominal_state(cfg)?, &cfg.table)?;
    Ok(sweep_prepared(&prepared, cfg.run.theta_step_deg, cfg.run.phi_step_deg)?)
}

pub fn sphere_map_export(cfg: &SimConfig, out: &Path) -> Result<usize, SimError> {
    let g = nominal_sweep(cfg)?;
    let ports = g.port_indices(&cfg.run.active_ids)?;
    let mut header = vec!["theta_deg".to_string(), "phi_deg".to_string()];
    header.extend(ports.iter().map(|&p| format!("ant_{}_dbi", g.ports[p])));
    let rows: Vec<Vec<String>> = (0..g.len())
        .map(|k| {
            let mut row = vec![num(g.theta_at(k / g.n_phi)), num(g.phi_at(k % g.n_phi))];
            row.extend(ports.iter().map(|&p| num(g.gain_db[p][k])));
            row
        })
        .collect();
    write_csv(out, &header, &rows)?;
    Ok(rows.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceSummary {
    pub max_db: f64,
    pub mean_db: f64,
    pub fraction_above_10db: f64,
    pub cdf: EmpiricalCdf,
}

pub fn imbalance_summary(cfg: &SimConfig) -> Result<ImbalanceSummary, SimError> {
    let g = nominal_sweep(cfg)?;
    let s = imbalance_stats(&g, &cfg.run.active_ids)?;
    Ok(ImbalanceSummary {
        max_db: s.max_db,
        mean_db: s.mean_db(),
        fraction_above_10db: s.fraction_above(10.0),
        cdf: EmpiricalCdf::weighted(&s.delta_db, &s.weights)?,
    })
}

pub fn imbalance_export(cfg: &SimConfig, out: &Path) -> Result<ImbalanceSummary, SimError> {
    let s = imbalance_summary(cfg)?;
    let rows: Vec<Vec<String>> = s.cdf.points().iter().map(|(v, p)| vec![num(*v), num(*p)]).collect();
    write_csv(out, &["imbalance_db".into(), "cdf".into()], &rows)?;
    Ok(s)
}

pub fn combine_study(cfg: &SimConfig) -> Result<Vec<PairCombining<f64>>, SimError> {
    let g = nominal_sweep(cfg)?;
    let carrier = cfg.run.position_phase.then_some(cfg.run.carrier_hz);
    Ok(pairwise_combining(&g, &cfg.run.active_ids, carrier)?)
}

pub fn combine_export(cfg: &SimConfig, out: &Path) -> Result<Vec<PairCombining<f64>>, SimError> {
    let pairs = combine_study(cfg)?;
    let header: Vec<String> = ["ant_a", "ant_b", "peak_a_dbi", "peak_b_dbi", "combined_peak_dbi", "gain_over_best_single_db"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|p| {
            vec![
                p.a.to_string(),
                p.b.to_string(),
                num(p.peak_a_db),
                num(p.peak_b_db),
                num(p.combined_peak_db),
                num(p.gain_over_best_single_db()),
            ]
        })
        .collect();
    write_csv(out, &header, &rows)?;
    Ok(pairs)
}

pub fn records_to_csv(cfg: &SimConfig, records: &[ReplicationRecord]) -> (Vec<String>, Vec<Vec<String>>) {
    let ports = cfg.layout.ports();
    let active: Vec<_> = ports.iter().filter(|p| cfg.run.active_ids.contains(&p.element_id)).collect();
    let with_probe = records.first().is_some_and(|r| r.probe.is_some());
    let mut header: Vec<String> = ["replication", "scenario", "alpha_deg", "beta_deg", "gamma_deg"].iter().map(|s| s.to_string()).collect();
    header.extend(ports.iter().map(|p| format!("loss_{p}_db")));
    header.extend(active.iter().map(|p| format!("gain_{p}_dbi")));
    header.push("best_port".into());
    header.push("serving_imbalance_db".into());
    if with_probe {
        header.push("probe_max_imbalance_db".into());
        header.push("probe_frac_above_10db".into());
    }
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.replication.to_string(),
                r.scenario.to_string(),
                num(r.orientation.alpha),
                num(r.orientation.beta),
                num(r.orientation.gamma),
            ];
            row.extend(r.port_loss_db.iter().map(|v| num(*v)));
            row.extend(r.serving_gain_db.iter().map(|v| num(*v)));
            row.push(r.best_port.to_string());
            row.push(num(r.serving_imbalance_db));
            if let Some(p) = &r.probe {
                row.push(num(p.max_imbalance_db));
                row.push(num(p.fraction_above_10db));
            }
            row
        })
        .collect();
    (header, rows)
}

pub fn blockage_mc_export(cfg: &SimConfig, out: &Path) -> Result<Vec<ReplicationRecord>, SimError> {
    let records = monte_carlo_run(cfg)?;
    let (header, rows) = records_to_csv(cfg, &records);
    write_csv(out, &header, &rows)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> SimConfig {
        SimConfig::from_toml_str(text, Path::new(".")).unwrap()
    }

    #[test]
    fn raw_cut_values() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("cut.csv");
        let n = pattern_cut_export(&cfg(""), 90.0, false, true, &out).unwrap();
        assert_eq!(n, 360);
        let (header, rows) = read_csv(&out).unwrap();
        assert_eq!(header, vec!["phi_deg", "gain_dbi"]);
        let at = |phi: f64| rows.iter().find(|r| r[0].parse::<f64>().unwrap() == phi).unwrap()[1].parse::<f64>().unwrap();
        assert!((at(0.0) - 5.3).abs() < 1e-12);
        assert!((at(-180.0) + 17.2).abs() < 1e-12);
    }

    #[test]
    fn normalized_cut() {
        let cut = pattern_cut(&cfg(""), 90.0, true, true).unwrap();
        let j0 = cut.phi_deg.iter().position(|p| *p == 0.0).unwrap();
        assert_eq!(cut.columns[0][j0], 0.0);
        assert!((cut.columns[0][0] + 22.5).abs() < 1e-12);
    }

    #[test]
    fn per_antenna_cut_has_one_column_per_port() {
        let cut = pattern_cut(&cfg("[run]\nactive_ids = [3, 7]\n"), 90.0, false, false).unwrap();
        assert_eq!(cut.header, vec!["phi_deg", "ant_3_dbi", "ant_7_dbi"]);
        let j0 = cut.phi_deg.iter().position(|p| *p == 0.0).unwrap();
        assert!((cut.columns[0][j0] - 5.3).abs() < 1e-9);
        assert!((cut.columns[1][j0] + 17.2).abs() < 1e-9);
    }

    #[test]
    fn sphere_map_round_trips() {
        let c = cfg("[run]\ntheta_step_deg = 15.0\nphi_step_deg = 30.0\n");
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("map.csv");
        assert_eq!(sphere_map_export(&c, &out).unwrap(), 12 * 12);
        let g = nominal_sweep(&c).unwrap();
        let (header, rows) = read_csv(&out).unwrap();
        assert_eq!(header.len(), 10);
        for (k, row) in rows.iter().enumerate() {
            for p in 0..8 {
                assert_eq!(row[2 + p].parse::<f64>().unwrap(), g.gain_db[p][k]);
            }
        }
    }

    #[test]
    fn mc_csv_round_trips() {
        let c = cfg("[blockage.probabilities]\nfree_space = 0.25\none_hand_browsing = 0.25\ntwo_hand_browsing = 0.25\nhead_hand_talk = 0.25\n[blockage.port_imbalance]\nenabled = true\n[run]\nseed = 9\nreplications = 16\nprobe_step_deg = 30.0\n[run.orientation]\nmode = \"uniform\"\n");
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("mc.csv");
        let recs = blockage_mc_export(&c, &out).unwrap();
        let (header, rows) = read_csv(&out).unwrap();
        assert_eq!(rows.len(), 16);
        assert_eq!(header.len(), 5 + 8 + 8 + 2 + 2);
        for (r, row) in recs.iter().zip(&rows) {
            assert_eq!(row[1], r.scenario.to_string());
            assert_eq!(row[2].parse::<f64>().unwrap(), r.orientation.alpha);
            for (k, g) in r.serving_gain_db.iter().enumerate() {
                assert_eq!(row[13 + k].parse::<f64>().unwrap(), *g);
            }
            assert!(r.port_loss_db.iter().all(|l| (2.0..=3.0).contains(l)));
        }
    }
}
