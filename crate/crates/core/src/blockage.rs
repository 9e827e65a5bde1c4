//! Element-wise user blockage: usage scenarios, per-antenna per-band
//! attenuation, randomized port imbalance, and the legacy fixed-region
//! blocker that attenuates every antenna equally.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::device_layout::{LOW_BAND_IDS, LOW_BAND_LIMIT_HZ};
use crate::scalar::wrap_deg;
use crate::sphere_geom::Direction;

/// Shipped example attenuation table (placeholder values, see file header).
pub const EXAMPLE_TABLE_TOML: &str = include_str!("../data/example_attenuation.toml");

const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlockageError {
    #[error("carrier {0} Hz is not covered by any attenuation band")]
    BandNotCovered(f64),
    #[error("antenna {id} is not modelled in band {band} (below 1 GHz only antennas 4 and 8 apply)")]
    AntennaNotInBand { id: u32, band: usize },
    #[error("no attenuation entry for {scenario} antenna {id} band {band}")]
    MissingEntry { scenario: BlockageScenario, id: u32, band: usize },
    #[error("invalid scenario probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("invalid attenuation table: {}", .0.join("; "))]
    InvalidTable(Vec<String>),
    #[error("attenuation table parse error: {0}")]
    Parse(String),
    #[error("invalid loss range [{0}, {1}] dB")]
    InvalidRange(f64, f64),
    #[error("invalid blocking region: {0}")]
    InvalidRegion(&'static str),
    #[error("unknown scenario tag {0:?}")]
    UnknownScenario(String),
}

/// Usage posture selecting a column of the attenuation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockageScenario {
    FreeSpace,
    OneHandBrowsing,
    TwoHandBrowsing,
    HeadHandTalk,
}

impl BlockageScenario {
    /// Fixed enumeration order used by sampling.
    pub const ALL: [BlockageScenario; 4] = [
        BlockageScenario::FreeSpace,
        BlockageScenario::OneHandBrowsing,
        BlockageScenario::TwoHandBrowsing,
        BlockageScenario::HeadHandTalk,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::FreeSpace => "free_space",
            Self::OneHandBrowsing => "one_hand_browsing",
            Self::TwoHandBrowsing => "two_hand_browsing",
            Self::HeadHandTalk => "head_hand_talk",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BlockageScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BlockageScenario {
    type Err = BlockageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.tag() == s)
            .ok_or_else(|| BlockageError::UnknownScenario(s.to_string()))
    }
}

/// Probability of each scenario, in [`BlockageScenario::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioProbabilities([f64; 4]);

impl ScenarioProbabilities {
    pub fn new(p: [f64; 4]) -> Result<Self, BlockageError> {
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(BlockageError::InvalidProbabilities(format!("{bad} outside [0, 1]")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOL {
            return Err(BlockageError::InvalidProbabilities(format!("probabilities sum to {sum:.6}, not 1")));
        }
        Ok(Self(p))
    }

    pub fn free_space_only() -> Self {
        Self([1.0, 0.0, 0.0, 0.0])
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    pub fn get(&self, s: BlockageScenario) -> f64 {
        self.0[s.index()]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }
}

/// Inverse-CDF draw over the fixed scenario order. Consumes one `f64`.
pub fn sample_scenario<R: Rng + ?Sized>(p: &ScenarioProbabilities, rng: &mut R) -> BlockageScenario {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = BlockageScenario::FreeSpace;
    for s in BlockageScenario::ALL {
        let w = p.get(s);
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = s;
        if u < acc {
            return s;
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    #[serde(default)]
    pub provenance: String,
}

impl Band {
    /// Half-open `(f_low, f_high]`.
    pub fn contains(&self, f_hz: f64) -> bool {
        f_hz > self.f_low_hz && f_hz <= self.f_high_hz
    }

    pub fn is_low_band(&self) -> bool {
        self.f_high_hz <= LOW_BAND_LIMIT_HZ
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationRecord {
    pub scenario: BlockageScenario,
    pub antenna_id: u32,
    pub band_index: usize,
    pub attenuation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    bands: Vec<Band>,
    #[serde(default)]
    records: Vec<AttenuationRecord>,
}

/// Per (scenario, antenna, band) attenuation in dB. Free-space lookups are
/// always 0 dB.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationTable {
    bands: Vec<Band>,
    entries: BTreeMap<(BlockageScenario, u32, usize), f64>,
}

impl AttenuationTable {
    /// Builds a table, rejecting it with every violated invariant listed.
    pub fn new(bands: Vec<Band>, records: Vec<AttenuationRecord>) -> Result<Self, BlockageError> {
        let mut problems = Vec::new();
        if bands.is_empty() {
            problems.push("no bands".to_string());
        }
        for (i, b) in bands.iter().enumerate() {
            if !(b.f_low_hz.is_finite() && b.f_high_hz.is_finite() && b.f_low_hz >= 0.0 && b.f_low_hz < b.f_high_hz) {
                problems.push(format!("band {i} has invalid edges ({}, {}]", b.f_low_hz, b.f_high_hz));
            }
            if i > 0 && bands[i - 1].f_high_hz > b.f_low_hz {
                problems.push(format!("band {i} overlaps or precedes band {}", i - 1));
            }
        }
        let mut entries = BTreeMap::new();
        for r in records {
            let key = (r.scenario, r.antenna_id, r.band_index);
            if !(r.attenuation_db.is_finite() && r.attenuation_db >= 0.0) {
                problems.push(format!("{} antenna {} band {}: attenuation {} dB must be >= 0", r.scenario, r.antenna_id, r.band_index, r.attenuation_db));
            }
            if r.scenario == BlockageScenario::FreeSpace && r.attenuation_db != 0.0 {
                problems.push(format!("free-space entry for antenna {} band {} must be 0 dB", r.antenna_id, r.band_index));
            }
            match bands.get(r.band_index) {
                None => problems.push(format!("record references missing band {}", r.band_index)),
                Some(b) if b.is_low_band() && !LOW_BAND_IDS.contains(&r.antenna_id) => problems.push(format!(
                    "band {} is below 1 GHz but has an entry for antenna {}",
                    r.band_index, r.antenna_id
                )),
                Some(_) => {}
            }
            if entries.insert(key, r.attenuation_db).is_some() {
                problems.push(format!("duplicate entry for {} antenna {} band {}", r.scenario, r.antenna_id, r.band_index));
            }
        }
        if problems.is_empty() {
            Ok(Self { bands, entries })
        } else {
            Err(BlockageError::InvalidTable(problems))
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, BlockageError> {
        let file: TableFile = toml::from_str(text).map_err(|e| BlockageError::Parse(e.to_string()))?;
        Self::new(file.bands, file.records)
    }

    /// The shipped placeholder table.
    pub fn example() -> Self {
        Self::from_toml_str(EXAMPLE_TABLE_TOML).expect("shipped example table is valid")
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band_index(&self, carrier_hz: f64) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(carrier_hz))
    }

    /// Antenna ids that appear in any record.
    pub fn antenna_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.entries.keys().map(|k| k.1).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Attenuation of one antenna under a scenario at a carrier.
    pub fn element_attenuation_db(&self, s: BlockageScenario, antenna_id: u32, carrier_hz: f64) -> Result<f64, BlockageError> {
        let band = self.band_index(carrier_hz).ok_or(BlockageError::BandNotCovered(carrier_hz))?;
        if s == BlockageScenario::FreeSpace {
            return Ok(0.0);
        }
        if self.bands[band].is_low_band() && !LOW_BAND_IDS.contains(&antenna_id) {
            return Err(BlockageError::AntennaNotInBand { id: antenna_id, band });
        }
        self.entries
            .get(&(s, antenna_id, band))
            .copied()
            .ok_or(BlockageError::MissingEntry { scenario: s, id: antenna_id, band })
    }
}

/// Free function form of [`AttenuationTable::element_attenuation_db`].
pub fn element_attenuation_db(t: &AttenuationTable, s: BlockageScenario, antenna_id: u32, carrier_hz: f64) -> Result<f64, BlockageError> {
    t.element_attenuation_db(s, antenna_id, carrier_hz)
}

/// Angular box in the global frame where every antenna loses the same
/// fixed amount.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelARegion {
    pub center_phi_deg: f64,
    pub width_phi_deg: f64,
    pub center_theta_deg: f64,
    pub height_theta_deg: f64,
    #[serde(default = "default_model_a_db")]
    pub attenuation_db: f64,
}

fn default_model_a_db() -> f64 {
    30.0
}

impl ModelARegion {
    pub fn new(center_phi_deg: f64, width_phi_deg: f64, center_theta_deg: f64, height_theta_deg: f64, attenuation_db: f64) -> Result<Self, BlockageError> {
        let r = Self {
            center_phi_deg,
            width_phi_deg,
            center_theta_deg,
            height_theta_deg,
            attenuation_db,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), BlockageError> {
        if !(self.width_phi_deg > 0.0 && self.width_phi_deg <= 360.0) {
            return Err(BlockageError::InvalidRegion("width must lie in (0, 360]"));
        }
        if !(self.height_theta_deg > 0.0 && self.height_theta_deg <= 180.0) {
            return Err(BlockageError::InvalidRegion("height must lie in (0, 180]"));
        }
        if !(self.attenuation_db.is_finite() && self.attenuation_db >= 0.0) {
            return Err(BlockageError::InvalidRegion("attenuation must be >= 0"));
        }
        if !(self.center_phi_deg.is_finite() && self.center_theta_deg.is_finite()) {
            return Err(BlockageError::InvalidRegion("non-finite centre"));
        }
        Ok(())
    }

    /// Boundary-inclusive membership test.
    pub fn contains(&self, theta_deg: f64, phi_deg: f64) -> bool {
        let dphi = if self.width_phi_deg >= 360.0 { 0.0 } else { wrap_deg(phi_deg - self.center_phi_deg).abs() };
        dphi <= self.width_phi_deg / 2.0 && (theta_deg - self.center_theta_deg).abs() <= self.height_theta_deg / 2.0
    }

    pub fn attenuation_db(&self, d: &Direction<f64>) -> f64 {
        if self.contains(d.theta(), d.phi()) {
            self.attenuation_db
        } else {
            0.0
        }
    }
}

/// Free function form of [`ModelARegion::attenuation_db`].
pub fn model_a_attenuation_db(r: &ModelARegion, d: &Direction<f64>) -> f64 {
    r.attenuation_db(d)
}

pub const DEFAULT_PORT_LOSS_RANGE_DB: (f64, f64) = (2.0, 3.0);

/// Per-port extra loss. Disabled gives zeros; enabled draws independent
/// uniforms in `[lo, hi]`, one `f64` per port.
pub fn port_imbalance_draw<R: Rng + ?Sized>(enabled: bool, range_db: (f64, f64), n_ports: usize, rng: &mut R) -> Result<Vec<f64>, BlockageError> {
    let (lo, hi) = range_db;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
        return Err(BlockageError::InvalidRange(lo, hi));
    }
    if !enabled {
        return Ok(vec![0.0; n_ports]);
    }
    Ok((0..n_ports)
        .map(|_| {
            let u: f64 = rng.gen();
            (lo + (hi - lo) * u).min(hi)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probabilities_validated() {
        assert!(ScenarioProbabilities::new([0.5, 0.2, 0.2, 0.2]).is_err());
        assert!(ScenarioProbabilities::new([1.2, -0.2, 0.0, 0.0]).is_err());
        assert!(ScenarioProbabilities::new([0.1, 0.2, 0.3, 0.4]).is_ok());
    }

    #[test]
    fn degenerate_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let p = ScenarioProbabilities::free_space_only();
        assert!((0..1000).all(|_| sample_scenario(&p, &mut rng) == BlockageScenario::FreeSpace));
        let p = ScenarioProbabilities::new([0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((0..1000).all(|_| sample_scenario(&p, &mut rng) == BlockageScenario::HeadHandTalk));
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = ScenarioProbabilities::uniform();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200).map(|_| sample_scenario(&p, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn uniform_frequencies() {
        let p = ScenarioProbabilities::uniform();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[sample_scenario(&p, &mut rng).index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() <= 0.01);
        }
    }

    #[test]
    fn example_table_lookups() {
        let t = AttenuationTable::example();
        assert_eq!(t.element_attenuation_db(BlockageScenario::FreeSpace, 6, 3.5e9), Ok(0.0));
        assert_eq!(t.element_attenuation_db(BlockageScenario::OneHandBrowsing, 4, 2.0e9), Ok(10.8));
        assert_eq!(
            t.element_attenuation_db(BlockageScenario::OneHandBrowsing, 1, 0.8e9),
            Err(BlockageError::AntennaNotInBand { id: 1, band: 0 })
        );
        assert_eq!(
            t.element_attenuation_db(BlockageScenario::OneHandBrowsing, 4, 10e9),
            Err(BlockageError::BandNotCovered(10e9))
        );
        assert!(t.bands().iter().all(|b| b.provenance == "example"));
        assert_eq!(t.antenna_ids(), (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn band_edges_are_half_open() {
        let t = AttenuationTable::example();
        assert_eq!(t.band_index(1.0e9), Some(0));
        assert_eq!(t.band_index(1.0e9 + 1.0), Some(1));
        assert_eq!(t.band_index(0.6e9), None);
        assert_eq!(t.band_index(8.4e9), Some(1));
    }

    #[test]
    fn table_invariants_rejected() {
        let bands = vec![
            Band { f_low_hz: 0.6e9, f_high_hz: 1.0e9, provenance: String::new() },
            Band { f_low_hz: 0.9e9, f_high_hz: 8.4e9, provenance: String::new() },
        ];
        let rec = |scenario, antenna_id, band_index, attenuation_db| AttenuationRecord { scenario, antenna_id, band_index, attenuation_db };
        let err = AttenuationTable::new(
            bands,
            vec![
                rec(BlockageScenario::FreeSpace, 4, 0, 1.0),
                rec(BlockageScenario::OneHandBrowsing, 2, 0, 3.0),
                rec(BlockageScenario::OneHandBrowsing, 2, 1, -1.0),
                rec(BlockageScenario::OneHandBrowsing, 2, 5, 1.0),
            ],
        )
        .unwrap_err();
        let BlockageError::InvalidTable(problems) = err else { panic!() };
        assert_eq!(problems.len(), 5, "{problems:?}");
    }

    #[test]
    fn missing_entry_is_an_error() {
        let t = AttenuationTable::from_toml_str("[[bands]]\nf_low_hz = 1e9\nf_high_hz = 2e9\n").unwrap();
        assert!(matches!(
            t.element_attenuation_db(BlockageScenario::HeadHandTalk, 1, 1.5e9),
            Err(BlockageError::MissingEntry { .. })
        ));
    }

    #[test]
    fn model_a_region() {
        let r = ModelARegion::new(0.0, 120.0, 90.0, 60.0, 30.0).unwrap();
        let d = |t, p| Direction::gcs(t, p).unwrap();
        assert_eq!(r.attenuation_db(&d(90.0, 0.0)), 30.0);
        assert_eq!(r.attenuation_db(&d(90.0, 180.0)), 0.0);
        assert_eq!(r.attenuation_db(&d(90.0, 60.0)), 30.0);
        assert_eq!(r.attenuation_db(&d(90.0, -60.0)), 30.0);
        assert_eq!(r.attenuation_db(&d(120.0, 0.0)), 30.0);
        assert_eq!(r.attenuation_db(&d(120.1, 0.0)), 0.0);
        let wrap = ModelARegion::new(170.0, 40.0, 90.0, 180.0, 30.0).unwrap();
        assert_eq!(wrap.attenuation_db(&d(45.0, -170.0)), 30.0);
        assert!(ModelARegion::new(0.0, 0.0, 90.0, 10.0, 30.0).is_err());
        assert!(ModelARegion::new(0.0, 10.0, 90.0, 181.0, 30.0).is_err());
    }

    #[test]
    fn port_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(port_imbalance_draw(false, (2.0, 3.0), 8, &mut rng).unwrap(), vec![0.0; 8]);
        let v = port_imbalance_draw(true, (2.0, 3.0), 8, &mut rng).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|x| (2.0..=3.0).contains(x)));
        assert_eq!(port_imbalance_draw(true, (2.0, 2.0), 4, &mut rng).unwrap(), vec![2.0; 4]);
        assert_eq!(port_imbalance_draw(true, (3.0, 2.0), 4, &mut rng), Err(BlockageError::InvalidRange(3.0, 2.0)));
    }

    #[test]
    fn scenario_tags_round_trip() {
        for s in BlockageScenario::ALL {
            assert_eq!(s.tag().parse::<BlockageScenario>().unwrap(), s);
        }
        assert!("sitting".parse::<BlockageScenario>().is_err());
    }
}
