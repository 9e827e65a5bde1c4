//! TOML run configuration. Every section and key is optional; see
//! `docs/config.md` for the full schema.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::SimError;
use crate::blockage::{AttenuationTable, BlockageError, BlockageScenario, ModelARegion, ScenarioProbabilities, DEFAULT_PORT_LOSS_RANGE_DB};
use crate::device_layout::{self, parse_layout_overrides, DeviceLayout, ElementSpec, LayoutKind};
use crate::element_pattern::PatternParams;
use crate::sphere_geom::{Direction, RotationAngles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum RawLayoutKind {
    #[default]
    Handheld,
    Cpe,
    LegacyArray,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    #[serde(default)]
    kind: RawLayoutKind,
    file: Option<PathBuf>,
    n_ports: Option<usize>,
    #[serde(default)]
    elements: Vec<ElementSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum RawPatternKind {
    #[default]
    Directive,
    Isotropic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPattern {
    kind: RawPatternKind,
    g_max_dbi: f64,
    theta_3db_deg: f64,
    phi_3db_deg: f64,
    sla_v_db: f64,
    a_max_db: f64,
}

impl Default for RawPattern {
    fn default() -> Self {
        let d = PatternParams::<f64>::directive_default();
        Self {
            kind: RawPatternKind::Directive,
            g_max_dbi: d.g_max,
            theta_3db_deg: d.theta_3db,
            phi_3db_deg: d.phi_3db,
            sla_v_db: d.sla_v,
            a_max_db: d.a_max,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawProbabilities {
    free_space: f64,
    one_hand_browsing: f64,
    two_hand_browsing: f64,
    head_hand_talk: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPortImbalance {
    enabled: bool,
    range_db: [f64; 2],
}

impl Default for RawPortImbalance {
    fn default() -> Self {
        Self {
            enabled: false,
            range_db: [DEFAULT_PORT_LOSS_RANGE_DB.0, DEFAULT_PORT_LOSS_RANGE_DB.1],
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlockage {
    probabilities: Option<RawProbabilities>,
    table: Option<PathBuf>,
    model_a: Option<ModelARegion>,
    #[serde(default)]
    port_imbalance: RawPortImbalance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum RawOrientationMode {
    #[default]
    Fixed,
    Uniform,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOrientation {
    mode: RawOrientationMode,
    alpha_deg: f64,
    beta_deg: f64,
    gamma_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDirection {
    theta_deg: f64,
    phi_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRun {
    seed: Option<u64>,
    replications: usize,
    theta_step_deg: f64,
    phi_step_deg: f64,
    carrier_hz: f64,
    active_ids: Option<Vec<u32>>,
    scenario: BlockageScenario,
    serving: RawDirection,
    probe_step_deg: f64,
    position_phase: bool,
    orientation: RawOrientation,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            seed: None,
            replications: 1000,
            theta_step_deg: 1.0,
            phi_step_deg: 1.0,
            carrier_hz: 3.5e9,
            active_ids: None,
            scenario: BlockageScenario::FreeSpace,
            serving: RawDirection { theta_deg: 90.0, phi_deg: 0.0 },
            probe_step_deg: 10.0,
            position_phase: false,
            orientation: RawOrientation::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    layout: RawLayout,
    #[serde(default)]
    pattern: RawPattern,
    #[serde(default)]
    blockage: RawBlockage,
    #[serde(default)]
    run: RawRun,
}

/// How the device orientation Ω_UT is chosen per replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrientationDist {
    Fixed(RotationAngles<f64>),
    /// Haar-uniform over all rotations.
    Uniform,
}

impl OrientationDist {
    /// Orientation used by the deterministic subcommands.
    pub fn nominal(&self) -> RotationAngles<f64> {
        match self {
            Self::Fixed(a) => *a,
            Self::Uniform => RotationAngles::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortImbalance {
    pub enabled: bool,
    pub range_db: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub seed: Option<u64>,
    pub replications: usize,
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
    pub carrier_hz: f64,
    pub active_ids: Vec<u32>,
    /// Scenario for the deterministic subcommands.
    pub scenario: BlockageScenario,
    pub serving: Direction<f64>,
    /// 0 disables the probe grid.
    pub probe_step_deg: f64,
    /// Apply geometric position phase when combining.
    pub position_phase: bool,
    pub orientation: OrientationDist,
}

/// Fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub layout: DeviceLayout<f64>,
    pub pattern: PatternParams<f64>,
    pub probabilities: ScenarioProbabilities,
    pub table: AttenuationTable,
    pub model_a: Option<ModelARegion>,
    pub port_imbalance: PortImbalance,
    pub run: RunSettings,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::from_toml_str("", Path::new(".")).expect("default configuration is valid")
    }
}

fn divides(span: f64, step: f64) -> bool {
    if !(step.is_finite() && step > 0.0) {
        return false;
    }
    let n = span / step;
    n >= 1.0 && (n - n.round()).abs() <= 1e-9
}

impl SimConfig {
    /// Parses and validates config text. Relative file paths resolve
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, SimError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        build(raw, base_dir)
    }

    /// Replaces the seed, e.g. from a command-line flag.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if seed.is_some() {
            self.run.seed = seed;
        }
        self
    }

    pub fn require_seed(&self) -> Result<u64, SimError> {
        self.run.seed.ok_or_else(|| SimError::Validation(vec!["run.seed is required for randomized runs".into()]))
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(path.display().to_string(), e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    SimConfig::from_toml_str(&text, base)
}

fn read_rel(base: &Path, p: &Path) -> Result<String, String> {
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    std::fs::read_to_string(&full).map_err(|e| format!("cannot read {}: {e}", full.display()))
}

fn build(raw: RawConfig, base: &Path) -> Result<SimConfig, SimError> {
    let mut problems: Vec<String> = Vec::new();

    let pattern = match raw.pattern.kind {
        RawPatternKind::Isotropic => PatternParams::isotropic(),
        RawPatternKind::Directive => {
            let p = &raw.pattern;
            match PatternParams::new(p.g_max_dbi, p.theta_3db_deg, p.phi_3db_deg, p.sla_v_db, p.a_max_db) {
                Ok(p) => p,
                Err(e) => {
                    problems.push(format!("pattern: {e}"));
                    PatternParams::directive_default()
                }
            }
        }
    };

    let run = &raw.run;
    let mut layout = match raw.layout.kind {
        RawLayoutKind::Handheld => {
            let mut l = device_layout::reference_handset::<f64>();
            for e in &mut l.elements {
                e.pattern = pattern;
            }
            l
        }
        RawLayoutKind::Cpe => device_layout::cpe_reference(),
        RawLayoutKind::LegacyArray => {
            let n = raw.layout.n_ports.unwrap_or(4);
            match device_layout::legacy_halfwave_array(n, run.carrier_hz) {
                Ok(l) => l,
                Err(e) => {
                    problems.push(format!("layout: {e}"));
                    device_layout::legacy_halfwave_array(4, 3.5e9).expect("fallback layout")
                }
            }
        }
    };
    let mut specs = Vec::new();
    if let Some(file) = &raw.layout.file {
        match read_rel(base, file).and_then(|t| parse_layout_overrides(&t).map_err(|e| e.to_string())) {
            Ok(s) => specs.extend(s),
            Err(e) => problems.push(format!("layout file: {e}")),
        }
    }
    specs.extend(raw.layout.elements.iter().cloned());
    let element_pattern = if layout.kind == LayoutKind::LegacyArray { PatternParams::isotropic() } else { pattern };
    layout.apply_overrides(specs.iter().map(|s| s.to_element(element_pattern)));

    let probabilities = match raw.blockage.probabilities {
        None => ScenarioProbabilities::free_space_only(),
        Some(p) => match ScenarioProbabilities::new([p.free_space, p.one_hand_browsing, p.two_hand_browsing, p.head_hand_talk]) {
            Ok(p) => p,
            Err(e) => {
                problems.push(format!("blockage.probabilities: {e}"));
                ScenarioProbabilities::free_space_only()
            }
        },
    };

    let table = match &raw.blockage.table {
        None => AttenuationTable::example(),
        Some(path) => match read_rel(base, path) {
            Err(e) => {
                problems.push(format!("blockage.table: {e}"));
                AttenuationTable::example()
            }
            Ok(text) => match AttenuationTable::from_toml_str(&text) {
                Ok(t) => t,
                Err(BlockageError::InvalidTable(list)) => {
                    problems.extend(list.into_iter().map(|p| format!("blockage.table: {p}")));
                    AttenuationTable::example()
                }
                Err(e) => {
                    problems.push(format!("blockage.table: {e}"));
                    AttenuationTable::example()
                }
            },
        },
    };
    if layout.kind != LayoutKind::LegacyArray {
        for id in table.antenna_ids() {
            if layout.element(id).is_none() {
                problems.push(format!("blockage.table: unknown antenna id {id}"));
            }
        }
    }

    if let Some(r) = &raw.blockage.model_a {
        if let Err(e) = r.validate() {
            problems.push(format!("blockage.model_a: {e}"));
        }
    }
    let [lo, hi] = raw.blockage.port_imbalance.range_db;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
        problems.push(format!("blockage.port_imbalance: invalid range [{lo}, {hi}] dB"));
    }

    if !(run.carrier_hz.is_finite() && run.carrier_hz > 0.0) {
        problems.push(format!("run.carrier_hz must be positive, got {}", run.carrier_hz));
    } else if table.band_index(run.carrier_hz).is_none() {
        problems.push(format!("run.carrier_hz {} Hz falls outside every attenuation band", run.carrier_hz));
    }
    if run.replications == 0 {
        problems.push("run.replications must be at least 1".into());
    }
    if !divides(180.0, run.theta_step_deg) {
        problems.push(format!("run.theta_step_deg {} must evenly divide 180", run.theta_step_deg));
    }
    if !divides(360.0, run.phi_step_deg) {
        problems.push(format!("run.phi_step_deg {} must evenly divide 360", run.phi_step_deg));
    }
    if run.probe_step_deg != 0.0 && !(divides(180.0, run.probe_step_deg) && divides(360.0, run.probe_step_deg)) {
        problems.push(format!("run.probe_step_deg {} must evenly divide 180 and 360", run.probe_step_deg));
    }
    let serving = match Direction::gcs(run.serving.theta_deg, run.serving.phi_deg) {
        Ok(d) if !d.is_near_pole() => d,
        _ => {
            problems.push("run.serving must have 0 < theta_deg < 180".into());
            Direction::gcs(90.0, 0.0).expect("fallback direction")
        }
    };

    let active_ids = run.active_ids.clone().unwrap_or_else(|| layout.ids());
    if active_ids.is_empty() {
        problems.push("run.active_ids is empty and the layout has no elements".into());
    }
    for v in device_layout::validate(&layout, run.carrier_hz, &active_ids) {
        problems.push(format!("layout: {v}"));
    }

    let o = &run.orientation;
    let orientation = match o.mode {
        RawOrientationMode::Fixed => OrientationDist::Fixed(RotationAngles::new(o.alpha_deg, o.beta_deg, o.gamma_deg)),
        RawOrientationMode::Uniform => OrientationDist::Uniform,
    };

    if !problems.is_empty() {
        return Err(SimError::Validation(problems));
    }
    Ok(SimConfig {
        layout,
        pattern,
        probabilities,
        table,
        model_a: raw.blockage.model_a,
        port_imbalance: PortImbalance {
            enabled: raw.blockage.port_imbalance.enabled,
            range_db: (lo, hi),
        },
        run: RunSettings {
            seed: run.seed,
            replications: run.replications,
            theta_step_deg: run.theta_step_deg,
            phi_step_deg: run.phi_step_deg,
            carrier_hz: run.carrier_hz,
            active_ids,
            scenario: run.scenario,
            serving,
            probe_step_deg: run.probe_step_deg,
            position_phase: run.position_phase,
            orientation,
        },
    })
}
