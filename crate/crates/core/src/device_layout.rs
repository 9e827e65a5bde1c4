//! Reference device geometries.
//!
//! Device frame: x across the width, y along the length (top of the phone
//! at +y), z out of the screen, origin at the device centre. Positions are
//! in millimetres.

use std::collections::BTreeSet;
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::element_pattern::PatternParams;
use crate::scalar::{dot, Real, Vec3};
use crate::sphere_geom::{rotation_matrix, RotationAngles};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carriers at or below this frequency only support antennas 4 and 8.
pub const LOW_BAND_LIMIT_HZ: f64 = 1.0e9;
pub const LOW_BAND_IDS: [u32; 2] = [4, 8];

const OUTLINE_TOL_MM: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("port count {0} not in {{2, 4, 8}}")]
    InvalidPortCount(usize),
    #[error("carrier frequency must be positive and finite, got {0}")]
    InvalidCarrier(f64),
    #[error("layout file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    Handheld,
    Cpe,
    LegacyArray,
}

/// One polarization of an antenna location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    /// Pattern rolled by the element's γ.
    Primary,
    /// Pattern rolled by γ + 90°, present on dual-polarized locations.
    Secondary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaElement<T> {
    pub id: u32,
    pub position_mm: Vec3<T>,
    /// Rotation taking antenna-frame vectors into the device frame.
    pub orientation: RotationAngles<T>,
    pub pattern: PatternParams<T>,
    pub dual_polarized: bool,
}

impl<T: Real> AntennaElement<T> {
    /// Boresight (`x̂''`) expressed in the device frame.
    pub fn boresight_lcs(&self) -> Vec3<T> {
        rotation_matrix(&self.orientation).apply(&[T::one(), T::zero(), T::zero()])
    }

    /// Orientation of one polarization port.
    pub fn port_orientation(&self, pol: Polarization) -> RotationAngles<T> {
        match pol {
            Polarization::Primary => self.orientation,
            Polarization::Secondary => RotationAngles::new(
                self.orientation.alpha,
                self.orientation.beta,
                self.orientation.gamma + T::lit(90.0),
            ),
        }
    }
}

/// A single radiating port: an element and one of its polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Port {
    pub element_index: usize,
    pub element_id: u32,
    pub polarization: Polarization,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarization {
            Polarization::Primary => write!(f, "{}", self.element_id),
            Polarization::Secondary => write!(f, "{}x", self.element_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceLayout<T> {
    pub kind: LayoutKind,
    /// (length, width, height) in mm.
    pub form_factor_mm: Vec3<T>,
    pub elements: Vec<AntennaElement<T>>,
}

impl<T: Real> DeviceLayout<T> {
    pub fn element(&self, id: u32) -> Option<&AntennaElement<T>> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// All ports in element order, primary before secondary.
    pub fn ports(&self) -> Vec<Port> {
        let mut out = Vec::with_capacity(self.elements.len() * 2);
        for (i, e) in self.elements.iter().enumerate() {
            out.push(Port {
                element_index: i,
                element_id: e.id,
                polarization: Polarization::Primary,
            });
            if e.dual_polarized {
                out.push(Port {
                    element_index: i,
                    element_id: e.id,
                    polarization: Polarization::Secondary,
                });
            }
        }
        out
    }

    pub fn port_count(&self) -> usize {
        self.elements.iter().map(|e| if e.dual_polarized { 2 } else { 1 }).sum()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.elements.iter().map(|e| e.id).collect()
    }

    /// Replaces or appends elements by id.
    pub fn apply_overrides(&mut self, overrides: impl IntoIterator<Item = AntennaElement<T>>) {
        for o in overrides {
            match self.elements.iter_mut().find(|e| e.id == o.id) {
                Some(slot) => *slot = o,
                None => self.elements.push(o),
            }
        }
    }
}

/// Eight candidate locations on the 150 × 70 mm handset outline, each
/// pointing outward from the device centre with the directive pattern.
///
/// ```text
///        #1 ---- #8 ---- #2        +y
///        |                |         ^
///       #7                #3        |
///        |                |         +--> +x
///        #6 ---- #4 ---- #5
/// ```
pub fn reference_handset<T: Real>() -> DeviceLayout<T> {
    let (hw, hl) = (35.0, 75.0);
    let spots: [(u32, f64, f64); 8] = [
        (1, -hw, hl),
        (2, hw, hl),
        (3, hw, 0.0),
        (4, 0.0, -hl),
        (5, hw, -hl),
        (6, -hw, -hl),
        (7, -hw, 0.0),
        (8, 0.0, hl),
    ];
    let elements = spots
        .iter()
        .map(|&(id, x, y)| AntennaElement {
            id,
            position_mm: [T::lit(x), T::lit(y), T::zero()],
            orientation: RotationAngles::new(T::lit(y.atan2(x).to_degrees()), T::zero(), T::zero()),
            pattern: PatternParams::directive_default(),
            dual_polarized: false,
        })
        .collect();
    DeviceLayout {
        kind: LayoutKind::Handheld,
        form_factor_mm: [T::lit(150.0), T::lit(70.0), T::zero()],
        elements,
    }
}

/// Bare 0 × 200 × 200 mm CPE panel; antennas come from configuration.
pub fn cpe_reference<T: Real>() -> DeviceLayout<T> {
    DeviceLayout {
        kind: LayoutKind::Cpe,
        form_factor_mm: [T::zero(), T::lit(200.0), T::lit(200.0)],
        elements: Vec::new(),
    }
}

/// Legacy isotropic array: `n_ports / 2` dual-polarized locations along x
/// at half-wavelength spacing, centred on the origin.
pub fn legacy_halfwave_array<T: Real>(n_ports: usize, carrier_hz: f64) -> Result<DeviceLayout<T>, LayoutError> {
    if !matches!(n_ports, 2 | 4 | 8) {
        return Err(LayoutError::InvalidPortCount(n_ports));
    }
    if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
        return Err(LayoutError::InvalidCarrier(carrier_hz));
    }
    let spacing_mm = SPEED_OF_LIGHT / (2.0 * carrier_hz) * 1e3;
    let n = n_ports / 2;
    let first = -(n as f64 - 1.0) / 2.0 * spacing_mm;
    let elements = (0..n)
        .map(|i| AntennaElement {
            id: i as u32 + 1,
            position_mm: [T::lit(first + i as f64 * spacing_mm), T::zero(), T::zero()],
            orientation: RotationAngles::zero(),
            pattern: PatternParams::isotropic(),
            dual_polarized: true,
        })
        .collect();
    Ok(DeviceLayout {
        kind: LayoutKind::LegacyArray,
        form_factor_mm: [T::lit(spacing_mm * n as f64), T::zero(), T::zero()],
        elements,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutViolation {
    UnknownAntenna(u32),
    DuplicateId(u32),
    /// Active antenna not usable below 1 GHz.
    LowBandAntenna { id: u32, carrier_hz: f64 },
    OffOutline(u32),
    InwardBoresight(u32),
}

impl fmt::Display for LayoutViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownAntenna(id) => write!(f, "antenna id {id} does not exist in the layout"),
            Self::DuplicateId(id) => write!(f, "antenna id {id} appears more than once"),
            Self::LowBandAntenna { id, carrier_hz } => write!(
                f,
                "antenna id {id} is not usable at {:.3} GHz; below 1 GHz only ids 4 and 8 apply",
                carrier_hz / 1e9
            ),
            Self::OffOutline(id) => write!(f, "antenna id {id} is not on the device outline"),
            Self::InwardBoresight(id) => write!(f, "antenna id {id} boresight does not point outward"),
        }
    }
}

/// Checks a layout and an active antenna set against a carrier.
///
/// Every problem is reported; an empty list means the combination is usable.
pub fn validate<T: Real>(layout: &DeviceLayout<T>, carrier_hz: f64, active_ids: &[u32]) -> Vec<LayoutViolation> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    for e in &layout.elements {
        if !seen.insert(e.id) {
            out.push(LayoutViolation::DuplicateId(e.id));
        }
    }

    if layout.kind == LayoutKind::Handheld {
        let half = [
            layout.form_factor_mm[1].as_f64() / 2.0,
            layout.form_factor_mm[0].as_f64() / 2.0,
        ];
        for e in &layout.elements {
            let p = e.position_mm.map(|v| v.as_f64());
            let inside = p[0].abs() <= half[0] + OUTLINE_TOL_MM && p[1].abs() <= half[1] + OUTLINE_TOL_MM;
            let on_edge = (p[0].abs() - half[0]).abs() <= OUTLINE_TOL_MM || (p[1].abs() - half[1]).abs() <= OUTLINE_TOL_MM;
            if !(inside && on_edge && p[2].abs() <= OUTLINE_TOL_MM) {
                out.push(LayoutViolation::OffOutline(e.id));
            }
            if dot(&e.boresight_lcs(), &e.position_mm) <= T::zero() {
                out.push(LayoutViolation::InwardBoresight(e.id));
            }
        }
    }

    let active: BTreeSet<u32> = active_ids.iter().copied().collect();
    for &id in &active {
        if layout.element(id).is_none() {
            out.push(LayoutViolation::UnknownAntenna(id));
        } else if layout.kind == LayoutKind::Handheld && carrier_hz <= LOW_BAND_LIMIT_HZ && !LOW_BAND_IDS.contains(&id) {
            out.push(LayoutViolation::LowBandAntenna { id, carrier_hz });
        }
    }
    out
}

/// One element entry of a layout override file or config layout section.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub id: u32,
    pub position_mm: [f64; 3],
    #[serde(default)]
    pub alpha_deg: f64,
    #[serde(default)]
    pub beta_deg: f64,
    #[serde(default)]
    pub gamma_deg: f64,
    #[serde(default)]
    pub dual_polarized: bool,
}

impl ElementSpec {
    pub fn to_element<T: Real>(&self, pattern: PatternParams<T>) -> AntennaElement<T> {
        AntennaElement {
            id: self.id,
            position_mm: self.position_mm.map(T::lit),
            orientation: RotationAngles::new(T::lit(self.alpha_deg), T::lit(self.beta_deg), T::lit(self.gamma_deg)),
            pattern,
            dual_polarized: self.dual_polarized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFile {
    #[serde(default)]
    pub elements: Vec<ElementSpec>,
}

/// Parses a layout override file (TOML, `[[elements]]` tables).
pub fn parse_layout_overrides(text: &str) -> Result<Vec<ElementSpec>, LayoutError> {
    let file: LayoutFile = toml::from_str(text).map_err(|e| LayoutError::Parse(e.to_string()))?;
    Ok(file.elements)
}
