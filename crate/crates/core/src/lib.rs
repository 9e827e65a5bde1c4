//! Realistic handheld UE antenna model.
//!
//! * [`sphere_geom`]: directions, z-y-x rotations, polarization basis rotation
//! * [`element_pattern`]: directive and isotropic element patterns, metrics
//! * [`device_layout`]: reference handset, CPE panel, legacy half-wave array
//! * [`blockage`]: per-antenna user blockage, port imbalance, fixed-region blocker
//! * [`field_synthesis`]: global-frame fields, combining, sweeps, imbalance
//! * [`sim`]: configuration, seeded Monte-Carlo, CSV export, self-test
//!
//! The geometric and pattern code is generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix it to `f64`, which the CLI and blockage tables use.

pub mod blockage;
pub mod device_layout;
pub mod element_pattern;
pub mod field_synthesis;
pub mod scalar;
pub mod sim;
pub mod sphere_geom;

pub use blockage::{AttenuationTable, BlockageError, BlockageScenario, ModelARegion, ScenarioProbabilities};
pub use device_layout::{AntennaElement, LayoutKind, LayoutViolation, Polarization, Port};
pub use element_pattern::PatternKind;
pub use field_synthesis::SynthesisError;
pub use scalar::Real;
pub use sphere_geom::{Frame, GeomError};

pub type Direction = sphere_geom::Direction<f64>;
pub type RotationAngles = sphere_geom::RotationAngles<f64>;
pub type Rotation = sphere_geom::Rotation<f64>;
pub type PatternParams = element_pattern::PatternParams<f64>;
pub type FieldPair = element_pattern::FieldPair<f64>;
pub type DeviceLayout = device_layout::DeviceLayout<f64>;
pub type UeState = field_synthesis::UeState<f64>;
pub type GainGrid = field_synthesis::GainGrid<f64>;

pub type Direction32 = sphere_geom::Direction<f32>;
pub type RotationAngles32 = sphere_geom::RotationAngles<f32>;
pub type PatternParams32 = element_pattern::PatternParams<f32>;
pub type UeState32 = field_synthesis::UeState<f32>;
