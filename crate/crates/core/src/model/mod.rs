//! Domain types: harmonic sets, port partitions, multi-frequency scattering
//! data, binary load states and slot-modulation patterns.

mod config;
mod harmonics;
mod loads;
mod partition;
mod scattering;

pub use config::ConfigMatrix;
pub use harmonics::HarmonicSet;
pub use loads::{slot_reflection, LoadStates};
pub use partition::{PortGroup, PortPartition};
pub use scattering::{
    reciprocity_error, HarmonicCheck, MultiFrequencyScattering, ValidationReport,
    MAX_MODULATION_RATIO, PASSIVITY_TOL, RECIPROCITY_TOL, Z0_OHMS,
};
