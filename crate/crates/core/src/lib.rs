//! Time-Floquet reconfigurable intelligent surface (RIS) simulator.
//!
//! A periodically switched 1-bit RIS with mutual coupling is modelled as a
//! multiport network terminated by time-varying loads. The crate assembles the
//! augmented multi-frequency channel, evaluates harmonic backscatter
//! objectives and optimizes the binary slot-modulation pattern by steepest
//! coordinate ascent with low-rank inverse updates.

pub mod channel;
pub mod error;
pub mod flip;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod scenario;
pub mod studies;

pub use channel::{
    channel_augmented, channel_static, harmonic_response, received, AugmentedChannel,
    AugmentedSystem, InputSpec, ModelFidelity,
};
pub use error::{Error, Result};
pub use flip::FlipWorkspace;
pub use model::{
    ConfigMatrix, HarmonicSet, LoadStates, MultiFrequencyScattering, PortGroup, PortPartition,
};
