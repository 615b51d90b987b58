//! Harmonic backscatter objectives and binary pattern optimization.

mod ascent;
mod exhaustive;
mod objective;
mod patterns;

pub use ascent::{
    ascent_with_options, multistart, restart_rng, steepest_coordinate_ascent, AscentOptions,
    AscentStep, AscentTrace, MultistartResult, Termination, ACCEPT_THRESHOLD,
};
pub use exhaustive::{exhaustive_search, ExhaustiveResult, MAX_EXHAUSTIVE_BITS};
pub use objective::{
    amplitude_db, bask_contrast, objective_value, ObjectiveKind, ObjectiveSpec,
};
pub use patterns::{canonical_cyclic_form, distinct_pattern_count, is_canonical};
