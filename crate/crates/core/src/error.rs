use thiserror::Error;

/// Errors raised by the model, solver, optimizer and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid harmonic set: {0}")]
    InvalidHarmonics(String),

    #[error("invalid port partition: {0}")]
    InvalidPartition(String),

    #[error("invalid scattering data: {0}")]
    InvalidScattering(String),

    #[error("invalid load states: {0}")]
    InvalidLoads(String),

    #[error("invalid configuration matrix: {0}")]
    InvalidConfig(String),

    #[error("index out of range: {what} = {index} (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("harmonic {0} is not part of the retained set")]
    MissingHarmonic(i32),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("system matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("instance too large for exhaustive search: {bits} bits (limit {limit})")]
    TooLarge { bits: usize, limit: usize },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("flip rejected: {0}")]
    FlipRejected(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("coincident radiators {a} and {b}")]
    CoincidentRadiators { a: usize, b: usize },

    #[error("network file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("frequency {requested_hz} Hz outside tabulated range [{min_hz}, {max_hz}] Hz")]
    FrequencyOutOfRange {
        requested_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },

    #[error("unsupported scenario format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("scenario file corrupted: {0}")]
    Corrupt(String),

    #[error("invalid study parameters: {0}")]
    InvalidStudy(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
