use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "ill-conditioned initialization: {reason}; use a larger initial block or fewer hidden nodes"
    )]
    IllConditioned { reason: String },

    #[error("numerically singular update matrix: {0}")]
    Conditioning(String),

    #[error("insufficient data: {what} needs at least {required} samples, got {available}")]
    InsufficientData {
        what: &'static str,
        required: usize,
        available: usize,
    },

    #[error("model decode error: {0}")]
    Decode(String),

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{stream} timestamp went backwards: {previous} ms then {current} ms")]
    Ordering {
        stream: &'static str,
        previous: u64,
        current: u64,
    },

    #[error("imu frame at {t} ms arrived after its interval was already emitted (boundary {boundary} ms)")]
    LateFrame { t: u64, boundary: u64 },

    #[error("resistance must be non-negative, got {0} ohm")]
    NegativeResistance(f64),

    #[error("voltage {v} V is outside the divider range [0, {vcc}) V")]
    VoltageOutOfRange { v: f64, vcc: f64 },

    #[error("strain {strain} outside [0, {max}]")]
    StrainOutOfRange { strain: f64, max: f64 },

    #[error("ground truth has zero variance; R² is undefined")]
    ConstantTruth,

    #[error("no estimates to evaluate")]
    NoEstimates,

    #[error("no overlapping time range between estimates and ground truth")]
    NoOverlap,

    #[error("model expects {expected} strain inputs but the stream carries {actual}")]
    ModelMismatch { expected: usize, actual: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}
