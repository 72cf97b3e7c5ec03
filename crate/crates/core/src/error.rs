use thiserror::Error;

/// Errors surfaced by the engine and analytics layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("level vector has {got} entries, object defines {expected} elements")]
    ArityMismatch { expected: usize, got: usize },

    #[error("level {level} at position {position} is outside 1..={max}")]
    LevelOutOfRange {
        position: usize,
        level: u32,
        max: u32,
    },

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid object spec: {0}")]
    InvalidObject(String),

    #[error("invalid schedule policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("undefined rate: {0}")]
    UndefinedRate(&'static str),

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("empty index span")]
    EmptySpan,

    #[error("span {start}..={end} out of bounds for {len} values")]
    SpanOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("levels must be contiguous starting at 1; missing level {missing}")]
    NonContiguousLevels { missing: u32 },

    #[error("unknown group {given:?}; expected one of G1..G5")]
    UnknownGroup { given: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
