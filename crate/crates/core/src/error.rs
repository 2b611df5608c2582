use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: String,
        got: usize,
        expected: usize,
    },

    #[error("probability out of range: {what} = {value}")]
    ProbabilityOutOfRange { what: String, value: f64 },

    #[error(
        "degenerate attribute side: attribute {attribute} has no individuals with value {side}"
    )]
    DegenerateAttribute { attribute: usize, side: u8 },

    #[error("index out of range: {what} {index} (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("no control arm: every sampled individual was treated")]
    NoControlArm,

    #[error("no treated arm")]
    NoTreatedArm,

    #[error("instance too large for enumeration: {size} points exceeds cap {cap}")]
    CapExceeded { size: String, cap: u64 },

    #[error("cycle detected involving vertex `{0}`")]
    Cycle(String),

    #[error("cpt shape mismatch for vertex `{vertex}`: {got} rows, expected {expected}")]
    CptShape {
        vertex: String,
        got: usize,
        expected: usize,
    },

    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

impl Error {
    /// True for errors raised because an instance is over a resource cap.
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}
