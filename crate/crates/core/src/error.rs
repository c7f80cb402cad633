use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qudit dimension must be at least 2, got {0}")]
    Dimension(usize),

    #[error("register must hold at least one qudit")]
    EmptyRegister,

    #[error("expected {expected} amplitudes, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("state vector has zero norm")]
    ZeroVector,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("qudit position {pos} out of range for a {m}-qudit register")]
    PositionOutOfRange { pos: usize, m: usize },

    #[error("qudit position {0} listed more than once")]
    RepeatedPosition(usize),

    #[error("operator acts on {arity} qudits but {targets} targets were given")]
    Arity { arity: usize, targets: usize },

    #[error("digit {digit} out of range for dimension {d}")]
    Digit { digit: usize, d: usize },

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("size {dim} exceeds cap {cap}")]
    Cap { dim: usize, cap: usize },

    #[error("invalid channel: {0}")]
    Channel(String),

    #[error("outcome has probability zero")]
    ZeroProbability,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("configuration error: {0}")]
    Config(String),
}
