use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph needs at least one output vertex")]
    NoOutputs,
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("input-output backend needs at least one input vertex")]
    NoInputs,
    #[error("code has no logical qubits (k = 0); distance is undefined")]
    NoLogicalQubits,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("no legal action available")]
    NoLegalAction,
    #[error("too few records for phase detection ({0} < 3)")]
    TooFewRecords(usize),
    #[error("decoder table needs {0} checks; at most 24 supported")]
    TooManyChecks(usize),
    #[error("residual has a nonzero syndrome")]
    NonzeroSyndrome,
    #[error("invalid check matrix: {0}")]
    InvalidCheckMatrix(String),
    #[error("need at least 3 points with nonzero logical error rate, got {0}")]
    InsufficientPoints(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("corrupt trajectory: {0}")]
    Trajectory(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
