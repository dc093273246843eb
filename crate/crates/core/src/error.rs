use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported number of modes: {0} (expected 1 or 2)")]
    UnsupportedModes(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("cutoff must be positive")]
    ZeroCutoff,

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("full transformation tensor needs {entries} entries, above the budget of {limit}")]
    MemoryBudget { entries: usize, limit: usize },

    #[error("workspace does not belong to this evolution: {0}")]
    StaleWorkspace(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("KL term diverges: pair {pair} has fidelity {fidelity:e}")]
    KlDivergent { pair: usize, fidelity: f64 },

    #[error("non-finite gradient at coordinate {index}")]
    NonFiniteGradient { index: usize },

    #[error("gradient of real parameter {param} has imaginary residue {residue:e}")]
    ImaginaryResidue { param: String, residue: f64 },

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
