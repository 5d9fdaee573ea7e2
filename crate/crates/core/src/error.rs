use thiserror::Error;

#[derive(Debug, Error)]
pub enum NsvError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lattice mismatch: N={left_n}, L={left_l} vs N={right_n}, L={right_l}")]
    LatticeMismatch {
        left_n: usize,
        left_l: f64,
        right_n: usize,
        right_l: f64,
    },

    #[error("size mismatch: expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("lattice N={n} exceeds the limit {limit} for this operation")]
    TooLarge { n: usize, limit: usize },

    #[error("non-finite coefficient at t = {t} (last valid state at t = {last_valid_t})")]
    BlowUp { t: f64, last_valid_t: f64 },

    #[error(
        "insufficient resolution: conditions need lambda >= {required_lambda:.6e}, \
         lattice tops out at {lattice_max:.6e}"
    )]
    InsufficientResolution {
        required_lambda: f64,
        lattice_max: f64,
    },

    #[error("cadence {cadence} too coarse for linear interpolation; need <= {required}")]
    CadenceInsufficient { cadence: f64, required: f64 },

    #[error("iteration did not converge after {iterations} iterates (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NsvError {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            NsvError::Io(_) => 2,
            NsvError::InsufficientResolution { .. } => 3,
            NsvError::NotConverged { .. } => 4,
            NsvError::Config(_) | NsvError::ConfigLine { .. } => 5,
            NsvError::BlowUp { .. } => 6,
            NsvError::CadenceInsufficient { .. } => 7,
            NsvError::Missing(_) | NsvError::Checkpoint(_) | NsvError::Csv(_) => 8,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, NsvError>;
