use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // wfdb
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported storage format {0}")]
    UnsupportedFormat(String),
    #[error("truncated signal data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("checksum mismatch on signal {signal}: header {expected}, data {actual}")]
    ChecksumMismatch { signal: usize, expected: u16, actual: u16 },
    #[error("value out of range for {format}: ADC value {adc}")]
    ValueOutOfRange { format: &'static str, adc: i64 },
    #[error("alarm window out of bounds: {0}")]
    WindowOutOfBounds(String),

    // preprocess / features
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("too few samples: need at least {min}, found {found}")]
    TooFewSamples { min: usize, found: usize },
    #[error("input too short: need at least {min} samples, found {found}")]
    TooShort { min: usize, found: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    // imbalance
    #[error("not enough neighbors: requested {k}, only {available} candidates")]
    NotEnoughNeighbors { k: usize, available: usize },
    #[error("minority class too small: {0} samples (need at least 2)")]
    MinorityTooSmall(usize),
    #[error("only one class present")]
    SingleClass,

    // nn
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch too small for batch normalization in training mode ({0} elements per feature)")]
    BatchTooSmall(usize),
    #[error("model dimension {model_dim} not divisible by {heads} heads")]
    DimensionNotDivisible { model_dim: usize, heads: usize },
    #[error("label out of range: {0}")]
    LabelOutOfRange(f64),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    DivergedLoss { epoch: usize, loss: f64 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint version mismatch: found {found}, supported {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("architecture mismatch: checkpoint holds {found}, expected {expected}")]
    ArchitectureMismatch { expected: String, found: String },

    // eval
    #[error("score out of range [0, 1]: {0}")]
    ScoreOutOfRange(f64),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable variant name, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::TruncatedData { .. } => "TruncatedData",
            Error::ChecksumMismatch { .. } => "ChecksumMismatch",
            Error::ValueOutOfRange { .. } => "ValueOutOfRange",
            Error::WindowOutOfBounds(_) => "WindowOutOfBounds",
            Error::EmptyInput => "EmptyInput",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::TooShort { .. } => "TooShort",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::NotEnoughNeighbors { .. } => "NotEnoughNeighbors",
            Error::MinorityTooSmall(_) => "MinorityTooSmall",
            Error::SingleClass => "SingleClass",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::BatchTooSmall(_) => "BatchTooSmall",
            Error::DimensionNotDivisible { .. } => "DimensionNotDivisible",
            Error::LabelOutOfRange(_) => "LabelOutOfRange",
            Error::InvalidHyperparams(_) => "InvalidHyperparams",
            Error::DivergedLoss { .. } => "DivergedLoss",
            Error::CorruptCheckpoint(_) => "CorruptCheckpoint",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::ArchitectureMismatch { .. } => "ArchitectureMismatch",
            Error::ScoreOutOfRange(_) => "ScoreOutOfRange",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }
}
