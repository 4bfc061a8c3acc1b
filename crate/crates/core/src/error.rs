use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("party count {n} outside supported range {min}..={max}")]
    PartyCountOutOfRange { n: usize, min: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not a valid quantum state: {0}")]
    InvalidState(String),

    #[error("observable is not dichotomic: {0}")]
    NotDichotomic(String),

    #[error("matrix is not unitary: {0}")]
    NotUnitary(String),

    #[error("required setting {0} missing from table")]
    MissingSetting(String),

    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("singular denominator: 1 + <C1> = {0:.3e} is below epsilon")]
    SingularDenominator(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("missing input term: {0}")]
    MissingTerm(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("layout file error: {0}")]
    LayoutFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
