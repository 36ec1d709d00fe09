use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("singular argument: {0}")]
    Singular(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("near-defective mode (m={m}, n={n}): |norm|={norm:e}")]
    DefectiveMode { m: u32, n: u32, norm: f64 },

    #[error("mode table does not cover the expansion: {0}")]
    Coverage(String),

    #[error("fit quality: {0}")]
    FitQuality(String),

    #[error("undefined centroid: masked probability {0:e}")]
    UndefinedCentroid(f64),

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("phase unwrap: {0}")]
    Unwrap(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable kind, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::Singular(_) => "singular",
            Error::Convergence(_) => "convergence",
            Error::DefectiveMode { .. } => "defective_mode",
            Error::Coverage(_) => "coverage",
            Error::FitQuality(_) => "fit_quality",
            Error::UndefinedCentroid(_) => "undefined_centroid",
            Error::Accuracy(_) => "accuracy",
            Error::Unwrap(_) => "unwrap",
            Error::Parse(_) => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
