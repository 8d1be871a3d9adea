use thiserror::Error;

/// Errors raised anywhere in the fitting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {value} lies outside the season domain [0, {t_end}]")]
    OutOfDomain { value: f64, t_end: f64 },

    #[error("invalid interval [{t0}, {t1}]: {reason}")]
    Interval { t0: f64, t1: f64, reason: String },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("quantile solver did not converge after {iterations} iterations (final gap {gap:e})")]
    Convergence { iterations: usize, gap: f64 },

    #[error("quantile {tau}: {source}")]
    AtQuantile {
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported cadence: {0}")]
    UnsupportedCadence(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("{path}:{line}: {message}")]
    Record {
        path: String,
        line: u64,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("integrity error at province {province}, year {year}, index {index}: {message}")]
    Integrity {
        province: String,
        year: i32,
        index: i64,
        message: String,
    },

    #[error("empty panel: {0}")]
    EmptyPanel(String),

    #[error("bootstrap failed: {failed} of {total} replicas could not be fitted")]
    Bootstrap { failed: usize, total: usize },

    #[error("missing file {path}: {source}")]
    MissingFile {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse error classes used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Numerical or model failure.
    Runtime,
    /// Bad configuration or malformed input data.
    Validation,
    /// A required file or artifact does not exist.
    MissingArtifact,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Singular(_)
            | Error::Convergence { .. }
            | Error::InsufficientData(_)
            | Error::Bootstrap { .. }
            | Error::Io(_) => ErrorClass::Runtime,
            Error::AtQuantile { source, .. } => source.class(),
            Error::MissingFile { .. } => ErrorClass::MissingArtifact,
            _ => ErrorClass::Validation,
        }
    }

    /// Short stable identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::Interval { .. } => "interval",
            Error::InvalidBasis(_) => "invalid_basis",
            Error::Singular(_) => "singular",
            Error::State(_) => "state",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Config(_) => "config",
            Error::Alignment(_) => "alignment",
            Error::Convergence { .. } => "convergence",
            Error::AtQuantile { source, .. } => source.kind(),
            Error::UnsupportedCadence(_) => "unsupported_cadence",
            Error::Lookup(_) => "lookup",
            Error::Record { .. } => "record",
            Error::Format(_) => "format",
            Error::Integrity { .. } => "integrity",
            Error::EmptyPanel(_) => "empty_panel",
            Error::Bootstrap { .. } => "bootstrap",
            Error::MissingFile { .. } => "missing_file",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
