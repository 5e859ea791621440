use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied parameter.
    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    /// Operation invoked on an object in the wrong state.
    #[error("invalid state: {0}")]
    State(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("pump spectrum table does not cover the required detuning span [-{required_span}, {required_span}]")]
    Coverage { required_span: f64 },

    #[error("propagator failed the SU(1,1) check: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Su11 { residual: f64, tolerance: f64 },

    #[error("solver `{solver}` not applicable: {reason}")]
    SolverApplicability { solver: String, reason: String },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("malformed matrix dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn dimension(expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Dimension { .. } => "dimension",
            Error::State(_) => "state",
            Error::NonFinite(_) => "non_finite",
            Error::Coverage { .. } => "coverage",
            Error::Su11 { .. } => "su11",
            Error::SolverApplicability { .. } => "solver_applicability",
            Error::Singular(_) => "singular",
            Error::Dump(_) => "dump",
            Error::Io(_) => "io",
            Error::Json { .. } => "json",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
