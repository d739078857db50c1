use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Each variant has a stable kebab-case name (see [`Error::code`]) that the
/// CLI prints so callers can match on failures without parsing prose.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain of {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    #[error("observation {value} at index {index} is not a positive finite number")]
    NonpositiveObservation { index: usize, value: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("invalid sample for the closed-form estimator: denominator {denominator}")]
    InvalidSample { denominator: f64 },

    #[error("numerical overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("no sign change of the residual on [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("profiled mu(p) is not positive on part of [{lo}, {hi}] and no root was found elsewhere")]
    InfeasibleRegion { lo: f64, hi: f64 },

    #[error("root solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("moment of order {q} does not exist: {reason}")]
    MomentDoesNotExist { q: f64, reason: String },

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("invalid shape parameter `{name}` = {value}")]
    InvalidShapeParam { name: String, value: f64 },

    #[error("generator spec parse error: {0}")]
    SpecParse(String),

    #[error("value {0} is outside the range of the generator")]
    OutOfRange(f64),

    #[error("every bootstrap replicate failed ({attempts} attempts)")]
    BootstrapDegenerate { attempts: usize },

    #[error("Monte Carlo denominator is indistinguishable from zero ({mean} +/- {se})")]
    DegenerateLimit { mean: f64, se: f64 },

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Machine-readable name of the failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain-error",
            Error::NonpositiveObservation { .. } => "nonpositive-observation",
            Error::EmptySample => "empty-sample",
            Error::DegenerateSample(_) => "degenerate-sample",
            Error::InvalidSample { .. } => "invalid-sample",
            Error::Overflow(_) => "overflow",
            Error::NoRootInBracket { .. } => "no-root-in-bracket",
            Error::InfeasibleRegion { .. } => "infeasible-region",
            Error::NoConvergence { .. } => "no-convergence",
            Error::MomentDoesNotExist { .. } => "moment-does-not-exist",
            Error::UnknownGenerator(_) => "unknown-generator",
            Error::InvalidShapeParam { .. } => "invalid-shape-param",
            Error::SpecParse(_) => "generator-spec-parse",
            Error::OutOfRange(_) => "out-of-range",
            Error::BootstrapDegenerate { .. } => "bootstrap-degenerate",
            Error::DegenerateLimit { .. } => "degenerate-limit",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Io(_) => "io-error",
        }
    }

    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
