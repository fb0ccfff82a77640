use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the pricing library.
///
/// Every variant maps to a stable, module-qualified code via [`Error::code`],
/// which the CLI surfaces in its structured error output.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index series needs at least 2 observations, got {0}")]
    TooFewObservations(usize),

    #[error("non-positive index level {level} on {date}")]
    NonPositiveLevel { date: NaiveDate, level: f64 },

    #[error("duplicate observation date {0}")]
    DuplicateDate(NaiveDate),

    #[error("observation dates not strictly increasing at {0}")]
    NonMonotoneDate(NaiveDate),

    #[error("time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model parameter: {0}")]
    InvalidParams(String),

    #[error("{context}: elapsed transformed time must be positive, got {delta}")]
    NonPositiveElapsed { context: &'static str, delta: f64 },

    #[error("{0}")]
    Domain(String),

    /// The observed activity time has reached the trendline value at maturity.
    /// Not a failure: enhanced hedges switch to the savings account.
    #[error("stopping time reached: observed activity time {tau_obs} >= {tau_bar_maturity}")]
    StoppingTimeReached { tau_obs: f64, tau_bar_maturity: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("series ends at t = {series_end} before maturity {maturity}")]
    SeriesTooShort { series_end: f64, maturity: f64 },

    #[error("measure mismatch: {0}")]
    MeasureMismatch(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("missing upstream data: {0}")]
    MissingData(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Module-qualified error code, e.g. `besq.domain`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::TooFewObservations(_)
            | Error::NonPositiveLevel { .. }
            | Error::DuplicateDate(_)
            | Error::NonMonotoneDate(_) => "core_types.invalid_series",
            Error::InvalidGrid(_) => "core_types.invalid_grid",
            Error::InvalidParams(_) => "core_types.invalid_params",
            Error::NonPositiveElapsed { context, .. } => match *context {
                "pricing" => "pricing.domain",
                _ => "besq.domain",
            },
            Error::Domain(_) => "besq.domain",
            Error::StoppingTimeReached { .. } => "pricing.stopping_time",
            Error::Estimation(_) => "activity_time.estimation",
            Error::SeriesTooShort { .. } => "hedging.series_too_short",
            Error::MeasureMismatch(_) => "simulate.measure_mismatch",
            Error::Parse { .. } => "io.parse",
            Error::MissingData(_) => "io.missing_data",
            Error::Io(_) => "io.io",
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
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}
