use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Lib(#[from] qdsim::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// Short machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        use qdsim::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Lib(e) => match e {
                E::InvalidDevice(_) => "invalid_device",
                E::UndefinedPurcell => "undefined_purcell",
                E::Domain(_) => "domain",
                E::EmptyGrid(_) => "empty_grid",
                E::Solver { .. } => "solver",
                E::Integration { .. } => "integration",
                E::Truncation { .. } => "truncation",
                E::ThresholdUndefined(_) => "threshold_undefined",
                E::DegenerateOutput(_) => "degenerate_output",
                E::DegeneratePostSelection => "degenerate_post_selection",
                E::UndefinedG2 => "undefined_g2",
                E::UndefinedOverlap(_) => "undefined_overlap",
                E::UndefinedCorrelation => "undefined_correlation",
                E::FitFailed { .. } => "fit_failed",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        use qdsim::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
            CliError::Lib(e) => match e {
                E::InvalidDevice(_) => 10,
                E::UndefinedPurcell => 11,
                E::Domain(_) => 12,
                E::EmptyGrid(_) => 13,
                E::Solver { .. } => 14,
                E::Integration { .. } => 15,
                E::Truncation { .. } => 16,
                E::ThresholdUndefined(_) => 17,
                E::DegenerateOutput(_) => 18,
                E::DegeneratePostSelection => 19,
                E::UndefinedG2 => 20,
                E::UndefinedOverlap(_) => 21,
                E::UndefinedCorrelation => 22,
                E::FitFailed { .. } => 23,
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}
