use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants are coarse on purpose: the CLI maps each one onto its own exit
/// code, so adding a variant is an interface change.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidDevice(String),

    #[error("Purcell factor undefined: gamma_sp is zero")]
    UndefinedPurcell,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("steady-state solve failed (relative residual {residual:.3e})")]
    Solver { residual: f64 },

    #[error("integration failed at t = {time:.6e} ns: {reason}")]
    Integration { time: f64, reason: String },

    #[error("Fock truncation did not converge up to n_max = {n_max} (last change {last_change:.3e})")]
    Truncation { n_max: usize, last_change: f64 },

    #[error("threshold undefined: {0}")]
    ThresholdUndefined(String),

    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    #[error("post-selection probability is zero")]
    DegeneratePostSelection,

    #[error("g2(0) undefined: no photons were emitted")]
    UndefinedG2,

    #[error("indistinguishability undefined: {0}")]
    UndefinedOverlap(String),

    #[error("correlation undefined: all coincidence areas vanish")]
    UndefinedCorrelation,

    #[error("mixture fit did not converge after {iterations} iterations (last change {last_change:.3e})")]
    FitFailed { iterations: usize, last_change: f64 },
}
