//! Master-equation engine on the two-level ⊗ truncated-Fock space.

mod evolve;
mod generator;
mod ops;
mod steady;
mod truncation;

pub use evolve::{evolve, PhotonCounts, Propagator, Trajectory};
pub use generator::{Frame, LindbladGenerator, ReflectedFlux};
pub use ops::{DensityMatrix, FockSpace, SparseOp};
pub use steady::{steady_state, steady_state_from};
pub use truncation::{converge_truncation, Convergence};

use crate::error::{Error, Result};

/// Numerical settings shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HilbertConfig {
    /// Fock cutoff used when no convergence loop is run.
    pub n_max: usize,
    /// Relative residual accepted from the steady-state solve.
    pub steady_tol: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    /// Largest change of an observable accepted when `n_max` is doubled.
    pub truncation_tol: f64,
    /// Hard cap on `n_max` in [`converge_truncation`].
    pub n_max_cap: usize,
}

impl Default for HilbertConfig {
    fn default() -> Self {
        HilbertConfig { n_max: 4, steady_tol: 1e-10, ode_rtol: 1e-8, ode_atol: 1e-10, truncation_tol: 1e-4, n_max_cap: 32 }
    }
}

impl HilbertConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 || self.n_max_cap < self.n_max {
            return Err(Error::Domain(format!("need 1 <= n_max <= n_max_cap, got {} and {}", self.n_max, self.n_max_cap)));
        }
        for (name, v) in [
            ("steady_tol", self.steady_tol),
            ("ode_rtol", self.ode_rtol),
            ("ode_atol", self.ode_atol),
            ("truncation_tol", self.truncation_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
