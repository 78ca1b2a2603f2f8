//! Single-photon source metrics.

mod capture;
mod hom;
mod tradeoff;

pub use capture::{
    g2_from_counts, simulate_emissions, simulate_g2, CaptureModel, EmissionRecord, G2Result, RateCurves, SIDE_PEAKS,
};
pub use hom::{hom_indistinguishability, hom_time_bins, DephasingModel, HomResult};
pub use tradeoff::{brightness_indistinguishability_tradeoff, Scheme, TradeoffConfig, TradeoffRow, TradeoffTable};

use crate::error::{Error, Result};

/// Photons collected in the first lens per pulse:
/// `p_pump · p_state · β · η_top`.
pub fn brightness(beta: f64, eta_top: f64, p_state: f64, p_pump: f64) -> Result<f64> {
    for (name, v) in [("beta", beta), ("eta_top", eta_top), ("p_state", p_state), ("p_pump", p_pump)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} = {v} not in [0, 1]")));
        }
    }
    Ok(p_pump * p_state * beta * eta_top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qed::beta_from_purcell;

    #[test]
    fn brightness_examples() {
        assert!((brightness(0.83, 1.0, 1.0, 1.0).unwrap() - 0.83).abs() < 1e-15);
        let beta = beta_from_purcell(0.8);
        assert!((beta - 0.444).abs() < 1e-3);
        let b = brightness(beta, 1.0, 0.69, 1.0).unwrap();
        assert!((b - 0.307).abs() < 1e-3);
        assert_eq!(brightness(0.5, 0.5, 0.0, 1.0).unwrap(), 0.0);
        assert!(brightness(1.2, 1.0, 1.0, 1.0).is_err());
    }
}
