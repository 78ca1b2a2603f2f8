use super::HilbertConfig;
use crate::error::{Error, Result};

/// Result of a truncation convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    /// Smallest tested cutoff whose value agrees with the doubled cutoff.
    pub n_max: usize,
    pub value: f64,
    /// Value at `2 * n_max`.
    pub refined: f64,
    /// Every `(n_max, value)` evaluated, in order.
    pub history: Vec<(usize, f64)>,
}

/// Doubles the Fock cutoff, starting at `cfg.n_max`, until `observable`
/// changes by less than `cfg.truncation_tol`.
pub fn converge_truncation<F>(observable: F, cfg: &HilbertConfig) -> Result<Convergence>
where
    F: Fn(usize) -> Result<f64>,
{
    cfg.validate()?;
    let mut n = cfg.n_max;
    let mut value = observable(n)?;
    let mut history = vec![(n, value)];
    loop {
        let next = 2 * n;
        if next > cfg.n_max_cap {
            let last_change = match history.len() {
                0 | 1 => f64::INFINITY,
                k => (history[k - 1].1 - history[k - 2].1).abs(),
            };
            return Err(Error::Truncation { n_max: n, last_change });
        }
        let refined = observable(next)?;
        history.push((next, refined));
        if (refined - value).abs() < cfg.truncation_tol {
            return Ok(Convergence { n_max: n, value, refined, history });
        }
        n = next;
        value = refined;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{steady_state, Frame, LindbladGenerator};
    use crate::qed::DeviceParams;
    use num_complex::Complex64 as C64;

    fn params() -> DeviceParams {
        DeviceParams {
            g: 15.0,
            kappa_top: 20.0,
            kappa_bottom: 20.0,
            kappa_loss: 10.0,
            gamma_sp: 1.0,
            gamma_star: 0.5,
            omega_c: 0.0,
            omega_qd: 0.0,
            eta_in: 1.0,
        }
    }

    fn photon_number(p: &DeviceParams, b: C64, n: usize) -> Result<f64> {
        let gen = LindbladGenerator::lab(p, 0.0, b, n)?;
        Ok(steady_state(&gen, &HilbertConfig::default())?.photon_number())
    }

    #[test]
    fn undriven_converges_immediately() {
        let cfg = HilbertConfig { n_max: 1, ..HilbertConfig::default() };
        let c = converge_truncation(|n| photon_number(&params(), C64::new(0.0, 0.0), n), &cfg).unwrap();
        assert_eq!(c.n_max, 1);
        assert!(c.value.abs() < 1e-14);
    }

    #[test]
    fn one_photon_drive_needs_moderate_cutoff() {
        let p = DeviceParams { g: 0.0, ..params() };
        // empty cavity on resonance: ⟨a†a⟩ = 4 κ_top |b|² / κ²
        let b = C64::new(p.kappa() / (4.0 * p.kappa_top).sqrt(), 0.0);
        let cfg = HilbertConfig { n_max: 1, ..HilbertConfig::default() };
        let c = converge_truncation(|n| photon_number(&p, b, n), &cfg).unwrap();
        assert!((c.refined - 1.0).abs() < 1e-4);
        assert!((8..=16).contains(&c.n_max), "n* = {}", c.n_max);
        assert!((c.value - c.refined).abs() < cfg.truncation_tol);
    }

    #[test]
    fn cap_is_reported() {
        let cfg = HilbertConfig { n_max: 1, n_max_cap: 4, ..HilbertConfig::default() };
        let r = converge_truncation(|n| Ok(n as f64), &cfg);
        assert!(matches!(r, Err(Error::Truncation { n_max: 4, .. })), "{r:?}");
    }

    #[test]
    fn displaced_frame_converges_at_small_cutoff() {
        let p = params();
        let b = C64::new(3.0, 0.0);
        let cfg = HilbertConfig { n_max: 1, ..HilbertConfig::default() };
        let c = converge_truncation(
            |n| {
                let gen = LindbladGenerator::new(&p, 0.0, b, crate::hilbert::FockSpace::new(n)?, Frame::Displaced)?;
                Ok(steady_state(&gen, &HilbertConfig::default())?.photon_number())
            },
            &cfg,
        )
        .unwrap();
        assert!(c.n_max <= 4, "n* = {}", c.n_max);
    }
}
