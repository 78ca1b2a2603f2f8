use serde::{Deserialize, Serialize};

use super::brightness;
use super::hom::{hom_time_bins, DephasingModel};
use crate::error::{Error, Result};

/// Excitation scheme of a tradeoff row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Carriers created in the barrier only.
    Barrier,
    /// Strong quasi-resonant pumping plus weak non-resonant light.
    TwoColor,
}

/// Pump scan for the brightness/indistinguishability table.
///
/// Pump powers are normalized to saturation; the probability of creating at
/// least one pair is `1 - exp(-P)`. Charge noise follows
/// `σ_sd = prefactor · P^sd_exponent` with a per-scheme prefactor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffConfig {
    pub beta: f64,
    pub eta_top: f64,
    pub p_state: f64,
    /// Radiative lifetime, ns.
    pub t1: f64,
    pub gamma_star: f64,
    pub sd_rate: f64,
    /// Delay between the interfering photons, ns.
    pub delay: f64,
    pub pump: Vec<f64>,
    /// σ_sd (rad/ns) at saturation under barrier pumping.
    pub barrier_sd: f64,
    pub sd_exponent: f64,
    /// σ_sd at saturation for the two-color scheme; calibrated when `None`.
    pub two_color_sd: Option<f64>,
    /// (B, M) point the two-color scheme is calibrated to.
    pub calibration: (f64, f64),
    pub n_pairs: usize,
    pub seed: u64,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        TradeoffConfig {
            beta: 0.85,
            eta_top: 0.9,
            p_state: 0.85,
            t1: 0.25,
            gamma_star: 0.04,
            sd_rate: 0.01,
            delay: 12.2,
            pump: vec![0.0, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0],
            barrier_sd: 4.0,
            sd_exponent: 0.5,
            two_color_sd: None,
            calibration: (0.53, 0.92),
            n_pairs: 100_000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub scheme: Scheme,
    pub pump: f64,
    pub p_pump: f64,
    pub sd_sigma: f64,
    pub brightness: f64,
    pub m: f64,
    pub m_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub rows: Vec<TradeoffRow>,
    /// Two-color σ_sd prefactor actually used.
    pub two_color_sd: f64,
    /// Pump at which the calibration brightness is reached.
    pub calibration_pump: f64,
}

impl TradeoffTable {
    pub fn scheme(&self, scheme: Scheme) -> impl Iterator<Item = &TradeoffRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }
}

fn p_pump(pump: f64) -> f64 {
    1.0 - (-pump).exp()
}

fn overlap(cfg: &TradeoffConfig, sd_sigma: f64) -> Result<(f64, f64)> {
    let model = DephasingModel {
        gamma_star: cfg.gamma_star,
        sd_rate: cfg.sd_rate,
        sd_sigma,
        jitter_rate: None,
        seed: cfg.seed,
    };
    let r = hom_time_bins(&model, cfg.t1, cfg.delay, &[None], cfg.n_pairs)?.remove(0);
    Ok((r.m, r.sigma))
}

/// Finds the σ_sd prefactor that puts the two-color scheme through the
/// calibration point. Every evaluation reuses the same random numbers, so
/// the bisection sees a deterministic curve.
fn calibrate(cfg: &TradeoffConfig) -> Result<(f64, f64)> {
    let (b_target, m_target) = cfg.calibration;
    let b_max = cfg.p_state * cfg.beta * cfg.eta_top;
    if !(b_target > 0.0 && b_target < b_max) {
        return Err(Error::Domain(format!("calibration brightness {b_target} outside (0, {b_max})")));
    }
    let pump = -(1.0 - b_target / b_max).ln();
    let (m0, _) = overlap(cfg, 0.0)?;
    if m0 < m_target {
        return Err(Error::Domain(format!("calibration overlap {m_target} exceeds the noise-free value {m0}")));
    }
    let mut hi = 1.0;
    let mut iterations = 0;
    while overlap(cfg, hi)?.0 > m_target {
        hi *= 2.0;
        iterations += 1;
        if iterations > 60 {
            return Err(Error::FitFailed { iterations, last_change: hi });
        }
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if overlap(cfg, mid)?.0 > m_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 * hi {
            break;
        }
    }
    Ok((0.5 * (lo + hi) / pump.powf(cfg.sd_exponent), pump))
}

/// Brightness and mean wavepacket overlap along a pump scan for both
/// excitation schemes.
pub fn brightness_indistinguishability_tradeoff(cfg: &TradeoffConfig) -> Result<TradeoffTable> {
    if cfg.pump.is_empty() {
        return Err(Error::EmptyGrid("pump"));
    }
    if cfg.pump.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::Domain("pump powers must be finite and >= 0".into()));
    }
    if !(cfg.barrier_sd >= 0.0) || !(cfg.sd_exponent > 0.0) {
        return Err(Error::Domain("charge-noise scaling needs barrier_sd >= 0 and sd_exponent > 0".into()));
    }
    let (two_color_sd, calibration_pump) = match cfg.two_color_sd {
        Some(a) if a >= 0.0 => (a, f64::NAN),
        Some(a) => return Err(Error::Domain(format!("two_color_sd must be >= 0, got {a}"))),
        None => calibrate(cfg)?,
    };
    let mut rows = Vec::with_capacity(2 * cfg.pump.len());
    for (scheme, prefactor) in [(Scheme::Barrier, cfg.barrier_sd), (Scheme::TwoColor, two_color_sd)] {
        for &pump in &cfg.pump {
            let sd_sigma = prefactor * pump.powf(cfg.sd_exponent);
            let (m, m_sigma) = overlap(cfg, sd_sigma)?;
            rows.push(TradeoffRow {
                scheme,
                pump,
                p_pump: p_pump(pump),
                sd_sigma,
                brightness: brightness(cfg.beta, cfg.eta_top, cfg.p_state, p_pump(pump))?,
                m,
                m_sigma,
            });
        }
    }
    Ok(TradeoffTable { rows, two_color_sd, calibration_pump })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scan_has_the_expected_structure() {
        let cfg = TradeoffConfig { n_pairs: 40_000, ..TradeoffConfig::default() };
        let table = brightness_indistinguishability_tradeoff(&cfg).unwrap();
        assert!(table.two_color_sd < cfg.barrier_sd);

        let barrier: Vec<_> = table.scheme(Scheme::Barrier).collect();
        let two: Vec<_> = table.scheme(Scheme::TwoColor).collect();
        assert_eq!(barrier[0].brightness, 0.0);
        let intrinsic = (1.0 / cfg.t1) / (1.0 / cfg.t1 + 2.0 * cfg.gamma_star);
        assert!((barrier[0].m - intrinsic).abs() < 4.0 * barrier[0].m_sigma + 1e-3);
        for w in barrier.windows(2) {
            assert!(w[1].m < w[0].m + 1e-12 || w[0].pump == 0.0);
            assert!(w[1].brightness > w[0].brightness);
        }
        for (b, t) in barrier.iter().zip(&two) {
            assert_eq!(b.brightness, t.brightness);
            assert!(t.m >= b.m - 0.02);
        }
    }

    #[test]
    fn calibration_point_is_reproduced() {
        let cfg = TradeoffConfig { n_pairs: 40_000, ..TradeoffConfig::default() };
        let (a, pump) = calibrate(&cfg).unwrap();
        let b = brightness(cfg.beta, cfg.eta_top, cfg.p_state, p_pump(pump)).unwrap();
        assert!((b - 0.53).abs() < 1e-12);
        let (m, _) = overlap(&cfg, a * pump.powf(cfg.sd_exponent)).unwrap();
        assert!((m - 0.92).abs() < 1e-4, "{m}");
    }

    #[test]
    fn unreachable_calibration_is_rejected() {
        let cfg = TradeoffConfig { calibration: (0.9, 0.92), n_pairs: 1000, ..TradeoffConfig::default() };
        assert!(brightness_indistinguishability_tradeoff(&cfg).is_err());
        let cfg = TradeoffConfig { gamma_star: 1.0, n_pairs: 1000, ..TradeoffConfig::default() };
        assert!(brightness_indistinguishability_tradeoff(&cfg).is_err());
    }
}
