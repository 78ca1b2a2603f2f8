use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulses simulated per random stream; fixes the partition of work so
/// results do not depend on the thread count.
pub(crate) const BLOCK: usize = 4096;

/// Rate model of carrier capture after one excitation pulse.
///
/// Rates are in 1/ns. The QD holds at most two excitons (X, XX); barrier
/// carriers either decay (`r_qw` each) or are captured (`r_cap` each) while
/// the dot has room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureModel {
    /// Mean number of carriers created in the barrier per pulse.
    pub n_qw_mean: f64,
    pub r_qw: f64,
    pub r_cap: f64,
    pub r_x: f64,
    pub r_xx: f64,
    /// Pulse repetition period in ns; events later than this are dropped.
    pub period: f64,
    /// Probability that the pulse puts one exciton directly into the dot
    /// (quasi-resonant pumping). Zero for barrier pumping.
    pub direct_injection: f64,
    pub seed: u64,
}

impl CaptureModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_qw_mean", self.n_qw_mean),
            ("r_qw", self.r_qw),
            ("r_cap", self.r_cap),
            ("r_x", self.r_x),
            ("r_xx", self.r_xx),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.period > 0.0) {
            return Err(Error::Domain(format!("period must be > 0, got {}", self.period)));
        }
        if !(0.0..=1.0).contains(&self.direct_injection) {
            return Err(Error::Domain(format!("direct_injection {} not in [0, 1]", self.direct_injection)));
        }
        Ok(())
    }

    /// Quasi-resonant pumping: the pulse injects an exciton with probability
    /// `p_inject`, and `residual` barrier carriers are created on average.
    pub fn quasi_resonant(r_qw: f64, r_cap: f64, r_x: f64, r_xx: f64, p_inject: f64, residual: f64, seed: u64) -> Self {
        CaptureModel {
            n_qw_mean: residual,
            r_qw,
            r_cap,
            r_x,
            r_xx,
            period: 12.2,
            direct_injection: p_inject,
            seed,
        }
    }

    /// Same model with every rate multiplied by `s` and the period divided by it.
    pub fn rescaled(&self, s: f64) -> Self {
        CaptureModel {
            r_qw: self.r_qw * s,
            r_cap: self.r_cap * s,
            r_x: self.r_x * s,
            r_xx: self.r_xx * s,
            period: self.period / s,
            ..*self
        }
    }
}

/// Emission after one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    /// Pulse arrival time in ns.
    pub pulse_time: f64,
    /// Absolute exciton-photon emission times, ascending.
    pub x_times: Vec<f64>,
    /// Biexciton photons, filtered out of the analysis channel.
    pub xx_count: u32,
}

fn simulate_pulse(model: &CaptureModel, rng: &mut ChaCha8Rng, pulse_time: f64, poisson: Option<&Poisson<f64>>) -> EmissionRecord {
    let mut carriers = poisson.map_or(0u64, |p| p.sample(rng) as u64);
    let mut level = u8::from(model.direct_injection > 0.0 && rng.random::<f64>() < model.direct_injection);
    let mut t = 0.0;
    let mut x_times = Vec::new();
    let mut xx_count = 0;
    loop {
        let n = carriers as f64;
        let decay = model.r_qw * n;
        let capture = if level < 2 { model.r_cap * n } else { 0.0 };
        let emit_x = if level == 1 { model.r_x } else { 0.0 };
        let emit_xx = if level == 2 { model.r_xx } else { 0.0 };
        let total = decay + capture + emit_x + emit_xx;
        if total <= 0.0 {
            break;
        }
        let wait: f64 = Exp1.sample(rng);
        t += wait / total;
        if t > model.period {
            break;
        }
        let u = rng.random::<f64>() * total;
        if u < decay {
            carriers -= 1;
        } else if u < decay + capture {
            carriers -= 1;
            level += 1;
        } else if u < decay + capture + emit_x {
            level = 0;
            x_times.push(pulse_time + t);
        } else {
            level = 1;
            xx_count += 1;
        }
    }
    EmissionRecord { pulse_time, x_times, xx_count }
}

/// Simulates `n_pulses` consecutive pulses.
///
/// Work is split into fixed blocks, each with its own ChaCha stream
/// `(seed, block index)`, so the output is identical for any thread count.
pub fn simulate_emissions(model: &CaptureModel, n_pulses: usize) -> Result<Vec<EmissionRecord>> {
    model.validate()?;
    let poisson = if model.n_qw_mean > 0.0 {
        Some(Poisson::new(model.n_qw_mean).map_err(|e| Error::Domain(e.to_string()))?)
    } else {
        None
    };
    let blocks = n_pulses.div_ceil(BLOCK);
    let records: Vec<Vec<EmissionRecord>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
            rng.set_stream(b as u64);
            let start = b * BLOCK;
            let end = (start + BLOCK).min(n_pulses);
            (start..end).map(|k| simulate_pulse(model, &mut rng, k as f64 * model.period, poisson.as_ref())).collect()
        })
        .collect();
    Ok(records.into_iter().flatten().collect())
}

/// Autocorrelation estimate from a pulsed record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Result {
    pub g2_zero: f64,
    /// One-sigma statistical error from the delta method.
    pub sigma: f64,
    /// Coincidence area per pulse against pulse separation.
    pub histogram: Vec<(i32, f64)>,
    pub mean_photons: f64,
    /// Mean side-peak area used for normalization.
    pub side_peak: f64,
    pub n_pulses: usize,
    pub xx_photons: u64,
}

/// Side peaks averaged for the normalization.
pub const SIDE_PEAKS: usize = 5;

/// Pulsed g²(0) from photon counts per pulse: zero-delay coincidence area
/// over the mean of the first [`SIDE_PEAKS`] side peaks.
pub fn g2_from_counts(counts: &[u32], max_separation: usize) -> Result<G2Result> {
    let n = counts.len();
    let m_side = SIDE_PEAKS.max(max_separation);
    if n <= m_side {
        return Err(Error::Domain(format!("need more than {m_side} pulses, got {n}")));
    }
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        return Err(Error::UndefinedG2);
    }
    let c: Vec<f64> = counts.iter().map(|&v| f64::from(v)).collect();
    let zero: Vec<f64> = c.iter().map(|v| v * (v - 1.0)).collect();
    let zero_mean = zero.iter().sum::<f64>() / n as f64;
    let zero_var = zero.iter().map(|v| (v - zero_mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);

    let side = |m: usize| -> f64 { (0..n - m).map(|k| c[k] * c[k + m]).sum::<f64>() / (n - m) as f64 };
    let sides: Vec<f64> = (1..=m_side).map(side).collect();
    let side_mean = sides[..SIDE_PEAKS].iter().sum::<f64>() / SIDE_PEAKS as f64;
    // variance of the pooled side-peak products
    let pooled: Vec<f64> =
        (1..=SIDE_PEAKS).flat_map(|m| (0..n - m).map(move |k| (k, m))).map(|(k, m)| c[k] * c[k + m]).collect();
    let pooled_var = pooled.iter().map(|v| (v - side_mean).powi(2)).sum::<f64>() / (pooled.len() as f64 - 1.0);
    if !(side_mean > 0.0) {
        return Err(Error::UndefinedG2);
    }
    let g2 = zero_mean / side_mean;
    let var = zero_var / n as f64 / side_mean.powi(2) + zero_mean.powi(2) * (pooled_var / pooled.len() as f64) / side_mean.powi(4);

    let mut histogram = Vec::with_capacity(2 * max_separation + 1);
    for m in -(max_separation as i32)..=max_separation as i32 {
        let area = if m == 0 { zero_mean } else { sides[m.unsigned_abs() as usize - 1] };
        histogram.push((m, area));
    }
    Ok(G2Result {
        g2_zero: g2,
        sigma: var.sqrt(),
        histogram,
        mean_photons: total as f64 / n as f64,
        side_peak: side_mean,
        n_pulses: n,
        xx_photons: 0,
    })
}

/// Monte-Carlo g²(0) of the exciton line.
pub fn simulate_g2(model: &CaptureModel, n_pulses: usize) -> Result<G2Result> {
    let records = simulate_emissions(model, n_pulses)?;
    let counts: Vec<u32> = records.iter().map(|r| r.x_times.len() as u32).collect();
    let mut out = g2_from_counts(&counts, SIDE_PEAKS)?;
    out.xx_photons = records.iter().map(|r| u64::from(r.xx_count)).sum();
    Ok(out)
}

/// Tabulated rates against temperature, linearly interpolated and held
/// constant outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurves {
    pub temperatures: Vec<f64>,
    pub r_qw: Vec<f64>,
    pub r_cap: Vec<f64>,
}

impl RateCurves {
    fn interp(&self, ys: &[f64], t: f64) -> f64 {
        let xs = &self.temperatures;
        if t <= xs[0] {
            return ys[0];
        }
        for i in 1..xs.len() {
            if t <= xs[i] {
                let w = (t - xs[i - 1]) / (xs[i] - xs[i - 1]);
                return ys[i - 1] + w * (ys[i] - ys[i - 1]);
            }
        }
        ys[ys.len() - 1]
    }

    /// `model` with the barrier rates taken at temperature `t`.
    pub fn apply(&self, model: &CaptureModel, t: f64) -> Result<CaptureModel> {
        let n = self.temperatures.len();
        if n == 0 || self.r_qw.len() != n || self.r_cap.len() != n {
            return Err(Error::Domain("rate curves need equal, non-empty columns".into()));
        }
        if self.temperatures.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("rate-curve temperatures must ascend".into()));
        }
        Ok(CaptureModel { r_qw: self.interp(&self.r_qw, t), r_cap: self.interp(&self.r_cap, t), ..*model })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn barrier() -> CaptureModel {
        CaptureModel {
            n_qw_mean: 2.0,
            r_qw: 1.0,
            r_cap: 2.0,
            r_x: 3.0,
            r_xx: 5.0,
            period: 12.2,
            direct_injection: 0.0,
            seed: 11,
        }
    }

    #[test]
    fn direct_injection_alone_gives_single_photons() {
        let m = CaptureModel { n_qw_mean: 0.0, direct_injection: 0.8, ..barrier() };
        let r = simulate_g2(&m, 20_000).unwrap();
        assert_eq!(r.g2_zero, 0.0);
        assert!((r.mean_photons - 0.8).abs() < 0.02);
    }

    #[test]
    fn quasi_resonant_stays_pure_across_rates() {
        for (r_qw, r_cap, r_x) in [(0.5, 5.0, 1.0), (2.0, 2.0, 3.0), (1.0, 8.0, 8.0)] {
            let m = CaptureModel::quasi_resonant(r_qw, r_cap, r_x, 5.0, 0.9, 0.05, 3);
            let r = simulate_g2(&m, 100_000).unwrap();
            assert!(r.g2_zero + 3.0 * r.sigma < 0.08, "{r_qw} {r_cap} {r_x}: {} ± {}", r.g2_zero, r.sigma);
        }
    }

    #[test]
    fn faster_exciton_recombination_degrades_purity() {
        let mut last = -1.0;
        for r_x in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let r = simulate_g2(&CaptureModel { r_x, ..barrier() }, 100_000).unwrap();
            assert!(r.g2_zero > last, "r_x = {r_x}: {} after {last}", r.g2_zero);
            last = r.g2_zero;
        }
    }

    #[test]
    fn estimator_is_invariant_under_time_rescaling() {
        let a = simulate_g2(&barrier(), 30_000).unwrap();
        let b = simulate_g2(&barrier().rescaled(4.0), 30_000).unwrap();
        assert_eq!(a.g2_zero, b.g2_zero);
        assert_eq!(a.histogram, b.histogram);
    }

    #[test]
    fn side_peaks_follow_independent_pulses() {
        let r = simulate_g2(&barrier(), 100_000).unwrap();
        let records = simulate_emissions(&barrier(), 100_000).unwrap();
        let c: Vec<f64> = records.iter().map(|r| r.x_times.len() as f64).collect();
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c.len() as f64;
        // side peak ≈ ⟨n⟩², with error ≈ sqrt(2 ⟨n⟩² var / N)
        let sigma = (2.0 * mean * mean * var / c.len() as f64 + var * var / c.len() as f64).sqrt();
        for &(m, area) in &r.histogram {
            if m != 0 {
                assert!((area - mean * mean).abs() < 4.0 * sigma, "m = {m}: {area} vs {}", mean * mean);
            }
        }
    }

    #[test]
    fn seeded_runs_reproduce() {
        let a = simulate_emissions(&barrier(), 10_000).unwrap();
        let b = simulate_emissions(&barrier(), 10_000).unwrap();
        assert_eq!(a, b);
        let c = simulate_emissions(&CaptureModel { seed: 12, ..barrier() }, 10_000).unwrap();
        assert_ne!(a, c);
        for r in &a {
            assert!(r.x_times.windows(2).all(|w| w[0] <= w[1]));
            assert!(r.x_times.iter().all(|&t| t >= r.pulse_time));
        }
    }

    #[test]
    fn no_photons_is_an_error() {
        let m = CaptureModel { n_qw_mean: 0.0, ..barrier() };
        assert_eq!(simulate_g2(&m, 1000), Err(Error::UndefinedG2));
    }

    #[test]
    fn rate_curves_interpolate() {
        let curves = RateCurves { temperatures: vec![10.0, 30.0], r_qw: vec![1.0, 3.0], r_cap: vec![4.0, 2.0] };
        let m = curves.apply(&barrier(), 20.0).unwrap();
        assert!((m.r_qw - 2.0).abs() < 1e-15 && (m.r_cap - 3.0).abs() < 1e-15);
        let m = curves.apply(&barrier(), 50.0).unwrap();
        assert_eq!((m.r_qw, m.r_cap), (3.0, 2.0));
    }
}
