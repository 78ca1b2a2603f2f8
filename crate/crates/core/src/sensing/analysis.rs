use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Discrete, DiscreteCDF, Poisson};
use statrs::function::gamma::ln_gamma;

use super::trace::{simulate_trace, TelegraphModel, TelegraphTrace, TIE_STREAM};
use crate::error::{Error, Result};

/// P(X < t) + P(X = t)/2 and P(X > t) + P(X = t)/2 for X ~ Poisson(λ).
fn split(lambda: f64, threshold: f64) -> (f64, f64) {
    if lambda <= 0.0 {
        return match 0.0f64.partial_cmp(&threshold) {
            Some(std::cmp::Ordering::Less) => (1.0, 0.0),
            Some(std::cmp::Ordering::Equal) => (0.5, 0.5),
            _ => (0.0, 1.0),
        };
    }
    let p = Poisson::new(lambda).unwrap();
    let (below, tie) = if threshold.fract() == 0.0 && threshold >= 0.0 {
        let k = threshold as u64;
        let below = if k == 0 { 0.0 } else { p.cdf(k - 1) };
        (below, p.pmf(k))
    } else if threshold < 0.0 {
        (0.0, 0.0)
    } else {
        (p.cdf(threshold.floor() as u64), 0.0)
    };
    let above = (1.0 - below - tie).max(0.0);
    (below + 0.5 * tie, above + 0.5 * tie)
}

/// Misclassification probability of non-switching bins for Poisson levels
/// `lambda_loaded`, `lambda_empty` with loaded weight `w_loaded`.
pub fn analytic_error(lambda_loaded: f64, lambda_empty: f64, w_loaded: f64, threshold: f64) -> f64 {
    let (lb, la) = split(lambda_loaded, threshold);
    let (eb, ea) = split(lambda_empty, threshold);
    if lambda_loaded <= lambda_empty {
        w_loaded * la + (1.0 - w_loaded) * eb
    } else {
        w_loaded * lb + (1.0 - w_loaded) * ea
    }
}

/// Half-integer threshold minimizing [`analytic_error`]: the crossing of the
/// two weighted Poisson distributions, refined over neighboring integers.
pub fn optimal_threshold(lambda_loaded: f64, lambda_empty: f64, w_loaded: f64) -> f64 {
    let (lo, hi) = (lambda_loaded.min(lambda_empty), lambda_loaded.max(lambda_empty));
    let (w_lo, w_hi) = if lambda_loaded <= lambda_empty { (w_loaded, 1.0 - w_loaded) } else { (1.0 - w_loaded, w_loaded) };
    let crossing = if lo > 0.0 && hi > lo && w_lo > 0.0 && w_hi > 0.0 {
        (hi - lo + (w_lo / w_hi).ln()) / (hi / lo).ln()
    } else {
        0.5 * (lo + hi)
    };
    let centre = crossing.max(0.0).floor();
    (-3..=3)
        .map(|d| (centre + d as f64 + 0.5).max(0.5))
        .map(|t| (t, analytic_error(lambda_loaded, lambda_empty, w_loaded, t)))
        .fold((centre + 0.5, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub threshold: f64,
    /// Loaded (true) or empty per bin.
    pub states: Vec<bool>,
    /// Misclassified bins over all bins, against the majority state.
    pub error_probability: f64,
    pub error_sigma: f64,
    pub pure_bins: usize,
    /// Misclassified fraction of the non-switching bins.
    pub pure_error: f64,
    /// Poisson-overlap prediction for the non-switching bins, weighted by
    /// their observed composition. Ignores read noise.
    pub analytic_error: f64,
    /// Binomial error of `pure_error` at the predicted rate.
    pub pure_sigma: f64,
    /// Bound on the fraction of bins containing a switch.
    pub switching_bound: f64,
    /// False when the threshold is not strictly between the two levels.
    pub threshold_inside: bool,
}

/// Threshold classification of every bin; counts equal to the threshold
/// are assigned at random.
pub fn classify(trace: &TelegraphTrace, threshold: f64) -> Result<Classification> {
    if trace.is_empty() {
        return Err(Error::EmptyGrid("trace"));
    }
    let m = &trace.model;
    let (ll, le) = (m.lambda_loaded(), m.lambda_empty());
    let loaded_below = ll <= le;
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    rng.set_stream(TIE_STREAM);
    let states: Vec<bool> = trace
        .counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            let below = if c == threshold { rng.random::<bool>() } else { c < threshold };
            below == loaded_below
        })
        .collect();

    let n = trace.len();
    let wrong = states.iter().zip(&trace.truth).filter(|(a, b)| a != b).count();
    let error = wrong as f64 / n as f64;
    let (mut pure, mut pure_wrong, mut pure_loaded) = (0usize, 0usize, 0usize);
    for k in 0..n {
        if trace.is_pure(k) {
            pure += 1;
            pure_loaded += usize::from(trace.truth[k]);
            pure_wrong += usize::from(states[k] != trace.truth[k]);
        }
    }
    let w_loaded = if pure > 0 { pure_loaded as f64 / pure as f64 } else { m.loaded_occupancy() };
    let analytic = analytic_error(ll, le, w_loaded, threshold);
    let pure_error = if pure > 0 { pure_wrong as f64 / pure as f64 } else { f64::NAN };
    Ok(Classification {
        threshold,
        states,
        error_probability: error,
        error_sigma: (error * (1.0 - error) / n as f64).sqrt(),
        pure_bins: pure,
        pure_error,
        analytic_error: analytic,
        pure_sigma: (analytic * (1.0 - analytic) / pure.max(1) as f64).sqrt(),
        switching_bound: 1.0 - (-(m.k_cap + m.k_rel) * m.dt).exp(),
        threshold_inside: threshold > ll.min(le) && threshold < ll.max(le),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub bin_width: u64,
    /// Lower edge of each bin, counts.
    pub lower: Vec<u64>,
    pub frequency: Vec<u64>,
}

impl CountHistogram {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().map(move |&l| l as f64 + (self.bin_width as f64 - 1.0) / 2.0)
    }
}

/// Two-component Poisson mixture fitted to the counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    /// Component means, ascending.
    pub means: [f64; 2],
    pub weights: [f64; 2],
    pub loaded_weight: f64,
    pub empty_weight: f64,
    /// Expected spread of the loaded weight for a trace of this length,
    /// including the chain's correlation time.
    pub weight_sigma: f64,
    /// Fitted mixture minimum between the means over the lower peak height.
    pub valley_ratio: f64,
    pub iterations: usize,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub histogram: CountHistogram,
    pub fit: MixtureFit,
}

fn ln_poisson(k: f64, lambda: f64) -> f64 {
    k * lambda.ln() - lambda - ln_gamma(k + 1.0)
}

fn mixture_pmf(k: f64, means: &[f64; 2], weights: &[f64; 2]) -> f64 {
    (0..2).map(|c| weights[c] * ln_poisson(k, means[c]).exp()).sum()
}

const EM_MAX_ITERATIONS: usize = 2000;
const EM_TOL: f64 = 1e-10;

fn fit_mixture(counts: &[u64]) -> Result<(f64, [f64; 2], [f64; 2], usize)> {
    let mut values: Vec<u64> = counts.to_vec();
    values.sort_unstable();
    let n = values.len() as f64;
    let q = |f: f64| values[((values.len() - 1) as f64 * f) as usize] as f64;
    let mut means = [q(0.1).max(0.5), q(0.9).max(1.0)];
    if means[1] <= means[0] {
        means[1] = means[0] + 1.0;
    }
    let mut weights = [0.5f64, 0.5];
    let mut unique: Vec<(f64, f64)> = Vec::new();
    for &v in &values {
        match unique.last_mut() {
            Some((x, m)) if *x == v as f64 => *m += 1.0,
            _ => unique.push((v as f64, 1.0)),
        }
    }
    let mut last_change = f64::INFINITY;
    for it in 1..=EM_MAX_ITERATIONS {
        let mut sum_r = [0.0f64; 2];
        let mut sum_rk = [0.0; 2];
        let mut ll = 0.0;
        for &(k, mult) in &unique {
            let a = weights[0].ln() + ln_poisson(k, means[0]);
            let b = weights[1].ln() + ln_poisson(k, means[1]);
            let top = a.max(b);
            let norm = top + ((a - top).exp() + (b - top).exp()).ln();
            ll += mult * norm;
            for (c, l) in [a, b].into_iter().enumerate() {
                let r = (l - norm).exp() * mult;
                sum_r[c] += r;
                sum_rk[c] += r * k;
            }
        }
        let mut change: f64 = 0.0;
        for c in 0..2 {
            if sum_r[c] <= 0.0 {
                return Err(Error::FitFailed { iterations: it, last_change });
            }
            let m = (sum_rk[c] / sum_r[c]).max(1e-9);
            let w = sum_r[c] / n;
            change = change.max((m - means[c]).abs() / means[c].max(1.0)).max((w - weights[c]).abs());
            means[c] = m;
            weights[c] = w;
        }
        last_change = change;
        if change < EM_TOL {
            if means[0] > means[1] {
                means.swap(0, 1);
                weights.swap(0, 1);
            }
            return Ok((ll, means, weights, it));
        }
    }
    Err(Error::FitFailed { iterations: EM_MAX_ITERATIONS, last_change })
}

/// Count histogram and a two-Poisson mixture fit by expectation maximization.
pub fn histogram(trace: &TelegraphTrace, bin_width: Option<u64>) -> Result<HistogramReport> {
    if trace.len() < 1000 {
        return Err(Error::Domain(format!("need at least 1000 bins, got {}", trace.len())));
    }
    let lo = *trace.counts.iter().min().unwrap();
    let hi = *trace.counts.iter().max().unwrap();
    let width = bin_width.unwrap_or(((hi - lo) / 100).max(1)).max(1);
    let nbins = ((hi - lo) / width + 1) as usize;
    let mut frequency = vec![0u64; nbins];
    for &c in &trace.counts {
        frequency[((c - lo) / width) as usize] += 1;
    }
    let lower = (0..nbins).map(|b| lo + b as u64 * width).collect();

    let (log_likelihood, means, weights, iterations) = fit_mixture(&trace.counts)?;
    let m = &trace.model;
    let loaded_is_low = m.lambda_loaded() <= m.lambda_empty();
    let (loaded_weight, empty_weight) = if loaded_is_low { (weights[0], weights[1]) } else { (weights[1], weights[0]) };
    let p = m.loaded_occupancy();
    let total_time = trace.len() as f64 * m.dt;
    let k_sum = m.k_cap + m.k_rel;
    let weight_sigma = (2.0 * p * (1.0 - p) / (k_sum * total_time) + p * (1.0 - p) / trace.len() as f64).sqrt();

    let peak = (0..2).map(|c| mixture_pmf(means[c].round(), &means, &weights)).fold(f64::INFINITY, f64::min);
    let (a, b) = (means[0].ceil() as u64, means[1].floor() as u64);
    let valley = (a..=b.max(a)).map(|k| mixture_pmf(k as f64, &means, &weights)).fold(f64::INFINITY, f64::min);
    Ok(HistogramReport {
        histogram: CountHistogram { bin_width: width, lower, frequency },
        fit: MixtureFit {
            means,
            weights,
            loaded_weight,
            empty_weight,
            weight_sigma,
            valley_ratio: valley / peak,
            iterations,
            log_likelihood,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov distribution tail `P(K > x)`.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against an exponential law.
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::EmptyGrid("samples"));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate must be > 0, got {rate}")));
    }
    let mut x = samples.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = 1.0 - (-rate * v).exp();
            (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok(KsResult { statistic: d, p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d), n: x.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub flux: f64,
    pub threshold: f64,
    pub error_probability: f64,
    pub error_sigma: f64,
    pub analytic_error: f64,
}

/// Classification error against incident flux, each at its optimal
/// threshold. All points share the seed and therefore the trap history.
pub fn error_vs_flux(model: &TelegraphModel, duration: f64, fluxes: &[f64]) -> Result<Vec<ErrorPoint>> {
    if fluxes.is_empty() {
        return Err(Error::EmptyGrid("flux"));
    }
    fluxes
        .iter()
        .map(|&flux| {
            let m = TelegraphModel { flux, ..*model };
            let trace = simulate_trace(&m, duration)?;
            let thr = optimal_threshold(m.lambda_loaded(), m.lambda_empty(), m.loaded_occupancy());
            let c = classify(&trace, thr)?;
            Ok(ErrorPoint {
                flux,
                threshold: thr,
                error_probability: c.error_probability,
                error_sigma: c.error_sigma,
                analytic_error: c.analytic_error,
            })
        })
        .collect()
}
