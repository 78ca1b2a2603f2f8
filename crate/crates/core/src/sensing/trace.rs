use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const PATH_STREAM: u64 = 0;
pub(crate) const COUNT_STREAM: u64 = 1;
pub(crate) const TIE_STREAM: u64 = 2;

/// Two-state trap monitored through the cavity reflectivity.
///
/// Times in μs, rates in 1/μs, flux in photons/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelegraphModel {
    pub k_cap: f64,
    pub k_rel: f64,
    pub r_loaded: f64,
    pub r_empty: f64,
    pub flux: f64,
    pub eta_det: f64,
    pub dt: f64,
    /// Standard deviation of additive Gaussian detector noise, counts/bin.
    pub read_noise: f64,
    pub seed: u64,
}

impl Default for TelegraphModel {
    /// λ_L = 100 and λ_E = 300 counts per 1 μs bin; trap dwell times of
    /// 200 μs (empty) and 100 μs (loaded).
    fn default() -> Self {
        TelegraphModel {
            k_cap: 0.005,
            k_rel: 0.01,
            r_loaded: 0.2,
            r_empty: 0.6,
            flux: 1000.0,
            eta_det: 0.5,
            dt: 1.0,
            read_noise: 0.0,
            seed: 1,
        }
    }
}

impl TelegraphModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_cap > 0.0) || !(self.k_rel > 0.0) {
            return Err(Error::Domain(format!("rates must be > 0, got {} and {}", self.k_cap, self.k_rel)));
        }
        for (name, v) in [("r_loaded", self.r_loaded), ("r_empty", self.r_empty), ("eta_det", self.eta_det)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} not in [0, 1]")));
            }
        }
        if !(self.flux >= 0.0) || !self.flux.is_finite() {
            return Err(Error::Domain(format!("flux must be finite and >= 0, got {}", self.flux)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Domain(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.read_noise >= 0.0) {
            return Err(Error::Domain(format!("read_noise must be >= 0, got {}", self.read_noise)));
        }
        Ok(())
    }

    /// Mean detected counts per bin in the loaded state.
    pub fn lambda_loaded(&self) -> f64 {
        self.flux * self.eta_det * self.r_loaded * self.dt
    }

    pub fn lambda_empty(&self) -> f64 {
        self.flux * self.eta_det * self.r_empty * self.dt
    }

    /// Stationary probability of the loaded state.
    pub fn loaded_occupancy(&self) -> f64 {
        if self.k_rel.is_infinite() {
            return 0.0;
        }
        self.k_cap / (self.k_cap + self.k_rel)
    }
}

/// Constant-state interval of the trap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub loaded: bool,
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelegraphTrace {
    pub model: TelegraphModel,
    /// Bin start times, μs.
    pub times: Vec<f64>,
    /// Fraction of each bin spent loaded.
    pub loaded_fraction: Vec<f64>,
    /// Majority state of each bin.
    pub truth: Vec<bool>,
    pub counts: Vec<u64>,
    /// Trap history covering the trace.
    pub segments: Vec<Segment>,
}

impl TelegraphTrace {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Bins without a state change.
    pub fn is_pure(&self, k: usize) -> bool {
        self.loaded_fraction[k] == 0.0 || self.loaded_fraction[k] == 1.0
    }

    /// Completed dwell times in the given state; the censored first and
    /// last segments are skipped.
    pub fn dwell_times(&self, loaded: bool) -> Vec<f64> {
        let n = self.segments.len();
        if n < 3 {
            return Vec::new();
        }
        self.segments[1..n - 1].iter().filter(|s| s.loaded == loaded && s.duration > 0.0).map(|s| s.duration).collect()
    }
}

fn sample_path(model: &TelegraphModel, duration: f64, rng: &mut ChaCha8Rng) -> Vec<Segment> {
    let mut loaded = rng.random::<f64>() < model.loaded_occupancy();
    let mut t = 0.0;
    let mut segments = Vec::new();
    while t < duration {
        let rate = if loaded { model.k_rel } else { model.k_cap };
        let e: f64 = Exp1.sample(rng);
        let d = e / rate;
        segments.push(Segment { loaded, start: t, duration: d });
        t += d;
        loaded = !loaded;
    }
    segments
}

/// Detected counts for a prescribed trap history.
pub fn render_trace(model: &TelegraphModel, segments: &[Segment], duration: f64) -> Result<TelegraphTrace> {
    model.validate()?;
    if !(duration >= model.dt) {
        return Err(Error::Domain(format!("duration {duration} shorter than one bin")));
    }
    let n = (duration / model.dt + 1e-9).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(COUNT_STREAM);
    let noise = if model.read_noise > 0.0 { Some(Normal::new(0.0, model.read_noise).unwrap()) } else { None };
    let (ll, le) = (model.lambda_loaded(), model.lambda_empty());

    let mut times = Vec::with_capacity(n);
    let mut loaded_fraction = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let (a, b) = (k as f64 * model.dt, (k + 1) as f64 * model.dt);
        let mut loaded_time = 0.0;
        while seg < segments.len() && segments[seg].start + segments[seg].duration <= a {
            seg += 1;
        }
        let mut j = seg;
        while j < segments.len() && segments[j].start < b {
            let s = &segments[j];
            if s.loaded {
                loaded_time += (s.start + s.duration).min(b) - s.start.max(a);
            }
            j += 1;
        }
        let f = (loaded_time / model.dt).clamp(0.0, 1.0);
        let f = if f < 1e-12 { 0.0 } else if f > 1.0 - 1e-12 { 1.0 } else { f };
        let lambda = f * ll + (1.0 - f) * le;
        let mut c = if lambda > 0.0 { Poisson::new(lambda).unwrap().sample(&mut rng) } else { 0.0 };
        if let Some(noise) = &noise {
            c = (c + noise.sample(&mut rng)).round().max(0.0);
        }
        times.push(a);
        loaded_fraction.push(f);
        counts.push(c as u64);
    }
    let truth = loaded_fraction.iter().map(|&f| f >= 0.5).collect();
    Ok(TelegraphTrace { model: *model, times, loaded_fraction, truth, counts, segments: segments.to_vec() })
}

/// Samples the two-state chain from its stationary law and the detected
/// counts in each bin.
pub fn simulate_trace(model: &TelegraphModel, duration: f64) -> Result<TelegraphTrace> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(PATH_STREAM);
    let segments = sample_path(model, duration, &mut rng);
    render_trace(model, &segments, duration)
}

/// Independent traces; trace `k` uses seed `model.seed + k`.
pub fn simulate_traces(model: &TelegraphModel, duration: f64, count: usize) -> Result<Vec<TelegraphTrace>> {
    (0..count)
        .into_par_iter()
        .map(|k| simulate_trace(&TelegraphModel { seed: model.seed.wrapping_add(k as u64), ..*model }, duration))
        .collect()
}
