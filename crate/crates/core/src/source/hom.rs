use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Photon pairs per random stream.
const PAIR_BLOCK: usize = 8192;

/// Noise acting on the emitter between and during emission events.
///
/// Rates in 1/ns, `sd_sigma` in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    /// Pure dephasing rate γ*.
    pub gamma_star: f64,
    /// Inverse correlation time of the spectral diffusion.
    pub sd_rate: f64,
    /// Stationary standard deviation of the spectral-diffusion detuning.
    pub sd_sigma: f64,
    /// Relaxation rate into the emitting level. `None` means no timing jitter.
    pub jitter_rate: Option<f64>,
    pub seed: u64,
}

impl DephasingModel {
    pub fn noiseless(seed: u64) -> Self {
        DephasingModel { gamma_star: 0.0, sd_rate: 0.0, sd_sigma: 0.0, jitter_rate: None, seed }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_star", self.gamma_star), ("sd_rate", self.sd_rate), ("sd_sigma", self.sd_sigma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if let Some(r) = self.jitter_rate {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Domain(format!("jitter_rate must be > 0, got {r}")));
            }
        }
        Ok(())
    }
}

/// Two-photon interference visibility estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomResult {
    pub m: f64,
    pub sigma: f64,
    /// Time bin in ns, `None` for no post-selection.
    pub time_bin: Option<f64>,
    /// Mean probability that both photons fall in the bin.
    pub acceptance: f64,
    pub n_pairs: usize,
}

struct Sample {
    weight: f64,
    phase: f64,
    freq: f64,
    t1: f64,
    t2: f64,
    /// Emission times of each photon on its own, for the normalization.
    own1: f64,
    own2: f64,
}

fn draw(model: &DephasingModel, gamma: f64, delay: f64, rng: &mut ChaCha8Rng) -> Sample {
    let (s1, s2) = match model.jitter_rate {
        Some(r) => {
            let a: f64 = Exp1.sample(rng);
            let b: f64 = Exp1.sample(rng);
            (a / r, b / r)
        }
        None => (0.0, 0.0),
    };
    let start = s1.max(s2);
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    let t1 = start + e1 / gamma;
    let t2 = start + e2 / gamma;
    let tau = (t1 - t2).abs();
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let phase = (2.0 * model.gamma_star * tau).sqrt() * (z1 - z2);
    let w1: f64 = StandardNormal.sample(rng);
    let w2: f64 = StandardNormal.sample(rng);
    let rho = (-model.sd_rate * delay).exp();
    let omega1 = model.sd_sigma * w1;
    let omega2 = rho * omega1 + model.sd_sigma * (1.0 - rho * rho).sqrt() * w2;
    Sample {
        weight: (-gamma * (s1 - s2).abs()).exp(),
        phase,
        freq: omega2 - omega1,
        t1,
        t2,
        own1: s1 + e1 / gamma,
        own2: s2 + e2 / gamma,
    }
}

impl Sample {
    fn kernel(&self) -> f64 {
        self.weight * (self.phase + self.freq * (self.t1 - self.t2)).cos()
    }

    /// Both photons, taken separately, detected before `bin`.
    fn in_bin(&self, bin: f64) -> f64 {
        f64::from(u8::from(self.own1 <= bin && self.own2 <= bin))
    }
}

#[derive(Default, Clone)]
struct Sums {
    num: f64,
    num2: f64,
    den: f64,
    den2: f64,
    cross: f64,
}

/// HOM visibility for several time bins from one shared set of samples.
///
/// Photons are emitted after an optional relaxation jitter with lifetime
/// `t1` (ns) and are separated by `delay` (ns), over which the spectral
/// diffusion decorrelates. A time bin keeps only detections within `bin` ns
/// of the excitation; `None` in `bins` keeps everything.
pub fn hom_time_bins(
    model: &DephasingModel,
    t1: f64,
    delay: f64,
    bins: &[Option<f64>],
    n_pairs: usize,
) -> Result<Vec<HomResult>> {
    model.validate()?;
    if !(t1 > 0.0) || !t1.is_finite() {
        return Err(Error::Domain(format!("t1 must be > 0, got {t1}")));
    }
    if !(delay >= 0.0) {
        return Err(Error::Domain(format!("delay must be >= 0, got {delay}")));
    }
    if n_pairs < 2 {
        return Err(Error::Domain("need at least two photon pairs".into()));
    }
    if bins.iter().flatten().any(|&b| !(b > 0.0)) {
        return Err(Error::Domain("time bins must be > 0".into()));
    }
    let gamma = 1.0 / t1;
    let blocks = n_pairs.div_ceil(PAIR_BLOCK);
    let per_block: Vec<Vec<Sums>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
            rng.set_stream(b as u64);
            let count = PAIR_BLOCK.min(n_pairs - b * PAIR_BLOCK);
            let mut sums = vec![Sums::default(); bins.len()];
            for _ in 0..count {
                let s = draw(model, gamma, delay, &mut rng);
                let k = s.kernel();
                for (acc, bin) in sums.iter_mut().zip(bins) {
                    let (x, y) = match bin {
                        None => (k, 1.0),
                        Some(bin) => {
                            let inside = s.t1 <= *bin && s.t2 <= *bin;
                            (if inside { k } else { 0.0 }, s.in_bin(*bin))
                        }
                    };
                    acc.num += x;
                    acc.num2 += x * x;
                    acc.den += y;
                    acc.den2 += y * y;
                    acc.cross += x * y;
                }
            }
            sums
        })
        .collect();

    let n = n_pairs as f64;
    let mut out = Vec::with_capacity(bins.len());
    for (i, bin) in bins.iter().enumerate() {
        let mut t = Sums::default();
        for block in &per_block {
            let s = &block[i];
            t.num += s.num;
            t.num2 += s.num2;
            t.den += s.den;
            t.den2 += s.den2;
            t.cross += s.cross;
        }
        let (mx, my) = (t.num / n, t.den / n);
        if !(my > 0.0) {
            return Err(Error::DegeneratePostSelection);
        }
        let vx = (t.num2 / n - mx * mx) * n / (n - 1.0);
        let vy = (t.den2 / n - my * my) * n / (n - 1.0);
        let cxy = (t.cross / n - mx * my) * n / (n - 1.0);
        let m = mx / my;
        let var = (vx - 2.0 * m * cxy + m * m * vy).max(0.0) / (n * my * my);
        out.push(HomResult { m, sigma: var.sqrt(), time_bin: *bin, acceptance: my, n_pairs });
    }
    Ok(out)
}

/// HOM visibility with an optional detection time bin.
pub fn hom_indistinguishability(
    model: &DephasingModel,
    t1: f64,
    delay: f64,
    time_bin: Option<f64>,
    n_pairs: usize,
) -> Result<HomResult> {
    Ok(hom_time_bins(model, t1, delay, &[time_bin], n_pairs)?.remove(0))
}
