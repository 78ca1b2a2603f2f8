use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::drive::GaussianPulse;
use super::linear::linear_reflectivity;
use super::threshold::PowerCurve;
use crate::error::{Error, Result};
use crate::hilbert::{converge_truncation, DensityMatrix, FockSpace, Frame, HilbertConfig, LindbladGenerator, Propagator};
use crate::qed::DeviceParams;

/// Reflection of one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsedPoint {
    pub photons: f64,
    /// Reflected over incident photons, including incoherent emission.
    pub reflectivity: f64,
    pub reflectivity_coherent: f64,
    /// Peak excited-state population during the pulse.
    pub peak_excitation: f64,
    pub n_max: usize,
    pub max_trace_drift: f64,
}

/// Residual excitation, relative to the pulse, at which integration stops.
const TAIL_TOLERANCE: f64 = 1e-9;
/// Absolute floor for the residual excitation, above integrator noise.
const TAIL_FLOOR: f64 = 1e-13;
const MAX_TAIL_CHUNKS: usize = 400;

fn integrate_pulse(params: &DeviceParams, pulse: &GaussianPulse, n_max: usize, cfg: &HilbertConfig) -> Result<PulsedPoint> {
    let laser = params.omega_c + pulse.detuning;
    let gen = LindbladGenerator::new(params, laser, C64::new(0.0, 0.0), FockSpace::new(n_max)?, Frame::Displaced)?;
    let drive = |t: f64| pulse.amplitude(t);
    let sigma = pulse.sigma();
    let t_start = pulse.center - 5.0 * sigma;
    let rho0 = DensityMatrix::vacuum(gen.space);
    let mut prop = Propagator::new(&gen, &drive, &rho0, t_start, cfg)?;

    let mut peak: f64 = 0.0;
    let samples = 40;
    let t_end = pulse.center + 5.0 * sigma;
    for k in 1..=samples {
        prop.advance_to(t_start + (t_end - t_start) * k as f64 / samples as f64)?;
        peak = peak.max(prop.state().excited_population());
    }
    let chunk = sigma.max(0.5 / (params.kappa() + params.gamma_sp));
    let mut chunks = 0;
    loop {
        let s = prop.state();
        let remaining = s.photon_number() + s.excited_population();
        if remaining <= TAIL_TOLERANCE * pulse.photons + TAIL_FLOOR {
            break;
        }
        chunks += 1;
        if chunks > MAX_TAIL_CHUNKS {
            return Err(Error::Integration {
                time: prop.time(),
                reason: format!("excitation {remaining:.3e} left after the pulse did not decay"),
            });
        }
        prop.advance_to(prop.time() + chunk)?;
    }

    let counts = prop.counts();
    if !(counts.incident > 0.0) {
        return Err(Error::Domain("pulse carries no photons".into()));
    }
    Ok(PulsedPoint {
        photons: pulse.photons,
        reflectivity: counts.reflected / counts.incident,
        reflectivity_coherent: counts.reflected_coherent / counts.incident,
        peak_excitation: peak,
        n_max,
        max_trace_drift: prop.max_trace_drift,
    })
}

/// Integrates the master equation over one Gaussian pulse and returns the
/// fraction of photons reflected. The Fock cutoff is doubled from
/// `cfg.n_max` until the reflectivity changes by less than
/// `cfg.truncation_tol`.
pub fn pulsed_response(params: &DeviceParams, pulse: &GaussianPulse, cfg: &HilbertConfig) -> Result<PulsedPoint> {
    params.validate()?;
    pulse.validate()?;
    if pulse.photons == 0.0 {
        return Err(Error::Domain("pulsed response needs photons > 0; use linear_pulse_reflectivity for N -> 0".into()));
    }
    let conv = converge_truncation(|n| integrate_pulse(params, pulse, n, cfg).map(|p| p.reflectivity), cfg)?;
    integrate_pulse(params, pulse, conv.n_max, cfg)
}

/// Coherent pulse reflectivity in the linear regime: the measured
/// reflectivity averaged over the pulse's intensity spectrum. With
/// `qd_active = false` this is the saturated (bare cavity) limit.
///
/// With pure dephasing the dot also scatters incoherently at vanishing
/// power, so the total reflectivity from [`pulsed_response`] lies above this
/// value; they coincide when `gamma_star = 0`.
pub fn linear_pulse_reflectivity(params: &DeviceParams, pulse: &GaussianPulse, qd_active: bool) -> f64 {
    let s = pulse.spectral_sigma();
    let n = 4000;
    let half = 10.0 * s;
    let h = 2.0 * half / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=n {
        let x = -half + i as f64 * h;
        let w = (-(x * x) / (2.0 * s * s)).exp() * if i == 0 || i == n { 0.5 } else { 1.0 };
        num += w * linear_reflectivity(params, pulse.detuning + x, qd_active);
        den += w;
    }
    num / den
}

/// Photon number used to evaluate the N → 0 plateau.
pub const LINEAR_PROBE_PHOTONS: f64 = 1e-6;

/// Pulsed reflectivity over a grid of photon numbers, with the N → 0
/// and N → ∞ limits attached for threshold extraction.
///
/// The N → 0 limit is the master-equation result at
/// [`LINEAR_PROBE_PHOTONS`], which keeps the incoherent light from pure
/// dephasing; the N → ∞ limit is the bare-cavity reflectivity.
pub fn pulsed_power_curve(params: &DeviceParams, photons: &[f64], detuning: f64, cfg: &HilbertConfig) -> Result<PowerCurve> {
    if photons.is_empty() {
        return Err(Error::EmptyGrid("photons-per-pulse grid"));
    }
    let points = photons
        .par_iter()
        .map(|&n| pulsed_response(params, &GaussianPulse::matched(params, n, detuning), cfg))
        .collect::<Result<Vec<_>>>()?;
    let probe = GaussianPulse::matched(params, LINEAR_PROBE_PHOTONS, detuning);
    let low = pulsed_response(params, &probe, cfg)?.reflectivity;
    Ok(PowerCurve {
        x: points.iter().map(|p| p.photons).collect(),
        reflectivity: points.iter().map(|p| p.reflectivity).collect(),
        low_limit: Some(low),
        high_limit: Some(linear_pulse_reflectivity(params, &probe, false)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> DeviceParams {
        DeviceParams::from_cooperativity(25.0, 70.0, 0.8, 2.5, 0.3, 0.95).unwrap()
    }

    #[test]
    fn few_photons_reach_linear_plateau() {
        let p = device();
        let pulse = GaussianPulse::matched(&p, 1e-6, 0.0);
        let pt = pulsed_response(&p, &pulse, &HilbertConfig::default()).unwrap();
        let lin = linear_pulse_reflectivity(&p, &pulse, true);
        assert!((pt.reflectivity_coherent - lin).abs() < 1e-6, "{} vs {lin}", pt.reflectivity_coherent);
        assert!(pt.max_trace_drift < 1e-7);

        let radiative = DeviceParams { gamma_star: 0.0, ..p };
        let pt = pulsed_response(&radiative, &pulse, &HilbertConfig::default()).unwrap();
        let lin = linear_pulse_reflectivity(&radiative, &pulse, true);
        assert!((pt.reflectivity - lin).abs() < 1e-6, "{} vs {lin}", pt.reflectivity);
    }

    #[test]
    fn empty_cavity_pulse_is_linear_at_any_power() {
        let p = device().with_g(0.0);
        let cfg = HilbertConfig::default();
        for n in [0.1, 100.0] {
            let pulse = GaussianPulse::matched(&p, n, 0.0);
            let pt = pulsed_response(&p, &pulse, &cfg).unwrap();
            assert!((pt.reflectivity - linear_pulse_reflectivity(&p, &pulse, false)).abs() < 1e-6);
        }
    }

    #[test]
    fn reflectivity_falls_with_pulse_energy() {
        let p = device();
        let cfg = HilbertConfig::default();
        let curve = pulsed_power_curve(&p, &[0.3, 3.0, 30.0, 300.0], 0.0, &cfg).unwrap();
        for w in curve.reflectivity.windows(2) {
            assert!(w[1] <= w[0] + 1e-3);
        }
        let (lo, hi) = (curve.low_limit.unwrap(), curve.high_limit.unwrap());
        assert!(curve.reflectivity[0] <= lo + 1e-3 && curve.reflectivity[3] >= hi - 1e-3);
    }
}
