use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{converge_truncation, steady_state, FockSpace, Frame, HilbertConfig, LindbladGenerator};
use crate::qed::DeviceParams;

/// Steady-state response at one detuning and incident flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwPoint {
    /// ω − ω_C in rad/ns.
    pub detuning: f64,
    /// Incident flux in photons/ns.
    pub flux: f64,
    /// Total reflected over incident photon flux.
    pub reflectivity: f64,
    /// Same with the incoherent cavity emission left out.
    pub reflectivity_coherent: f64,
    /// Mean reflected mode-matched field over the mode-matched input field.
    pub amplitude: C64,
    pub excited_population: f64,
    pub photon_number: f64,
    pub n_max: usize,
}

/// Reflectivity sampled over detuning at a fixed flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub points: Vec<CwPoint>,
    pub params_fingerprint: String,
    pub flux: f64,
    /// Largest Fock cutoff needed on the grid.
    pub n_max: usize,
}

impl Spectrum {
    pub fn detunings(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.detuning).collect()
    }

    pub fn reflectivities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.reflectivity).collect()
    }
}

fn solve_at(params: &DeviceParams, detuning: f64, flux: f64, n_max: usize, cfg: &HilbertConfig) -> Result<CwPoint> {
    let b = C64::new(flux.sqrt(), 0.0);
    let laser = params.omega_c + detuning;
    let gen = LindbladGenerator::new(params, laser, b, FockSpace::new(n_max)?, Frame::Displaced)?;
    let ss = steady_state(&gen, cfg)?;
    let out = gen.reflected_flux(&ss, b);
    let (reflectivity, reflectivity_coherent) =
        if flux > 0.0 { (out.total / flux, out.coherent / flux) } else { (f64::NAN, f64::NAN) };
    let b_in = b * params.eta_in.sqrt();
    let amplitude = (b_in - ss.cavity_amplitude() * params.kappa_top.sqrt()) / b_in;
    Ok(CwPoint {
        detuning,
        flux,
        reflectivity,
        reflectivity_coherent,
        amplitude,
        excited_population: ss.excited_population(),
        photon_number: ss.photon_number(),
        n_max,
    })
}

/// Steady-state reflectivity at one point, with the Fock cutoff doubled
/// until the reflectivity is converged to `cfg.truncation_tol`.
pub fn cw_point(params: &DeviceParams, detuning: f64, flux: f64, cfg: &HilbertConfig) -> Result<CwPoint> {
    if !(flux > 0.0) || !flux.is_finite() {
        return Err(Error::Domain(format!("cw flux must be > 0, got {flux}")));
    }
    let conv = converge_truncation(|n| solve_at(params, detuning, flux, n, cfg).map(|p| p.reflectivity), cfg)?;
    solve_at(params, detuning, flux, conv.n_max, cfg)
}

/// Reflectivity spectrum at a constant incident flux.
pub fn cw_spectrum(params: &DeviceParams, flux: f64, detunings: &[f64], cfg: &HilbertConfig) -> Result<Spectrum> {
    params.validate()?;
    if detunings.is_empty() {
        return Err(Error::EmptyGrid("detuning grid"));
    }
    let points = detunings.par_iter().map(|&d| cw_point(params, d, flux, cfg)).collect::<Result<Vec<_>>>()?;
    let n_max = points.iter().map(|p| p.n_max).max().unwrap_or(cfg.n_max);
    Ok(Spectrum { points, params_fingerprint: params.fingerprint(), flux, n_max })
}

/// Reflectivity at one detuning over a list of incident fluxes.
pub fn cw_power_sweep(params: &DeviceParams, detuning: f64, fluxes: &[f64], cfg: &HilbertConfig) -> Result<Vec<CwPoint>> {
    params.validate()?;
    if fluxes.is_empty() {
        return Err(Error::EmptyGrid("flux grid"));
    }
    fluxes.par_iter().map(|&f| cw_point(params, detuning, f, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflectivity::{linear_reflection_amplitude, linear_reflectivity};

    #[test]
    fn weak_drive_matches_linear_response() {
        let p = DeviceParams::from_cooperativity(20.0, 60.0, 1.0, 2.5, 0.3, 0.9).unwrap();
        let cfg = HilbertConfig { n_max: 1, ..HilbertConfig::default() };
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 4.0).collect();
        let s = cw_spectrum(&p, 1e-6, &grid, &cfg).unwrap();
        for pt in &s.points {
            let r = linear_reflection_amplitude(&p, pt.detuning, true);
            assert!((pt.amplitude - r).norm() < 1e-6);
            assert!((pt.reflectivity_coherent - linear_reflectivity(&p, pt.detuning, true)).abs() < 1e-6);
        }
    }

    #[test]
    fn dephasing_adds_incoherent_light_at_weak_drive() {
        let dephased = DeviceParams::from_cooperativity(20.0, 60.0, 1.0, 2.5, 0.3, 0.9).unwrap();
        let radiative = DeviceParams { gamma_star: 0.0, ..dephased };
        let cfg = HilbertConfig { n_max: 1, ..HilbertConfig::default() };
        let a = cw_point(&radiative, 0.0, 1e-6, &cfg).unwrap();
        assert!((a.reflectivity - linear_reflectivity(&radiative, 0.0, true)).abs() < 1e-6);
        let b = cw_point(&dephased, 0.0, 1e-6, &cfg).unwrap();
        assert!(b.reflectivity > b.reflectivity_coherent + 1e-3);
    }

    #[test]
    fn weak_drive_field_matches_linear_amplitude() {
        let p = DeviceParams::from_cooperativity(15.0, 50.0, 1.0, 3.0, 0.5, 1.0).unwrap();
        let b = C64::new(1e-3, 0.0);
        for d in [-20.0, -7.0, 0.0, 3.0, 15.0] {
            let gen = LindbladGenerator::lab(&p, p.omega_c + d, b, 2).unwrap();
            let ss = steady_state(&gen, &HilbertConfig::default()).unwrap();
            let lin = crate::reflectivity::linear_cavity_amplitude(&p, d, b);
            assert!((ss.cavity_amplitude() - lin).norm() < 1e-6 * lin.norm(), "{d}");
        }
    }

    #[test]
    fn resonant_dip_deepens_with_flux() {
        let p = DeviceParams::from_cooperativity(20.0, 60.0, 1.0, 2.5, 0.3, 0.95).unwrap();
        let cfg = HilbertConfig::default();
        let fluxes: Vec<f64> = (0..10).map(|k| 0.5 * 2f64.powi(k)).collect();
        let sweep = cw_power_sweep(&p, 0.0, &fluxes, &cfg).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].reflectivity <= w[0].reflectivity + 1e-9);
        }
    }

    #[test]
    fn saturated_spectrum_approaches_bare_cavity() {
        let p = DeviceParams::from_cooperativity(20.0, 60.0, 1.0, 2.5, 0.3, 0.95).unwrap();
        let cfg = HilbertConfig::default();
        let flux = 3e5;
        for d in [-60.0, -20.0, 0.0, 10.0, 40.0] {
            let pt = cw_point(&p, d, flux, &cfg).unwrap();
            assert!(pt.excited_population > 0.49);
            assert!((pt.reflectivity - linear_reflectivity(&p, d, false)).abs() < 2e-2, "{d}");
        }
    }

    #[test]
    fn zero_flux_rejected() {
        let p = DeviceParams::from_cooperativity(20.0, 60.0, 1.0, 2.5, 0.3, 0.95).unwrap();
        assert!(cw_point(&p, 0.0, 0.0, &HilbertConfig::default()).is_err());
        assert!(cw_spectrum(&p, 1.0, &[], &HilbertConfig::default()).is_err());
    }
}
