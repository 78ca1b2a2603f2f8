use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qed::DeviceParams;

/// Gaussian pulse, Gaussian in field amplitude.
///
/// `bandwidth` is the FWHM of the intensity spectrum in rad/ns. The field is
/// `b(t) = sqrt(N / (√π σ)) exp(−(t − t0)² / 2σ²)` with `σ = 2√ln2 / bandwidth`,
/// so that `∫|b|² dt = N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    /// Mean number of incident photons per pulse.
    pub photons: f64,
    pub bandwidth: f64,
    pub center: f64,
    /// Laser detuning ω − ω_C.
    pub detuning: f64,
}

impl GaussianPulse {
    /// Pulse whose spectral width matches the cavity linewidth, centred at
    /// five temporal widths so that it starts from negligible amplitude at t = 0.
    pub fn matched(params: &DeviceParams, photons: f64, detuning: f64) -> Self {
        let bandwidth = params.kappa();
        let sigma = 2.0 * 2f64.ln().sqrt() / bandwidth;
        GaussianPulse { photons, bandwidth, center: 5.0 * sigma, detuning }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photons >= 0.0) || !self.photons.is_finite() {
            return Err(Error::Domain(format!("photons per pulse must be >= 0, got {}", self.photons)));
        }
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::Domain(format!("pulse bandwidth must be > 0, got {}", self.bandwidth)));
        }
        if !self.detuning.is_finite() || !self.center.is_finite() {
            return Err(Error::Domain("pulse centre and detuning must be finite".into()));
        }
        Ok(())
    }

    /// Temporal standard deviation σ of the field envelope.
    pub fn sigma(&self) -> f64 {
        2.0 * 2f64.ln().sqrt() / self.bandwidth
    }

    /// Field amplitude b(t) in √(photons/ns).
    pub fn amplitude(&self, t: f64) -> C64 {
        let s = self.sigma();
        let peak = (self.photons / (std::f64::consts::PI.sqrt() * s)).sqrt();
        C64::new(peak * (-(t - self.center).powi(2) / (2.0 * s * s)).exp(), 0.0)
    }

    /// Standard deviation of the intensity spectrum |B(ω)|², in rad/ns.
    pub fn spectral_sigma(&self) -> f64 {
        1.0 / (self.sigma() * 2f64.sqrt())
    }
}

/// How the device is driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DriveSpec {
    /// Continuous wave with incident flux |b_in|² in photons/ns.
    Cw { flux: f64, detuning: f64 },
    Pulsed(GaussianPulse),
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriveSpec::Cw { flux, detuning } => {
                if !(*flux >= 0.0) || !flux.is_finite() || !detuning.is_finite() {
                    return Err(Error::Domain(format!("invalid cw drive: flux {flux}, detuning {detuning}")));
                }
                Ok(())
            }
            DriveSpec::Pulsed(p) => p.validate(),
        }
    }

    pub fn detuning(&self) -> f64 {
        match self {
            DriveSpec::Cw { detuning, .. } => *detuning,
            DriveSpec::Pulsed(p) => p.detuning,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_carries_requested_photons() {
        let p = GaussianPulse { photons: 8.0, bandwidth: 50.0, center: 1.0, detuning: 0.0 };
        let (a, b, n) = (p.center - 12.0 * p.sigma(), p.center + 12.0 * p.sigma(), 20000);
        let h = (b - a) / n as f64;
        let total: f64 = (0..n).map(|i| p.amplitude(a + (i as f64 + 0.5) * h).norm_sqr() * h).sum();
        assert!((total - 8.0).abs() < 1e-9);
    }

    #[test]
    fn intensity_spectrum_fwhm_is_bandwidth() {
        let p = GaussianPulse { photons: 1.0, bandwidth: 30.0, center: 0.0, detuning: 0.0 };
        let s = p.spectral_sigma();
        let fwhm = 2.0 * (2.0 * 2f64.ln()).sqrt() * s;
        assert!((fwhm - 30.0).abs() < 1e-12);
    }
}
