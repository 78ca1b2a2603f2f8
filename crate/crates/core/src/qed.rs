//! Device parameters and closed-form cavity-QED figures of merit.
//!
//! All rates are angular frequencies in rad/ns and `kappa_*` are intensity
//! damping rates, so the cavity linewidth (FWHM) equals `kappa()`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::uev_to_rad_ns;

/// Physical rates and frequencies of one quantum-dot / pillar device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// QD-cavity coupling strength.
    pub g: f64,
    pub kappa_top: f64,
    pub kappa_bottom: f64,
    pub kappa_loss: f64,
    /// Spontaneous emission rate outside the cavity mode.
    pub gamma_sp: f64,
    /// Pure dephasing rate.
    pub gamma_star: f64,
    /// Cavity mode frequency, as an offset from a reference energy.
    pub omega_c: f64,
    /// QD transition frequency, as an offset from the same reference.
    pub omega_qd: f64,
    /// Spatial mode matching of the incident beam, in [0, 1].
    pub eta_in: f64,
}

impl DeviceParams {
    /// Builds parameters from spectroscopic values given in μeV.
    #[allow(clippy::too_many_arguments)]
    pub fn from_uev(
        g: f64,
        kappa_top: f64,
        kappa_bottom: f64,
        kappa_loss: f64,
        gamma_sp: f64,
        gamma_star: f64,
        omega_c: f64,
        omega_qd: f64,
        eta_in: f64,
    ) -> Self {
        DeviceParams {
            g: uev_to_rad_ns(g),
            kappa_top: uev_to_rad_ns(kappa_top),
            kappa_bottom: uev_to_rad_ns(kappa_bottom),
            kappa_loss: uev_to_rad_ns(kappa_loss),
            gamma_sp: uev_to_rad_ns(gamma_sp),
            gamma_star: uev_to_rad_ns(gamma_star),
            omega_c: uev_to_rad_ns(omega_c),
            omega_qd: uev_to_rad_ns(omega_qd),
            eta_in,
        }
    }

    /// Builds a resonant device from fit-level figures (C, η_top, η_in).
    ///
    /// The total damping is split as κ_top = η_top·κ, κ_bottom = κ_top
    /// (symmetric mirrors, capped so the sum stays ≤ κ) and the remainder
    /// goes to sidewall losses. `gamma_sp` fixes the radiative part of γ and
    /// the pure dephasing absorbs the rest of γ = g²/(κC).
    pub fn from_cooperativity(
        g: f64,
        kappa: f64,
        gamma_sp: f64,
        cooperativity: f64,
        eta_top: f64,
        eta_in: f64,
    ) -> Result<Self> {
        if !(cooperativity > 0.0) || !(kappa > 0.0) {
            return Err(Error::InvalidDevice(
                "cooperativity and kappa must be positive".into(),
            ));
        }
        let gamma = g * g / (kappa * cooperativity);
        let gamma_star = gamma - gamma_sp / 2.0;
        if gamma_star < 0.0 {
            return Err(Error::InvalidDevice(format!(
                "gamma_sp/2 = {} exceeds gamma = {gamma} implied by C",
                gamma_sp / 2.0
            )));
        }
        let kappa_top = eta_top * kappa;
        let kappa_bottom = kappa_top.min(kappa - kappa_top);
        let kappa_loss = (kappa - kappa_top - kappa_bottom).max(0.0);
        let p = DeviceParams {
            g,
            kappa_top,
            kappa_bottom,
            kappa_loss,
            gamma_sp,
            gamma_star,
            omega_c: 0.0,
            omega_qd: 0.0,
            eta_in,
        };
        p.validate()?;
        Ok(p)
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        self.kappa_top + self.kappa_bottom + self.kappa_loss
    }

    /// Total QD coherence decay rate γ = γ_sp/2 + γ*.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma_sp / 2.0 + self.gamma_star
    }

    #[inline]
    pub fn eta_top(&self) -> f64 {
        self.kappa_top / self.kappa()
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("g", self.g),
            ("kappa_top", self.kappa_top),
            ("kappa_bottom", self.kappa_bottom),
            ("kappa_loss", self.kappa_loss),
            ("gamma_sp", self.gamma_sp),
            ("gamma_star", self.gamma_star),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDevice(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !self.omega_c.is_finite() || !self.omega_qd.is_finite() {
            return Err(Error::InvalidDevice("frequencies must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.eta_in) {
            return Err(Error::InvalidDevice(format!("eta_in = {} not in [0, 1]", self.eta_in)));
        }
        if !(self.kappa() > 0.0) {
            return Err(Error::InvalidDevice("total cavity damping kappa must be > 0".into()));
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a digest of the parameter bit patterns, as hex.
    pub fn fingerprint(&self) -> String {
        let fields = [
            self.g,
            self.kappa_top,
            self.kappa_bottom,
            self.kappa_loss,
            self.gamma_sp,
            self.gamma_star,
            self.omega_c,
            self.omega_qd,
            self.eta_in,
        ];
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in fields.iter().flat_map(|v| v.to_bits().to_le_bytes()) {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// Same device with a different QD-cavity coupling.
    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingRegime {
    Strong,
    Weak,
}

/// Scalars derived from [`DeviceParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiguresOfMerit {
    pub cooperativity: f64,
    pub purcell: f64,
    pub beta: f64,
    pub eta_top: f64,
    /// Emission rate into the mode, Γ = 2g²/κ (rad/ns).
    pub gamma_mode: f64,
    /// γ = γ_sp/2 + γ* (rad/ns).
    pub gamma_total: f64,
    /// Lifetime (ns).
    pub t1: f64,
    /// Coherence time (ns).
    pub t2: f64,
    /// T2 / (2 T1).
    pub m_intrinsic: f64,
    pub regime: CouplingRegime,
}

/// Strong coupling requires g above both κ/4 and γ/4.
pub fn coupling_regime(params: &DeviceParams) -> CouplingRegime {
    if params.g > params.kappa() / 4.0 && params.g > params.gamma() / 4.0 {
        CouplingRegime::Strong
    } else {
        CouplingRegime::Weak
    }
}

pub fn figures_of_merit(params: &DeviceParams) -> Result<FiguresOfMerit> {
    params.validate()?;
    if params.gamma_sp == 0.0 {
        return Err(Error::UndefinedPurcell);
    }
    let kappa = params.kappa();
    let gamma = params.gamma();
    let g2 = params.g * params.g;
    let gamma_mode = 2.0 * g2 / kappa;
    let purcell = gamma_mode / params.gamma_sp;
    let total_rate = gamma_mode + params.gamma_sp;
    let t1 = 1.0 / total_rate;
    let t2 = 1.0 / (total_rate / 2.0 + params.gamma_star);
    Ok(FiguresOfMerit {
        cooperativity: g2 / (kappa * gamma),
        purcell,
        beta: beta_from_purcell(purcell),
        eta_top: params.kappa_top / kappa,
        gamma_mode,
        gamma_total: gamma,
        t1,
        t2,
        m_intrinsic: t2 / (2.0 * t1),
        regime: coupling_regime(params),
    })
}

/// Fraction of emission into the mode, F_p / (F_p + 1).
#[inline]
pub fn beta_from_purcell(purcell: f64) -> f64 {
    purcell / (purcell + 1.0)
}

/// Brightness corrected for multi-photon emission, `b·sqrt(1 - g2)`.
pub fn corrected_brightness(brightness: f64, g2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&brightness) {
        return Err(Error::Domain(format!("brightness {brightness} not in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&g2) {
        return Err(Error::Domain(format!("g2(0) = {g2} not in [0, 1]")));
    }
    Ok(brightness * (1.0 - g2).sqrt())
}

/// Sidewall-loss and mode-volume laws of an etched pillar.
///
/// κ_loss(d) = A·exp(−d/d0) on top of the planar damping κ_planar = ω/Q0,
/// and g(d) = g_ref·d_ref/d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Planar-cavity quality factor.
    pub q0: f64,
    /// Planar-cavity damping ω/Q0 (rad/ns).
    pub kappa_planar: f64,
    /// Sidewall loss amplitude A (rad/ns).
    pub loss_amplitude: f64,
    /// Sidewall loss decay length d0 (μm).
    pub loss_length: f64,
    /// Coupling at the reference diameter (rad/ns).
    pub g_ref: f64,
    /// Reference diameter (μm).
    pub d_ref: f64,
    /// Emission rate outside the mode (1/ns).
    pub gamma_sp: f64,
}

impl LossModel {
    /// Emitter energy used for the default planar damping (μeV).
    pub const DEFAULT_PHOTON_ENERGY_UEV: f64 = 1.333e6;
    /// Default planar quality factor.
    pub const DEFAULT_Q0: f64 = 3000.0;
    /// Loss amplitude in units of κ_planar (calibrated).
    pub const DEFAULT_LOSS_RATIO: f64 = 160.0;
    /// Loss decay length in μm (calibrated).
    pub const DEFAULT_LOSS_LENGTH: f64 = 0.25;
    /// Purcell factor at the reference diameter.
    pub const DEFAULT_PURCELL_REF: f64 = 3.5;
    pub const DEFAULT_D_REF: f64 = 2.5;

    /// Builds a model whose coupling law gives `purcell_ref` at `d_ref`.
    pub fn with_reference_purcell(
        q0: f64,
        kappa_planar: f64,
        loss_amplitude: f64,
        loss_length: f64,
        d_ref: f64,
        purcell_ref: f64,
        gamma_sp: f64,
    ) -> Result<Self> {
        let mut model = LossModel {
            q0,
            kappa_planar,
            loss_amplitude,
            loss_length,
            g_ref: 0.0,
            d_ref,
            gamma_sp,
        };
        model.validate()?;
        let kappa_ref = model.kappa(d_ref);
        model.g_ref = (purcell_ref * kappa_ref * gamma_sp / 2.0).sqrt();
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q0 > 0.0) {
            return Err(Error::Domain(format!("Q0 = {} must be > 0", self.q0)));
        }
        if !(self.kappa_planar > 0.0) {
            return Err(Error::Domain("kappa_planar must be > 0".into()));
        }
        if !(self.loss_amplitude >= 0.0) {
            return Err(Error::Domain("loss amplitude must be >= 0".into()));
        }
        if !(self.loss_length > 0.0) {
            return Err(Error::Domain("loss length must be > 0".into()));
        }
        if !(self.d_ref > 0.0) || !(self.gamma_sp > 0.0) || !(self.g_ref >= 0.0) {
            return Err(Error::Domain("d_ref, gamma_sp must be > 0 and g_ref >= 0".into()));
        }
        Ok(())
    }

    pub fn kappa_loss(&self, d: f64) -> f64 {
        self.loss_amplitude * (-d / self.loss_length).exp()
    }

    pub fn kappa(&self, d: f64) -> f64 {
        self.kappa_planar + self.kappa_loss(d)
    }

    pub fn quality_factor(&self, d: f64) -> f64 {
        self.q0 * self.kappa_planar / self.kappa(d)
    }

    pub fn g(&self, d: f64) -> f64 {
        self.g_ref * self.d_ref / d
    }

    pub fn purcell(&self, d: f64) -> f64 {
        let g = self.g(d);
        2.0 * g * g / (self.kappa(d) * self.gamma_sp)
    }
}

impl Default for LossModel {
    fn default() -> Self {
        let kappa_planar = uev_to_rad_ns(Self::DEFAULT_PHOTON_ENERGY_UEV / Self::DEFAULT_Q0);
        LossModel::with_reference_purcell(
            Self::DEFAULT_Q0,
            kappa_planar,
            Self::DEFAULT_LOSS_RATIO * kappa_planar,
            Self::DEFAULT_LOSS_LENGTH,
            Self::DEFAULT_D_REF,
            Self::DEFAULT_PURCELL_REF,
            1.0,
        )
        .expect("default loss model is valid")
    }
}

/// One row of an extraction sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRow {
    pub d: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub eta_top: f64,
    pub beta: f64,
    pub eta_top_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSweep {
    pub rows: Vec<ExtractionRow>,
    /// Index of the row maximising η_top·β.
    pub best: usize,
}

impl ExtractionSweep {
    pub fn optimum(&self) -> &ExtractionRow {
        &self.rows[self.best]
    }
}

/// Extraction efficiency η_top·β across pillar diameters (μm).
///
/// Uses the asymmetric-mirror limit where η_top = Q/Q0 is limited by
/// sidewall losses only.
pub fn extraction_sweep(loss: &LossModel, diameters: &[f64]) -> Result<ExtractionSweep> {
    loss.validate()?;
    if diameters.is_empty() {
        return Err(Error::EmptyGrid("diameter grid"));
    }
    if diameters.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Domain("diameters must be positive".into()));
    }
    if diameters.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("diameters must be strictly ascending".into()));
    }
    let rows: Vec<ExtractionRow> = diameters
        .iter()
        .map(|&d| {
            let q = loss.quality_factor(d);
            let eta_top = q / loss.q0;
            let beta = beta_from_purcell(loss.purcell(d));
            ExtractionRow { d, q, eta_top, beta, eta_top_beta: eta_top * beta }
        })
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.eta_top_beta > rows[best].eta_top_beta { i } else { best });
    Ok(ExtractionSweep { rows, best })
}
