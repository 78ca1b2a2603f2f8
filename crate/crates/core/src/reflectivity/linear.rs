use num_complex::Complex64 as C64;

use crate::qed::DeviceParams;

/// Linear-response reflection amplitude of the mode-matched beam.
///
/// `detuning` is the laser detuning ω − ω_C. With `qd_active = false` the
/// dot is treated as saturated (or absent) and the bare cavity response is
/// returned.
pub fn linear_reflection_amplitude(params: &DeviceParams, detuning: f64, qd_active: bool) -> C64 {
    // η_top κ = κ_top
    C64::new(1.0, 0.0) - params.kappa_top / response_denominator(params, detuning, qd_active)
}

/// `i(ω_C − ω) + κ/2 + g²/(i(ω_QD − ω) + γ)`
fn response_denominator(params: &DeviceParams, detuning: f64, qd_active: bool) -> C64 {
    let laser = params.omega_c + detuning;
    let cavity = C64::new(params.kappa() / 2.0, params.omega_c - laser);
    if !qd_active || params.g == 0.0 {
        return cavity;
    }
    let dot = C64::new(params.gamma(), params.omega_qd - laser);
    cavity + params.g * params.g / dot
}

/// Mean intracavity field ⟨a⟩ in the weak-drive limit for an incident
/// amplitude `drive` (√(photons/ns)).
pub fn linear_cavity_amplitude(params: &DeviceParams, detuning: f64, drive: C64) -> C64 {
    drive * (params.eta_in * params.kappa_top).sqrt() / response_denominator(params, detuning, true)
}

/// Measured reflectivity `(1 − η_in) + η_in |r|²`.
pub fn measured_reflectivity(params: &DeviceParams, r: C64) -> f64 {
    (1.0 - params.eta_in) + params.eta_in * r.norm_sqr()
}

/// Measured linear reflectivity at one detuning.
pub fn linear_reflectivity(params: &DeviceParams, detuning: f64, qd_active: bool) -> f64 {
    measured_reflectivity(params, linear_reflection_amplitude(params, detuning, qd_active))
}
