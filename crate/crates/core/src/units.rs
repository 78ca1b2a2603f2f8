//! Unit conventions.
//!
//! Rates and frequencies are stored internally as angular frequencies in
//! rad/ns. Spectroscopic inputs in μeV are converted with a single fixed
//! factor so that round trips are exact to floating-point precision.

/// ħ in μeV·ns.
pub const HBAR_UEV_NS: f64 = 0.65821;

/// 1 μeV expressed in rad/ns.
pub const UEV_TO_RAD_PER_NS: f64 = 1.5193;

#[inline]
pub fn uev_to_rad_ns(uev: f64) -> f64 {
    uev * UEV_TO_RAD_PER_NS
}

#[inline]
pub fn rad_ns_to_uev(rate: f64) -> f64 {
    rate / UEV_TO_RAD_PER_NS
}

/// Converts a lifetime in ns to a decay rate in 1/ns.
#[inline]
pub fn lifetime_to_rate(tau_ns: f64) -> f64 {
    1.0 / tau_ns
}
