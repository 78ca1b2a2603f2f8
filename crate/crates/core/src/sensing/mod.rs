//! Real-time charge sensing through the cavity reflectivity.

mod analysis;
mod trace;

pub use analysis::{
    analytic_error, classify, error_vs_flux, histogram, ks_exponential, optimal_threshold, Classification,
    CountHistogram, ErrorPoint, HistogramReport, KsResult, MixtureFit,
};
pub use trace::{render_trace, simulate_trace, simulate_traces, Segment, TelegraphModel, TelegraphTrace};

use crate::qed::DeviceParams;
use crate::reflectivity::linear_reflectivity;

/// Reflectivity levels (loaded, empty) at laser detuning `detuning` from the
/// cavity when a trapped charge shifts the dot by `shift` (rad/ns).
pub fn levels_from_shift(params: &DeviceParams, detuning: f64, shift: f64) -> (f64, f64) {
    let loaded = DeviceParams { omega_qd: params.omega_qd + shift, ..*params };
    (linear_reflectivity(&loaded, detuning, true), linear_reflectivity(params, detuning, true))
}
