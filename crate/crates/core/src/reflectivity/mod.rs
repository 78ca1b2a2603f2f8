//! Input-output layer: reflectivity spectra, power dependence, pulsed
//! thresholds, temperature maps and spin-dependent polarization rotation.
//!
//! Detunings are laser minus cavity, ω − ω_C, in rad/ns. The measured
//! reflectivity adds the non-mode-matched fraction 1 − η_in of the beam,
//! which is reflected unchanged.

mod cw;
mod drive;
mod kerr;
mod linear;
mod pulsed;
mod temperature;
mod threshold;

pub use cw::{cw_point, cw_power_sweep, cw_spectrum, CwPoint, Spectrum};
pub use drive::{DriveSpec, GaussianPulse};
pub use kerr::{from_circular, kerr_orthogonality_search, kerr_rotation, to_circular, Jones, KerrOutput, OrthogonalitySolution};
pub use linear::{linear_cavity_amplitude, linear_reflection_amplitude, linear_reflectivity, measured_reflectivity};
pub use pulsed::{linear_pulse_reflectivity, pulsed_power_curve, pulsed_response, PulsedPoint, LINEAR_PROBE_PHOTONS};
pub use temperature::{minimum_splitting, polariton_branches, temperature_map, BranchPoint, TemperatureMap, TuningCurves};
pub use threshold::{threshold, PowerCurve, MONOTONE_SLACK};
