//! One function per subcommand: read the config, call the library, collect
//! scalars and tables.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::Value;

use qdsim::gate::{self, Basis, OpticalCircuit, TwoPhotonInput};
use qdsim::hilbert::HilbertConfig;
use qdsim::qed::{extraction_sweep, figures_of_merit, DeviceParams, LossModel};
use qdsim::reflectivity::{
    cw_power_sweep, cw_spectrum, kerr_orthogonality_search, kerr_rotation, linear_pulse_reflectivity,
    minimum_splitting, polariton_branches, pulsed_response, temperature_map, threshold, GaussianPulse, Jones,
    PowerCurve, TuningCurves,
};
use qdsim::sensing::{self, TelegraphModel};
use qdsim::source::{self, CaptureModel, DephasingModel, Scheme, TradeoffConfig};
use qdsim::units::{rad_ns_to_uev, uev_to_rad_ns};

use crate::config::{Dim, RawConfig};
use crate::error::CliError;
use crate::output::{flag, num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Figures,
    SweepDesign,
    Spectrum,
    PowerSweep,
    PulseThreshold,
    TempMap,
    Kerr,
    G2,
    Hom,
    Tradeoff,
    GateTruthTable,
    GateFidelity,
    GateSweep,
    SenseTrace,
    SenseHistogram,
    SenseErrorCurve,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Figures => "figures",
            Op::SweepDesign => "sweep-design",
            Op::Spectrum => "spectrum",
            Op::PowerSweep => "power-sweep",
            Op::PulseThreshold => "pulse-threshold",
            Op::TempMap => "temp-map",
            Op::Kerr => "kerr",
            Op::G2 => "g2",
            Op::Hom => "hom",
            Op::Tradeoff => "tradeoff",
            Op::GateTruthTable => "gate-truth-table",
            Op::GateFidelity => "gate-fidelity",
            Op::GateSweep => "gate-sweep",
            Op::SenseTrace => "sense-trace",
            Op::SenseHistogram => "sense-histogram",
            Op::SenseErrorCurve => "sense-error-curve",
        }
    }

    pub fn stochastic(self) -> bool {
        matches!(
            self,
            Op::G2 | Op::Hom | Op::Tradeoff | Op::SenseTrace | Op::SenseHistogram | Op::SenseErrorCurve
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    /// Flat numbers and labels; these become sweep columns.
    pub scalars: BTreeMap<String, Value>,
    /// Structured context written to the command JSON only.
    pub details: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
}

impl Report {
    fn scalar(&mut self, key: &str, v: impl Into<Value>) {
        self.scalars.insert(key.to_string(), v.into());
    }

    fn detail(&mut self, key: &str, v: impl serde::Serialize) {
        self.details.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

pub fn execute(op: Op, cfg: &RawConfig) -> Result<Report, CliError> {
    match op {
        Op::Figures => figures(cfg),
        Op::SweepDesign => sweep_design(cfg),
        Op::Spectrum => spectrum(cfg),
        Op::PowerSweep => power_sweep(cfg),
        Op::PulseThreshold => pulse_threshold(cfg),
        Op::TempMap => temp_map(cfg),
        Op::Kerr => kerr(cfg),
        Op::G2 => g2(cfg),
        Op::Hom => hom(cfg),
        Op::Tradeoff => tradeoff(cfg),
        Op::GateTruthTable => gate_truth_table(cfg),
        Op::GateFidelity => gate_fidelity(cfg),
        Op::GateSweep => gate_sweep(cfg),
        Op::SenseTrace => sense_trace(cfg),
        Op::SenseHistogram => sense_histogram(cfg),
        Op::SenseErrorCurve => sense_error_curve(cfg),
    }
}

pub fn seed(cfg: &RawConfig) -> Result<u64, CliError> {
    cfg.integer("run.seed")?
        .ok_or_else(|| CliError::Config("a seed (run.seed or --seed) is required for stochastic commands".into()))
}

/// Device from `[device]`: either fit-level (cooperativity, kappa, eta_top)
/// or explicit mirror and loss rates.
pub fn device(cfg: &RawConfig) -> Result<DeviceParams, CliError> {
    let g = cfg.require("device.g", Dim::Energy)?;
    let gamma_sp = cfg.require("device.gamma_sp", Dim::Energy)?;
    let eta_in = cfg.scalar_or("device.eta_in", Dim::Plain, 1.0)?;
    let mut p = if let Some(c) = cfg.scalar("device.cooperativity", Dim::Plain)? {
        for key in ["device.kappa_top", "device.kappa_bottom", "device.kappa_loss", "device.gamma_star"] {
            if cfg.contains(key) {
                return Err(CliError::Config(format!("`{key}` conflicts with device.cooperativity")));
            }
        }
        let kappa = cfg.require("device.kappa", Dim::Energy)?;
        let eta_top = cfg.require("device.eta_top", Dim::Plain)?;
        DeviceParams::from_cooperativity(g, kappa, gamma_sp, c, eta_top, eta_in)?
    } else {
        for key in ["device.kappa", "device.eta_top"] {
            if cfg.contains(key) {
                return Err(CliError::Config(format!("`{key}` needs device.cooperativity")));
            }
        }
        DeviceParams {
            g,
            kappa_top: cfg.require("device.kappa_top", Dim::Energy)?,
            kappa_bottom: cfg.require("device.kappa_bottom", Dim::Energy)?,
            kappa_loss: cfg.scalar_or("device.kappa_loss", Dim::Energy, 0.0)?,
            gamma_sp,
            gamma_star: cfg.scalar_or("device.gamma_star", Dim::Energy, 0.0)?,
            omega_c: 0.0,
            omega_qd: 0.0,
            eta_in,
        }
    };
    p.omega_c = cfg.scalar_or("device.omega_c", Dim::Energy, 0.0)?;
    p.omega_qd = cfg.scalar_or("device.omega_qd", Dim::Energy, 0.0)?;
    p.validate()?;
    Ok(p)
}

pub fn solver(cfg: &RawConfig) -> Result<HilbertConfig, CliError> {
    let d = HilbertConfig::default();
    let s = HilbertConfig {
        n_max: cfg.integer("solver.n_max")?.map_or(d.n_max, |v| v as usize),
        steady_tol: cfg.scalar_or("solver.steady_tol", Dim::Plain, d.steady_tol)?,
        ode_rtol: cfg.scalar_or("solver.ode_rtol", Dim::Plain, d.ode_rtol)?,
        ode_atol: cfg.scalar_or("solver.ode_atol", Dim::Plain, d.ode_atol)?,
        truncation_tol: cfg.scalar_or("solver.truncation_tol", Dim::Plain, d.truncation_tol)?,
        n_max_cap: cfg.integer("solver.n_max_cap")?.map_or(d.n_max_cap, |v| v as usize),
    };
    s.validate()?;
    Ok(s)
}

fn device_details(r: &mut Report, p: &DeviceParams) {
    r.detail("device", p);
    r.detail("device_fingerprint", p.fingerprint());
}

fn figures(cfg: &RawConfig) -> Result<Report, CliError> {
    let p = device(cfg)?;
    let f = figures_of_merit(&p)?;
    let mut r = Report::default();
    r.scalar("cooperativity", f.cooperativity);
    r.scalar("purcell", f.purcell);
    r.scalar("beta", f.beta);
    r.scalar("eta_top", f.eta_top);
    r.scalar("gamma_mode", f.gamma_mode);
    r.scalar("gamma_total", f.gamma_total);
    r.scalar("t1_ns", f.t1);
    r.scalar("t2_ns", f.t2);
    r.scalar("m_intrinsic", f.m_intrinsic);
    r.scalar("regime", serde_json::to_value(f.regime).unwrap_or(Value::Null));
    device_details(&mut r, &p);
    Ok(r)
}

fn sweep_design(cfg: &RawConfig) -> Result<Report, CliError> {
    let q0 = cfg.scalar_or("design.q0", Dim::Plain, LossModel::DEFAULT_Q0)?;
    if !(q0 > 0.0) {
        return Err(qdsim::Error::Domain(format!("Q0 = {q0} must be > 0")).into());
    }
    let kappa_planar = uev_to_rad_ns(LossModel::DEFAULT_PHOTON_ENERGY_UEV / q0);
    let ratio = cfg.scalar_or("design.loss_ratio", Dim::Plain, LossModel::DEFAULT_LOSS_RATIO)?;
    let model = LossModel::with_reference_purcell(
        q0,
        kappa_planar,
        ratio * kappa_planar,
        cfg.scalar_or("design.loss_length", Dim::Length, LossModel::DEFAULT_LOSS_LENGTH)?,
        cfg.scalar_or("design.d_ref", Dim::Length, LossModel::DEFAULT_D_REF)?,
        cfg.scalar_or("design.purcell_ref", Dim::Plain, LossModel::DEFAULT_PURCELL_REF)?,
        1.0,
    )?;
    let diameters = match cfg.grid("design.diameters", Dim::Length)? {
        Some(d) => d,
        None => (0..=300).map(|i| 1.0 + 0.01 * i as f64).collect(),
    };
    let sweep = extraction_sweep(&model, &diameters)?;
    let mut t = Table::new("sweep-design.csv", &["diameter_um", "Q", "eta_top", "beta", "eta_top_beta"]);
    for row in &sweep.rows {
        t.push(vec![num(row.d), num(row.q), num(row.eta_top), num(row.beta), num(row.eta_top_beta)]);
    }
    let best = sweep.optimum();
    let mut r = Report::default();
    r.scalar("best_diameter_um", best.d);
    r.scalar("best_Q", best.q);
    r.scalar("best_eta_top", best.eta_top);
    r.scalar("best_beta", best.beta);
    r.scalar("best_eta_top_beta", best.eta_top_beta);
    r.detail("loss_model", model);
    r.tables.push(t);
    Ok(r)
}

fn spectrum(cfg: &RawConfig) -> Result<Report, CliError> {
    let p = device(cfg)?;
    let s = solver(cfg)?;
    let flux = cfg.scalar_or("spectrum.flux", Dim::PerNs, 1e-6)?;
    let detunings = cfg.require_grid("spectrum.detuning", Dim::Energy)?;
    let spec = cw_spectrum(&p, flux, &detunings, &s)?;
    let mut t = Table::new(
        "spectrum.csv",
        &[
            "detuning_ueV",
            "reflectivity",
            "reflectivity_coherent",
            "amplitude_re",
            "amplitude_im",
            "excited_population",
            "photon_number",
            "n_max",
        ],
    );
    for q in &spec.points {
        t.push(vec![
            num(rad_ns_to_uev(q.detuning)),
            num(q.reflectivity),
            num(q.reflectivity_coherent),
            num(q.amplitude.re),
            num(q.amplitude.im),
            num(q.excited_population),
            num(q.photon_number),
            q.n_max.to_string(),
        ]);
    }
    let min = spec.points.iter().min_by(|a, b| a.reflectivity.total_cmp(&b.reflectivity)).expect("non-empty grid");
    let mut r = Report::default();
    r.scalar("flux", flux);
    r.scalar("n_max", spec.n_max);
    r.scalar("min_reflectivity", min.reflectivity);
    r.scalar("min_detuning_ueV", rad_ns_to_uev(min.detuning));
    device_details(&mut r, &p);
    r.detail("solver", s);
    r.tables.push(t);
    Ok(r)
}

fn power_sweep(cfg: &RawConfig) -> Result<Report, CliError> {
    let p = device(cfg)?;
    let s = solver(cfg)?;
    let detuning = cfg.scalar_or("power.detuning", Dim::Energy, 0.0)?;
    let fluxes = cfg.require_grid("power.flux", Dim::PerNs)?;
    let points = cw_power_sweep(&p, detuning, &fluxes, &s)?;
    let mut t = Table::new(
        "power-sweep.csv",
        &["flux", "reflectivity", "reflectivity_coherent", "excited_population", "photon_number", "n_max"],
    );
    for q in &points {
        t.push(vec![
            num(q.flux),
            num(q.reflectivity),
            num(q.reflectivity_coherent),
            num(q.excited_population),
            num(q.photon_number),
            q.n_max.to_string(),
        ]);
    }
    let curve = PowerCurve {
        x: points.iter().map(|q| q.flux).collect(),
        reflectivity: points.iter().map(|q| q.reflectivity).collect(),
        low_limit: None,
        high_limit: None,
    };
    let mut r = Report::default();
    r.scalar("detuning_ueV", rad_ns_to_uev(detuning));
    match threshold(&curve) {
        Ok(x) => r.scalar("threshold_flux", x),
        Err(e) => {
            r.scalar("threshold_flux", Value::Null);
            r.detail("threshold_error", e.to_string());
        }
    }
    r.scalar("n_max", points.iter().map(|q| q.n_max).max().unwrap_or(0));
    device_details(&mut r, &p);
    r.detail("solver", s);
    r.tables.push(t);
    Ok(r)
}

const DEFAULT_PHOTON_GRID: (f64, f64, usize) = (0.1, 1000.0, 25);

fn pulse_threshold(cfg: &RawConfig) -> Result<Report, CliError> {
    let p = device(cfg)?;
    let s = solver(cfg)?;
    let detuning = cfg.scalar_or("pulse.detuning", Dim::Energy, 0.0)?;
    let photons = match cfg.grid("pulse.photons", Dim::Plain)? {
        Some(n) => n,
        None => {
            let (a, b, n) = DEFAULT_PHOTON_GRID;
            (0..n).map(|i| (a.ln() + (b / a).ln() * i as f64 / (n - 1) as f64).exp()).collect()
        }
    };
    let points = photons
        .par_iter()
        .map(|&n| pulsed_response(&p, &GaussianPulse::matched(&p, n, detuning), &s))
        .collect::<Result<Vec<_>, _>>()?;
    let probe_pulse = GaussianPulse::matched(&p, qdsim::reflectivity::LINEAR_PROBE_PHOTONS, detuning);
    let probe = pulsed_response(&p, &probe_pulse, &s)?;
    let high = linear_pulse_reflectivity(&p, &probe_pulse, false);

    let curve = |coherent: bool, low: f64| PowerCurve {
        x: points.iter().map(|q| q.photons).collect(),
        reflectivity: points.iter().map(|q| if coherent { q.reflectivity_coherent } else { q.reflectivity }).collect(),
        low_limit: Some(low),
        high_limit: Some(high),
    };
    let n_th = threshold(&curve(false, probe.reflectivity))?;

    let mut t = Table::new(
        "pulse-threshold.csv",
        &["photons", "reflectivity", "reflectivity_coherent", "peak_excitation", "n_max"],
    );
    for q in &points {
        t.push(vec![
            num(q.photons),
            num(q.reflectivity),
            num(q.reflectivity_coherent),
            num(q.peak_excitation),
            q.n_max.to_string(),
        ]);
    }
    let mut r = Report::default();
    r.scalar("n_th", n_th);
    r.scalar("n_th_coherent", threshold(&curve(true, probe.reflectivity_coherent)).ok());
    r.scalar("low_limit", probe.reflectivity);
    r.scalar("high_limit", high);
    r.scalar("eta_top", p.eta_top());
    r.scalar("n_max", points.iter().map(|q| q.n_max).max().unwrap_or(0));
    device_details(&mut r, &p);
    r.detail("solver", s);
    r.tables.push(t);
    Ok(r)
}

fn temp_map(cfg: &RawConfig) -> Result<Report, CliError> {
    let p = device(cfg)?;
    let temps = cfg.require_grid("temperature.temperatures", Dim::Kelvin)?;
    let freqs = cfg.require_grid("temperature.frequencies", Dim::Energy)?;
    let tuning = TuningCurves {
        d_omega_qd_dt: cfg.require("temperature.d_qd_dt", Dim::EnergyPerK)?,
        d_omega_c_dt: cfg.require("temperature.d_c_dt", Dim::EnergyPerK)?,
        t_ref: cfg.scalar_or("temperature.t_ref", Dim::Kelvin, temps[0])?,
    };
    let map = temperature_map(&p, &tuning, &temps, &freqs)?;
    let mut t = Table::new("temp-map.csv", &["temperature_K", "frequency_ueV", "reflectivity"]);
    for (i, &temp) in map.temperatures.iter().enumerate() {
        for (j, &w) in map.frequencies.iter().enumerate() {
            t.push(vec![num(temp), num(rad_ns_to_uev(w)), num(map.row(i)[j])]);
        }
    }
    let mut b = Table::new("branches.csv", &["temperature_K", "lower_ueV", "upper_ueV", "splitting_ueV"]);
    for bp in polariton_branches(&map) {
        b.push(vec![
            num(bp.temperature),
            num(rad_ns_to_uev(bp.lower)),
            num(rad_ns_to_uev(bp.upper)),
            num(rad_ns_to_uev(bp.splitting())),
        ]);
    }
    let mut r = Report::default();
    let min = minimum_splitting(&map);
    r.scalar("min_splitting_ueV", min.map(|m| rad_ns_to_uev(m.splitting())));
    r.scalar("min_splitting_temperature_K", min.map(|m| m.temperature));
    r.scalar("branch_rows", b.rows.len());
    device_details(&mut r, &p);
    r.detail("tuning", tuning);
    r.tables.push(t);
    r.tables.push(b);
    Ok(r)
}

fn polarization(name: &str) -> Result<Jones, CliError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    Ok(match name {
        "H" => [c(1.0, 0.0), c(0.0, 0.0)],
        "V" => [c(0.0, 0.0), c(1.0, 0.0)],
        "D" => [c(s, 0.0), c(s, 0.0)],
        "A" => [c(s, 0.0), c(-s, 0.0)],
        "R" => [c(s, 0.0), c(0.0, -s)],
        "L" => [c(s, 0.0), c(0.0, s)],
        other => return Err(CliError::Config(format!("kerr.input: unknown polarization `{other}` (H, V, D, A, R, L)"))),
    })
}

fn kerr(cfg: &RawConfig) -> Result<Report, CliError> {
    let p = device(cfg)?;
    let detuning = cfg.scalar_or("kerr.detuning", Dim::Energy, 0.0)?;
    let input = polarization(cfg.string("kerr.input").unwrap_or("H"))?;
    let k = kerr_rotation(&p, &p, detuning, input)?;
    let mut r = Report::default();
    r.scalar("overlap_abs", k.overlap.norm());
    r.scalar("overlap_re", k.overlap.re);
    r.scalar("overlap_im", k.overlap.im);
    r.scalar("power_up", k.power_up);
    r.scalar("power_down", k.power_down);
    r.detail("output_up", k.up);
    r.detail("output_down", k.down);
    if cfg.contains("kerr.cooperativity") {
        let cs = cfg.require_grid("kerr.cooperativity", Dim::Plain)?;
        let etas = cfg.require_grid("kerr.eta_top", Dim::Plain)?;
        let ds = cfg.require_grid("kerr.search_detuning", Dim::Energy)?;
        let best = kerr_orthogonality_search(p.g, p.kappa(), p.gamma_sp, &cs, &etas, &ds)?;
        r.scalar("search_cooperativity", best.cooperativity);
        r.scalar("search_eta_top", best.eta_top);
        r.scalar("search_detuning_ueV", rad_ns_to_uev(best.detuning));
        r.scalar("search_overlap", best.overlap);
    }
    device_details(&mut r, &p);
    Ok(r)
}

fn capture_model(cfg: &RawConfig) -> Result<CaptureModel, CliError> {
    Ok(CaptureModel {
        n_qw_mean: cfg.scalar_or("capture.n_qw", Dim::Plain, 0.05)?,
        r_qw: cfg.scalar_or("capture.r_qw", Dim::PerNs, 1.0)?,
        r_cap: cfg.scalar_or("capture.r_cap", Dim::PerNs, 2.0)?,
        r_x: cfg.scalar_or("capture.r_x", Dim::PerNs, 4.0)?,
        r_xx: cfg.scalar_or("capture.r_xx", Dim::PerNs, 5.0)?,
        period: cfg.scalar_or("capture.period", Dim::TimeNs, 12.2)?,
        direct_injection: cfg.scalar_or("capture.direct_injection", Dim::Plain, 0.9)?,
        seed: seed(cfg)?,
    })
}

fn g2(cfg: &RawConfig) -> Result<Report, CliError> {
    let model = capture_model(cfg)?;
    let pulses = cfg.integer("capture.pulses")?.unwrap_or(100_000) as usize;
    let g = source::simulate_g2(&model, pulses)?;
    let mut t = Table::new("g2.csv", &["separation", "delay_ns", "area"]);
    for &(k, area) in &g.histogram {
        t.push(vec![k.to_string(), num(k as f64 * model.period), num(area)]);
    }
    let mut r = Report::default();
    r.scalar("g2_zero", g.g2_zero);
    r.scalar("sigma", g.sigma);
    r.scalar("mean_photons", g.mean_photons);
    r.scalar("side_peak", g.side_peak);
    r.scalar("n_pulses", g.n_pulses);
    r.scalar("xx_photons", g.xx_photons);
    r.detail("capture", model);
    r.tables.push(t);
    Ok(r)
}

fn hom(cfg: &RawConfig) -> Result<Report, CliError> {
    let model = DephasingModel {
        gamma_star: cfg.scalar_or("dephasing.gamma_star", Dim::PerNs, 0.0)?,
        sd_rate: cfg.scalar_or("dephasing.sd_rate", Dim::PerNs, 0.0)?,
        sd_sigma: cfg.scalar_or("dephasing.sd_sigma", Dim::PerNs, 0.0)?,
        jitter_rate: cfg.scalar("dephasing.jitter_rate", Dim::PerNs)?,
        seed: seed(cfg)?,
    };
    let t1 = cfg.require("dephasing.t1", Dim::TimeNs)?;
    let delay = cfg.scalar_or("dephasing.delay", Dim::TimeNs, 12.2)?;
    let pairs = cfg.integer("dephasing.pairs")?.unwrap_or(100_000) as usize;
    let mut bins = vec![None];
    if let Some(b) = cfg.grid("dephasing.time_bins", Dim::TimeNs)? {
        bins.extend(b.into_iter().map(Some));
    }
    let results = source::hom_time_bins(&model, t1, delay, &bins, pairs)?;
    let mut t = Table::new("hom.csv", &["time_bin_ns", "m", "sigma", "acceptance"]);
    for h in &results {
        t.push(vec![h.time_bin.map(num).unwrap_or_default(), num(h.m), num(h.sigma), num(h.acceptance)]);
    }
    let rate = 1.0 / t1;
    let mut r = Report::default();
    r.scalar("m", results[0].m);
    r.scalar("sigma", results[0].sigma);
    r.scalar("m_dephasing_limit", rate / (rate + 2.0 * model.gamma_star));
    r.scalar("n_pairs", pairs);
    r.detail("dephasing", model);
    r.tables.push(t);
    Ok(r)
}

fn tradeoff(cfg: &RawConfig) -> Result<Report, CliError> {
    let d = TradeoffConfig::default();
    let tc = TradeoffConfig {
        beta: cfg.scalar_or("tradeoff.beta", Dim::Plain, d.beta)?,
        eta_top: cfg.scalar_or("tradeoff.eta_top", Dim::Plain, d.eta_top)?,
        p_state: cfg.scalar_or("tradeoff.p_state", Dim::Plain, d.p_state)?,
        t1: cfg.scalar_or("tradeoff.t1", Dim::TimeNs, d.t1)?,
        gamma_star: cfg.scalar_or("tradeoff.gamma_star", Dim::PerNs, d.gamma_star)?,
        sd_rate: cfg.scalar_or("tradeoff.sd_rate", Dim::PerNs, d.sd_rate)?,
        delay: cfg.scalar_or("tradeoff.delay", Dim::TimeNs, d.delay)?,
        pump: cfg.grid("tradeoff.pump", Dim::Plain)?.unwrap_or(d.pump),
        barrier_sd: cfg.scalar_or("tradeoff.barrier_sd", Dim::PerNs, d.barrier_sd)?,
        sd_exponent: cfg.scalar_or("tradeoff.sd_exponent", Dim::Plain, d.sd_exponent)?,
        two_color_sd: cfg.scalar("tradeoff.two_color_sd", Dim::PerNs)?,
        calibration: (
            cfg.scalar_or("tradeoff.calibration_brightness", Dim::Plain, d.calibration.0)?,
            cfg.scalar_or("tradeoff.calibration_overlap", Dim::Plain, d.calibration.1)?,
        ),
        n_pairs: cfg.integer("tradeoff.pairs")?.map_or(d.n_pairs, |v| v as usize),
        seed: seed(cfg)?,
    };
    let table = source::brightness_indistinguishability_tradeoff(&tc)?;
    let mut t = Table::new("tradeoff.csv", &["scheme", "pump", "p_pump", "sd_sigma", "brightness", "m", "m_sigma"]);
    for row in &table.rows {
        let scheme = match row.scheme {
            Scheme::Barrier => "barrier",
            Scheme::TwoColor => "two-color",
        };
        t.push(vec![
            scheme.to_string(),
            num(row.pump),
            num(row.p_pump),
            num(row.sd_sigma),
            num(row.brightness),
            num(row.m),
            num(row.m_sigma),
        ]);
    }
    let mut r = Report::default();
    r.scalar("two_color_sd", table.two_color_sd);
    r.scalar("calibration_pump", table.calibration_pump);
    r.detail("tradeoff", &tc);
    r.tables.push(t);
    Ok(r)
}

fn overlap_m(cfg: &RawConfig) -> Result<f64, CliError> {
    cfg.require("gate.m", Dim::Plain)
}

fn gate_truth_table(cfg: &RawConfig) -> Result<Report, CliError> {
    let m = overlap_m(cfg)?;
    let tt = gate::truth_table(m)?;
    let labels = ["HH", "HV", "VH", "VV"];
    let mut t = Table::new("truth-table.csv", &["input", "HH", "HV", "VH", "VV", "success_probability"]);
    for (i, row) in tt.table.iter().enumerate() {
        let mut cells = vec![labels[i].to_string()];
        cells.extend(row.iter().map(|&v| num(v)));
        cells.push(num(tt.success_probability[i]));
        t.push(cells);
    }
    let mut r = Report::default();
    r.scalar("m", m);
    r.scalar("average_correct", tt.average_correct);
    r.scalar("success_probability", tt.success_probability.iter().sum::<f64>() / 4.0);
    r.tables.push(t);
    Ok(r)
}

fn gate_fidelity(cfg: &RawConfig) -> Result<Report, CliError> {
    let m = overlap_m(cfg)?;
    let out = gate::run_gate(&OpticalCircuit::cnot(), &TwoPhotonInput::new(gate::diagonal(), gate::horizontal(), m))?;
    let e = |b| gate::correlation_e(&out.rho, b);
    let (hv, da, rl) = (e(Basis::HV)?, e(Basis::DA)?, e(Basis::RL)?);
    let mut r = Report::default();
    r.scalar("m", m);
    r.scalar("fidelity", gate::bell_fidelity(hv, da, rl)?);
    r.scalar("fidelity_closed_form", gate::fidelity_vs_overlap(m)?);
    r.scalar("e_hv", hv);
    r.scalar("e_da", da);
    r.scalar("e_rl", rl);
    r.scalar("success_probability", out.success_probability);
    r.detail("rho", out.rho);
    Ok(r)
}

fn gate_sweep(cfg: &RawConfig) -> Result<Report, CliError> {
    let ms = match cfg.grid("gate.overlaps", Dim::Plain)? {
        Some(v) => v,
        None => (0..=20).map(|i| i as f64 / 20.0).collect(),
    };
    let mut t = Table::new("gate-sweep.csv", &["m", "fidelity", "fidelity_closed_form", "average_correct"]);
    let mut worst: f64 = 0.0;
    for &m in &ms {
        let f = gate::simulated_bell_fidelity(m)?;
        let c = gate::fidelity_vs_overlap(m)?;
        worst = worst.max((f - c).abs());
        t.push(vec![num(m), num(f), num(c), num(gate::truth_table(m)?.average_correct)]);
    }
    let mut r = Report::default();
    r.scalar("points", ms.len());
    r.scalar("max_closed_form_deviation", worst);
    r.tables.push(t);
    Ok(r)
}

fn telegraph(cfg: &RawConfig) -> Result<(TelegraphModel, f64), CliError> {
    let d = TelegraphModel::default();
    let m = TelegraphModel {
        k_cap: cfg.scalar_or("telegraph.k_cap", Dim::PerUs, d.k_cap)?,
        k_rel: cfg.scalar_or("telegraph.k_rel", Dim::PerUs, d.k_rel)?,
        r_loaded: cfg.scalar_or("telegraph.r_loaded", Dim::Plain, d.r_loaded)?,
        r_empty: cfg.scalar_or("telegraph.r_empty", Dim::Plain, d.r_empty)?,
        flux: cfg.scalar_or("telegraph.flux", Dim::PerUs, d.flux)?,
        eta_det: cfg.scalar_or("telegraph.eta_det", Dim::Plain, d.eta_det)?,
        dt: cfg.scalar_or("telegraph.dt", Dim::TimeUs, d.dt)?,
        read_noise: cfg.scalar_or("telegraph.read_noise", Dim::Plain, d.read_noise)?,
        seed: seed(cfg)?,
    };
    let duration = cfg.scalar_or("telegraph.duration", Dim::TimeUs, 100_000.0)?;
    Ok((m, duration))
}

fn sense_trace(cfg: &RawConfig) -> Result<Report, CliError> {
    let (model, duration) = telegraph(cfg)?;
    let trace = sensing::simulate_trace(&model, duration)?;
    let thr = match cfg.scalar("telegraph.threshold", Dim::Plain)? {
        Some(t) => t,
        None => sensing::optimal_threshold(model.lambda_loaded(), model.lambda_empty(), model.loaded_occupancy()),
    };
    let c = sensing::classify(&trace, thr)?;
    let mut t = Table::new("trace.csv", &["t_us", "counts", "truth", "classified"]);
    for k in 0..trace.len() {
        t.push(vec![num(trace.times[k]), trace.counts[k].to_string(), flag(trace.truth[k]), flag(c.states[k])]);
    }
    let mut r = Report::default();
    r.scalar("threshold", thr);
    r.scalar("lambda_loaded", model.lambda_loaded());
    r.scalar("lambda_empty", model.lambda_empty());
    r.scalar("error_probability", c.error_probability);
    r.scalar("error_sigma", c.error_sigma);
    r.scalar("pure_error", c.pure_error);
    r.scalar("analytic_error", c.analytic_error);
    r.scalar("pure_sigma", c.pure_sigma);
    r.scalar("switching_bound", c.switching_bound);
    for (label, loaded, rate) in [("loaded", true, model.k_rel), ("empty", false, model.k_cap)] {
        let d = trace.dwell_times(loaded);
        let mean = (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64);
        r.scalar(&format!("dwell_{label}_n"), d.len());
        r.scalar(&format!("dwell_{label}_mean_us"), mean);
        r.scalar(&format!("dwell_{label}_ks_p"), sensing::ks_exponential(&d, rate).ok().map(|k| k.p_value));
    }
    r.detail("telegraph", model);
    r.detail("duration_us", duration);
    r.tables.push(t);
    Ok(r)
}

fn sense_histogram(cfg: &RawConfig) -> Result<Report, CliError> {
    let (model, duration) = telegraph(cfg)?;
    let trace = sensing::simulate_trace(&model, duration)?;
    let report = sensing::histogram(&trace, cfg.integer("telegraph.bin_width")?)?;
    let h = &report.histogram;
    let mut t = Table::new("histogram.csv", &["lower", "center", "frequency"]);
    for ((&lo, c), &f) in h.lower.iter().zip(h.centers()).zip(&h.frequency) {
        t.push(vec![lo.to_string(), num(c), f.to_string()]);
    }
    let f = &report.fit;
    let mut r = Report::default();
    r.scalar("bin_width", h.bin_width);
    r.scalar("mean_low", f.means[0]);
    r.scalar("mean_high", f.means[1]);
    r.scalar("loaded_weight", f.loaded_weight);
    r.scalar("empty_weight", f.empty_weight);
    r.scalar("weight_sigma", f.weight_sigma);
    r.scalar("expected_loaded_weight", model.loaded_occupancy());
    r.scalar("valley_ratio", f.valley_ratio);
    r.scalar("iterations", f.iterations);
    r.detail("telegraph", model);
    r.detail("duration_us", duration);
    r.tables.push(t);
    Ok(r)
}

fn sense_error_curve(cfg: &RawConfig) -> Result<Report, CliError> {
    let (model, duration) = telegraph(cfg)?;
    let fluxes = cfg.require_grid("telegraph.fluxes", Dim::PerUs)?;
    let points = sensing::error_vs_flux(&model, duration, &fluxes)?;
    let mut t = Table::new("error-curve.csv", &["flux", "threshold", "error_probability", "error_sigma", "analytic_error"]);
    for q in &points {
        t.push(vec![num(q.flux), num(q.threshold), num(q.error_probability), num(q.error_sigma), num(q.analytic_error)]);
    }
    let mut r = Report::default();
    r.scalar("points", points.len());
    r.scalar("min_error", points.iter().map(|q| q.error_probability).fold(f64::INFINITY, f64::min));
    r.detail("telegraph", model);
    r.detail("duration_us", duration);
    r.tables.push(t);
    Ok(r)
}
