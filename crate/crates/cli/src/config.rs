//! Line-oriented `[section]` / `key = value` configuration with unit
//! suffixes.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use qdsim::units::UEV_TO_RAD_PER_NS;

use crate::error::CliError;

/// Physical dimension of a value and the unit it is converted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Plain,
    /// Energy or angular frequency, to rad/ns; bare numbers are μeV.
    Energy,
    TimeNs,
    TimeUs,
    /// Rates and fluxes per ns.
    PerNs,
    /// Rates and fluxes per μs.
    PerUs,
    /// Micrometres.
    Length,
    Kelvin,
    /// Temperature tuning coefficient, to rad/ns per K; bare numbers are μeV/K.
    EnergyPerK,
}

impl Dim {
    fn factor(self, unit: Option<&str>) -> Option<f64> {
        let Some(unit) = unit else {
            return Some(if matches!(self, Dim::Energy | Dim::EnergyPerK) { UEV_TO_RAD_PER_NS } else { 1.0 });
        };
        match (self, unit) {
            (Dim::Energy, "ueV") => Some(UEV_TO_RAD_PER_NS),
            (Dim::Energy, "meV") => Some(1e3 * UEV_TO_RAD_PER_NS),
            (Dim::Energy, "rad/ns") | (Dim::PerNs, "/ns") | (Dim::PerUs, "/us") => Some(1.0),
            (Dim::TimeNs, "ps") => Some(1e-3),
            (Dim::TimeNs, "ns") | (Dim::TimeUs, "us") => Some(1.0),
            (Dim::TimeNs, "us") => Some(1e3),
            (Dim::TimeUs, "ns") => Some(1e-3),
            (Dim::TimeUs, "ms") => Some(1e3),
            (Dim::PerNs, "/ps") => Some(1e3),
            (Dim::PerNs, "/us") => Some(1e-3),
            (Dim::PerNs, "ueV") => Some(UEV_TO_RAD_PER_NS),
            (Dim::PerUs, "/ns") => Some(1e3),
            (Dim::PerUs, "/ms") => Some(1e-3),
            (Dim::Length, "um") => Some(1.0),
            (Dim::Length, "nm") => Some(1e-3),
            (Dim::Kelvin, "K") => Some(1.0),
            (Dim::EnergyPerK, "ueV/K") => Some(UEV_TO_RAD_PER_NS),
            (Dim::EnergyPerK, "meV/K") => Some(1e3 * UEV_TO_RAD_PER_NS),
            _ => None,
        }
    }
}

/// Every accepted `section.key`.
const SCHEMA: &[&str] = &[
    "run.seed",
    "run.out",
    "device.g",
    "device.kappa",
    "device.gamma_sp",
    "device.cooperativity",
    "device.gamma_star",
    "device.eta_top",
    "device.eta_in",
    "device.kappa_top",
    "device.kappa_bottom",
    "device.kappa_loss",
    "device.omega_c",
    "device.omega_qd",
    "solver.n_max",
    "solver.steady_tol",
    "solver.ode_rtol",
    "solver.ode_atol",
    "solver.truncation_tol",
    "solver.n_max_cap",
    "design.q0",
    "design.loss_ratio",
    "design.loss_length",
    "design.d_ref",
    "design.purcell_ref",
    "design.diameters",
    "spectrum.flux",
    "spectrum.detuning",
    "power.detuning",
    "power.flux",
    "pulse.photons",
    "pulse.detuning",
    "temperature.temperatures",
    "temperature.frequencies",
    "temperature.d_qd_dt",
    "temperature.d_c_dt",
    "temperature.t_ref",
    "kerr.detuning",
    "kerr.input",
    "kerr.cooperativity",
    "kerr.eta_top",
    "kerr.search_detuning",
    "capture.n_qw",
    "capture.r_qw",
    "capture.r_cap",
    "capture.r_x",
    "capture.r_xx",
    "capture.period",
    "capture.direct_injection",
    "capture.pulses",
    "dephasing.gamma_star",
    "dephasing.sd_rate",
    "dephasing.sd_sigma",
    "dephasing.jitter_rate",
    "dephasing.t1",
    "dephasing.delay",
    "dephasing.time_bins",
    "dephasing.pairs",
    "tradeoff.beta",
    "tradeoff.eta_top",
    "tradeoff.p_state",
    "tradeoff.t1",
    "tradeoff.gamma_star",
    "tradeoff.sd_rate",
    "tradeoff.delay",
    "tradeoff.pump",
    "tradeoff.barrier_sd",
    "tradeoff.sd_exponent",
    "tradeoff.two_color_sd",
    "tradeoff.calibration_brightness",
    "tradeoff.calibration_overlap",
    "tradeoff.pairs",
    "gate.m",
    "gate.overlaps",
    "telegraph.k_cap",
    "telegraph.k_rel",
    "telegraph.r_loaded",
    "telegraph.r_empty",
    "telegraph.flux",
    "telegraph.eta_det",
    "telegraph.dt",
    "telegraph.read_noise",
    "telegraph.duration",
    "telegraph.threshold",
    "telegraph.fluxes",
    "telegraph.bin_width",
    "sweep.axis1",
    "sweep.grid1",
    "sweep.axis2",
    "sweep.grid2",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

pub fn check_key(path: &str) -> Result<(), CliError> {
    if SCHEMA.contains(&path) {
        Ok(())
    } else {
        Err(CliError::Config(format!("unknown parameter path `{path}`")))
    }
}

fn normalize(value: &str) -> String {
    value.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Config(format!("line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| at(format!("malformed section header `{line}`")))?;
                section = Some(name.trim().to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let sec = section.as_ref().ok_or_else(|| at("key outside of any section".into()))?;
            let path = format!("{sec}.{}", key.trim());
            check_key(&path).map_err(|e| at(e.to_string()))?;
            if entries.insert(path.clone(), normalize(value)).is_some() {
                return Err(at(format!("duplicate key `{path}`")));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not `section.key=value`")))?;
        self.set_value(path.trim(), value)
    }

    pub fn set_value(&mut self, path: &str, value: &str) -> Result<(), CliError> {
        check_key(path)?;
        self.entries.insert(path.to_string(), normalize(value));
        Ok(())
    }

    pub fn contains(&self, path: &str) -> bool {
        self.entries.contains_key(path)
    }

    pub fn string(&self, path: &str) -> Option<&str> {
        self.entries.get(path).map(String::as_str)
    }

    /// SHA-256 over the sorted, whitespace-normalized entries. The output
    /// directory is not part of the hash.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries.iter().filter(|(k, _)| k.as_str() != "run.out") {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn split_unit<'a>(&self, path: &str, value: &'a str) -> Result<(Vec<&'a str>, Option<&'a str>, bool), CliError> {
        let mut tokens: Vec<&str> = value.split_whitespace().collect();
        let mut log = false;
        let mut unit = None;
        while tokens.len() > 1 {
            let t = *tokens.last().expect("non-empty");
            if t == "log" && !log {
                log = true;
            } else if unit.is_none() && !t.ends_with(',') && t.parse::<f64>().is_err() && !t.contains(':') {
                unit = Some(t);
            } else {
                break;
            }
            tokens.pop();
        }
        if tokens.is_empty() {
            return Err(CliError::Config(format!("{path}: missing value")));
        }
        Ok((tokens, unit, log))
    }

    fn convert(&self, path: &str, dim: Dim, unit: Option<&str>) -> Result<f64, CliError> {
        dim.factor(unit)
            .ok_or_else(|| CliError::Config(format!("{path}: unit `{}` does not fit this parameter", unit.unwrap_or(""))))
    }

    fn number(path: &str, s: &str) -> Result<f64, CliError> {
        let v: f64 = s.parse().map_err(|_| CliError::Config(format!("{path}: `{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("{path}: `{s}` is not finite")));
        }
        Ok(v)
    }

    /// Scalar value converted to the base unit of `dim`.
    pub fn scalar(&self, path: &str, dim: Dim) -> Result<Option<f64>, CliError> {
        let Some(value) = self.entries.get(path) else { return Ok(None) };
        let (tokens, unit, log) = self.split_unit(path, value)?;
        if tokens.len() != 1 || log {
            return Err(CliError::Config(format!("{path}: expected a single number, got `{value}`")));
        }
        Ok(Some(Self::number(path, tokens[0])? * self.convert(path, dim, unit)?))
    }

    pub fn require(&self, path: &str, dim: Dim) -> Result<f64, CliError> {
        self.scalar(path, dim)?.ok_or_else(|| CliError::Config(format!("missing required parameter `{path}`")))
    }

    pub fn scalar_or(&self, path: &str, dim: Dim, default: f64) -> Result<f64, CliError> {
        Ok(self.scalar(path, dim)?.unwrap_or(default))
    }

    pub fn integer(&self, path: &str) -> Result<Option<u64>, CliError> {
        match self.entries.get(path) {
            None => Ok(None),
            Some(v) => {
                let x = Self::number(path, v)?;
                if x < 0.0 || x.fract() != 0.0 || x > 9.0e15 {
                    return Err(CliError::Config(format!("{path}: `{v}` is not a non-negative integer")));
                }
                Ok(Some(x as u64))
            }
        }
    }

    /// Grid values as written plus the trailing unit, if any.
    fn grid_values<'a>(&self, path: &str, value: &'a str) -> Result<(Vec<f64>, Option<&'a str>), CliError> {
        let (tokens, unit, log) = self.split_unit(path, value)?;
        let joined = tokens.join(" ");
        let values: Vec<f64> = if joined.contains(':') {
            let parts: Vec<&str> = joined.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(CliError::Config(format!("{path}: range must be start:stop:n")));
            }
            let (a, b) = (Self::number(path, parts[0])?, Self::number(path, parts[1])?);
            let n = Self::number(path, parts[2])?;
            if n < 1.0 || n.fract() != 0.0 {
                return Err(CliError::Config(format!("{path}: point count must be a positive integer")));
            }
            let n = n as usize;
            if log && !(a > 0.0 && b > 0.0) {
                return Err(CliError::Config(format!("{path}: log range needs positive end points")));
            }
            (0..n)
                .map(|i| {
                    let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    if log {
                        (a.ln() + f * (b.ln() - a.ln())).exp()
                    } else {
                        a + f * (b - a)
                    }
                })
                .collect()
        } else {
            if log {
                return Err(CliError::Config(format!("{path}: `log` applies to ranges only")));
            }
            joined
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Self::number(path, s))
                .collect::<Result<_, _>>()?
        };
        if values.is_empty() {
            return Err(CliError::Config(format!("{path}: empty grid")));
        }
        Ok((values, unit))
    }

    /// Grid: `a, b, c`, `start:stop:n` or `start:stop:n log`, with an
    /// optional trailing unit.
    pub fn grid(&self, path: &str, dim: Dim) -> Result<Option<Vec<f64>>, CliError> {
        let Some(value) = self.entries.get(path) else { return Ok(None) };
        let (values, unit) = self.grid_values(path, value)?;
        let factor = self.convert(path, dim, unit)?;
        Ok(Some(values.into_iter().map(|v| v * factor).collect()))
    }

    /// Grid values as written, without unit conversion, plus the unit.
    pub fn raw_grid(&self, path: &str) -> Result<(Vec<f64>, Option<String>), CliError> {
        let value = self.entries.get(path).ok_or_else(|| CliError::Config(format!("missing required grid `{path}`")))?;
        let (values, unit) = self.grid_values(path, value)?;
        Ok((values, unit.map(str::to_string)))
    }

    pub fn require_grid(&self, path: &str, dim: Dim) -> Result<Vec<f64>, CliError> {
        self.grid(path, dim)?.ok_or_else(|| CliError::Config(format!("missing required grid `{path}`")))
    }
}
