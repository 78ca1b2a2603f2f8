use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::linear_reflectivity;
use crate::error::{Error, Result};
use crate::qed::DeviceParams;

/// Linear temperature tuning of the QD line and the cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningCurves {
    /// dω_QD/dT in rad/ns per K.
    pub d_omega_qd_dt: f64,
    /// dω_C/dT in rad/ns per K.
    pub d_omega_c_dt: f64,
    /// Temperature at which `omega_qd` and `omega_c` of the device apply.
    pub t_ref: f64,
}

impl TuningCurves {
    /// Device parameters at temperature `t`.
    pub fn at(&self, params: &DeviceParams, t: f64) -> DeviceParams {
        let dt = t - self.t_ref;
        DeviceParams {
            omega_qd: params.omega_qd + self.d_omega_qd_dt * dt,
            omega_c: params.omega_c + self.d_omega_c_dt * dt,
            ..*params
        }
    }
}

/// Linear reflectivity over temperature and absolute laser frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureMap {
    pub temperatures: Vec<f64>,
    /// Laser frequency on the same reference as `omega_c` and `omega_qd`.
    pub frequencies: Vec<f64>,
    /// Row-major: `reflectivity[i * frequencies.len() + j]` is at
    /// `temperatures[i]`, `frequencies[j]`.
    pub reflectivity: Vec<f64>,
}

impl TemperatureMap {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.frequencies.len();
        &self.reflectivity[i * n..(i + 1) * n]
    }
}

/// Reflectivity map in the linear regime.
pub fn temperature_map(
    params: &DeviceParams,
    tuning: &TuningCurves,
    temperatures: &[f64],
    frequencies: &[f64],
) -> Result<TemperatureMap> {
    params.validate()?;
    if temperatures.is_empty() {
        return Err(Error::EmptyGrid("temperature grid"));
    }
    if frequencies.is_empty() {
        return Err(Error::EmptyGrid("frequency grid"));
    }
    let reflectivity = temperatures
        .par_iter()
        .flat_map_iter(|&t| {
            let p = tuning.at(params, t);
            frequencies.iter().map(move |&w| linear_reflectivity(&p, w - p.omega_c, true))
        })
        .collect();
    Ok(TemperatureMap { temperatures: temperatures.to_vec(), frequencies: frequencies.to_vec(), reflectivity })
}

/// The two deepest reflectivity minima at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub temperature: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BranchPoint {
    pub fn splitting(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Traces the polariton branches as the two deepest local minima of each
/// row. Rows with fewer than two interior minima are skipped.
pub fn polariton_branches(map: &TemperatureMap) -> Vec<BranchPoint> {
    let w = &map.frequencies;
    let mut out = Vec::new();
    for (i, &t) in map.temperatures.iter().enumerate() {
        let r = map.row(i);
        let mut minima: Vec<(f64, usize)> =
            (1..r.len().saturating_sub(1)).filter(|&j| r[j] < r[j - 1] && r[j] <= r[j + 1]).map(|j| (r[j], j)).collect();
        if minima.len() < 2 {
            continue;
        }
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (a, b) = (w[minima[0].1], w[minima[1].1]);
        out.push(BranchPoint { temperature: t, lower: a.min(b), upper: a.max(b) });
    }
    out
}

/// Smallest branch splitting over the map.
pub fn minimum_splitting(map: &TemperatureMap) -> Option<BranchPoint> {
    polariton_branches(map).into_iter().min_by(|a, b| a.splitting().total_cmp(&b.splitting()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> DeviceParams {
        DeviceParams {
            g: 40.0,
            kappa_top: 5.0,
            kappa_bottom: 5.0,
            kappa_loss: 0.0,
            gamma_sp: 0.5,
            gamma_star: 0.0,
            omega_c: 0.0,
            omega_qd: 0.0,
            eta_in: 1.0,
        }
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn anticrossing_splitting_is_twice_g() {
        let p = device();
        let tuning = TuningCurves { d_omega_qd_dt: -20.0, d_omega_c_dt: -5.0, t_ref: 20.0 };
        let step = 0.25;
        let map = temperature_map(&p, &tuning, &grid(10.0, 30.0, 0.05), &grid(-300.0, 300.0, step)).unwrap();
        let best = minimum_splitting(&map).unwrap();
        assert!((best.splitting() - 2.0 * p.g).abs() <= step + 1e-9, "{best:?}");
        assert!((best.temperature - 20.0).abs() < 1.0, "{best:?}");
    }

    #[test]
    fn parallel_tuning_has_no_anticrossing() {
        let p = DeviceParams { omega_qd: 60.0, ..device() };
        let tuning = TuningCurves { d_omega_qd_dt: -8.0, d_omega_c_dt: -8.0, t_ref: 20.0 };
        let map = temperature_map(&p, &tuning, &grid(10.0, 30.0, 1.0), &grid(-400.0, 400.0, 0.25)).unwrap();
        let branches = polariton_branches(&map);
        assert_eq!(branches.len(), map.temperatures.len());
        let s0 = branches[0].splitting();
        assert!(branches.iter().all(|b| (b.splitting() - s0).abs() < 1e-9));
    }

    #[test]
    fn far_detuned_dips_sit_at_bare_lines() {
        let p = device();
        let tuning = TuningCurves { d_omega_qd_dt: -20.0, d_omega_c_dt: -5.0, t_ref: 20.0 };
        let t = 60.0;
        let bare = tuning.at(&p, t);
        let map = temperature_map(&p, &tuning, &[t], &grid(-1000.0, 100.0, 0.05)).unwrap();
        let b = polariton_branches(&map)[0];
        let detuning = (bare.omega_qd - bare.omega_c).abs();
        // dispersive shift g²/δ
        let shift = p.g * p.g / detuning;
        assert!((b.lower - bare.omega_qd).abs() < 1.5 * shift);
        assert!((b.upper - bare.omega_c).abs() < 1.5 * shift);
        assert!(shift / detuning < 0.01);
    }

    #[test]
    fn empty_grids_rejected() {
        let tuning = TuningCurves { d_omega_qd_dt: 0.0, d_omega_c_dt: 0.0, t_ref: 0.0 };
        assert!(temperature_map(&device(), &tuning, &[], &[1.0]).is_err());
        assert!(temperature_map(&device(), &tuning, &[1.0], &[]).is_err());
    }
}
