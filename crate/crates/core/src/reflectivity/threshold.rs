use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reflectivity sampled against photons per pulse (or flux).
///
/// `low_limit` and `high_limit` are the asymptotic reflectivities for
/// x → 0 and x → ∞ when known; otherwise the curve end points stand in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub x: Vec<f64>,
    pub reflectivity: Vec<f64>,
    pub low_limit: Option<f64>,
    pub high_limit: Option<f64>,
}

/// Tolerated backtracking when checking that a curve is monotone.
pub const MONOTONE_SLACK: f64 = 1e-3;

/// Position where the reflectivity crosses the midpoint of its two
/// asymptotes, interpolated linearly in log x.
pub fn threshold(curve: &PowerCurve) -> Result<f64> {
    let (x, r) = (&curve.x, &curve.reflectivity);
    if x.len() != r.len() {
        return Err(Error::ThresholdUndefined("x and reflectivity lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::ThresholdUndefined("need at least two samples".into()));
    }
    if x.iter().any(|v| !(*v > 0.0)) || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ThresholdUndefined("x must be positive and strictly ascending".into()));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::ThresholdUndefined("non-finite reflectivity".into()));
    }
    let low = curve.low_limit.unwrap_or(r[0]);
    let high = curve.high_limit.unwrap_or(r[r.len() - 1]);
    let span = high - low;
    if !(span.abs() > MONOTONE_SLACK) {
        return Err(Error::ThresholdUndefined(format!("asymptotes {low} and {high} do not differ")));
    }
    let dir = span.signum();
    if r.windows(2).any(|w| dir * (w[1] - w[0]) < -MONOTONE_SLACK) {
        return Err(Error::ThresholdUndefined("curve is not monotone between its asymptotes".into()));
    }
    let mid = 0.5 * (low + high);
    // progress towards the high asymptote, positive once past the midpoint
    let past = |v: f64| dir * (v - mid);
    if past(r[0]) >= 0.0 {
        return Err(Error::ThresholdUndefined("curve starts beyond the midpoint".into()));
    }
    for i in 0..r.len() - 1 {
        let (a, b) = (past(r[i]), past(r[i + 1]));
        if a < 0.0 && b >= 0.0 {
            let t = -a / (b - a);
            let (l0, l1) = (x[i].ln(), x[i + 1].ln());
            return Ok((l0 + t * (l1 - l0)).exp());
        }
    }
    Err(Error::ThresholdUndefined("curve never crosses the midpoint".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(x: Vec<f64>, f: impl Fn(f64) -> f64) -> PowerCurve {
        let reflectivity = x.iter().map(|&v| f(v)).collect();
        PowerCurve { x, reflectivity, low_limit: None, high_limit: None }
    }

    #[test]
    fn step_curve() {
        // samples 0.1% apart around the step
        let x: Vec<f64> = (-2000..=2000).map(|k| 10.0 * 1.001f64.powi(k)).collect();
        let c = curve(x, |n| if n < 10.0 - 1e-9 { 0.9 } else { 0.4 });
        let n = threshold(&c).unwrap();
        assert!((n / 10.0 - 1.0).abs() <= 1e-3, "{n}");
    }

    #[test]
    fn logistic_in_log_n() {
        let x: Vec<f64> = (0..=40).map(|k| 10f64.powf(-1.0 + 0.1 * k as f64)).collect();
        let c = curve(x, |n| 0.3 + 0.5 / (1.0 + (2.0 * (n / 8.0).ln()).exp()));
        let n = threshold(&PowerCurve { low_limit: Some(0.8), high_limit: Some(0.3), ..c }).unwrap();
        assert!((n / 8.0 - 1.0).abs() < 0.01, "{n}");
    }

    #[test]
    fn rising_curve_supported() {
        let x = vec![1.0, 2.0, 4.0, 8.0];
        let c = curve(x, |n| n / 8.0);
        // midpoint 0.5625 lies an eighth of the way from 4 to 8 in R
        assert!((threshold(&c).unwrap() - 4.0 * 2f64.powf(0.125)).abs() < 1e-12);
    }

    #[test]
    fn flat_and_non_monotone_curves_rejected() {
        let c = curve(vec![1.0, 2.0, 3.0], |_| 0.5);
        assert!(matches!(threshold(&c), Err(Error::ThresholdUndefined(_))));
        let c = PowerCurve { x: vec![1.0, 2.0, 3.0, 4.0], reflectivity: vec![0.9, 0.5, 0.8, 0.2], low_limit: None, high_limit: None };
        assert!(matches!(threshold(&c), Err(Error::ThresholdUndefined(_))));
        let c = PowerCurve { x: vec![2.0, 1.0], reflectivity: vec![0.9, 0.2], low_limit: None, high_limit: None };
        assert!(threshold(&c).is_err());
    }

    #[test]
    fn curve_must_reach_midpoint() {
        let c = PowerCurve { x: vec![1.0, 2.0], reflectivity: vec![0.9, 0.8], low_limit: Some(0.9), high_limit: Some(0.2) };
        assert!(threshold(&c).is_err());
    }
}
