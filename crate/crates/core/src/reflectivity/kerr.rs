use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::linear::linear_reflection_amplitude;
use crate::error::{Error, Result};
use crate::qed::DeviceParams;

/// Jones vector in the (H, V) basis.
pub type Jones = [C64; 2];

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// (H, V) → (R, L) with |R⟩ = (|H⟩ − i|V⟩)/√2 and |L⟩ = (|H⟩ + i|V⟩)/√2.
pub fn to_circular(v: Jones) -> Jones {
    let i = C64::new(0.0, 1.0);
    [(v[0] + i * v[1]) * FRAC_1_SQRT_2, (v[0] - i * v[1]) * FRAC_1_SQRT_2]
}

/// Inverse of [`to_circular`].
pub fn from_circular(c: Jones) -> Jones {
    let i = C64::new(0.0, 1.0);
    [(c[0] + c[1]) * FRAC_1_SQRT_2, (c[1] - c[0]) * i * FRAC_1_SQRT_2]
}

fn inner(a: &Jones, b: &Jones) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn norm(a: &Jones) -> f64 {
    inner(a, a).re.sqrt()
}

/// Reflected polarization for both spin states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrOutput {
    /// Normalized output Jones vector for spin up, (H, V) basis.
    pub up: Jones,
    pub down: Jones,
    /// ⟨Ψ↑|Ψ↓⟩ of the normalized outputs.
    pub overlap: C64,
    /// ⟨Ψ↑|Ψ↓⟩ before normalization.
    pub raw_overlap: C64,
    /// Reflected power over input power, per spin.
    pub power_up: f64,
    pub power_down: f64,
}

/// Spin-dependent polarization rotation on reflection.
///
/// Spin up couples the dot to right-circular light only: the R component
/// sees `params_up` with the dot active and the L component the bare cavity.
/// Spin down mirrors this with `params_down`.
pub fn kerr_rotation(params_up: &DeviceParams, params_down: &DeviceParams, detuning: f64, input: Jones) -> Result<KerrOutput> {
    params_up.validate()?;
    params_down.validate()?;
    let n_in = norm(&input);
    if !(n_in > 0.0) {
        return Err(Error::Domain("input polarization has zero norm".into()));
    }
    let c = to_circular([input[0] / n_in, input[1] / n_in]);
    let up_c = [
        c[0] * linear_reflection_amplitude(params_up, detuning, true),
        c[1] * linear_reflection_amplitude(params_up, detuning, false),
    ];
    let down_c = [
        c[0] * linear_reflection_amplitude(params_down, detuning, false),
        c[1] * linear_reflection_amplitude(params_down, detuning, true),
    ];
    let (up, down) = (from_circular(up_c), from_circular(down_c));
    let (nu, nd) = (norm(&up), norm(&down));
    if !(nu > 0.0) || !(nd > 0.0) {
        return Err(Error::DegenerateOutput(format!("reflected amplitude vanishes (spin up {nu:.3e}, spin down {nd:.3e})")));
    }
    let raw_overlap = inner(&up, &down);
    Ok(KerrOutput {
        up: [up[0] / nu, up[1] / nu],
        down: [down[0] / nd, down[1] / nd],
        overlap: raw_overlap / (nu * nd),
        raw_overlap,
        power_up: nu * nu,
        power_down: nd * nd,
    })
}

/// Best point of an orthogonality grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalitySolution {
    pub cooperativity: f64,
    pub eta_top: f64,
    pub detuning: f64,
    pub overlap: f64,
}

/// Searches (C, η_top, Δ) for the smallest |⟨Ψ↑|Ψ↓⟩| with an H-polarized
/// input, for a device with coupling `g`, damping `kappa` and radiative rate
/// `gamma_sp`. Points that C cannot reach with the given rates are skipped.
pub fn kerr_orthogonality_search(
    g: f64,
    kappa: f64,
    gamma_sp: f64,
    cooperativities: &[f64],
    eta_tops: &[f64],
    detunings: &[f64],
) -> Result<OrthogonalitySolution> {
    if cooperativities.is_empty() || eta_tops.is_empty() || detunings.is_empty() {
        return Err(Error::EmptyGrid("orthogonality search grid"));
    }
    let h = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut best: Option<OrthogonalitySolution> = None;
    for &c in cooperativities {
        for &eta in eta_tops {
            let Ok(p) = DeviceParams::from_cooperativity(g, kappa, gamma_sp, c, eta, 1.0) else { continue };
            for &d in detunings {
                let Ok(k) = kerr_rotation(&p, &p, d, h) else { continue };
                let o = k.overlap.norm();
                if best.map_or(true, |b| o < b.overlap) {
                    best = Some(OrthogonalitySolution { cooperativity: c, eta_top: eta, detuning: d, overlap: o });
                }
            }
        }
    }
    best.ok_or_else(|| Error::DegenerateOutput("no admissible point in the search grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device(g: f64) -> DeviceParams {
        DeviceParams {
            g,
            kappa_top: 20.0,
            kappa_bottom: 20.0,
            kappa_loss: 10.0,
            gamma_sp: 1.0,
            gamma_star: 0.3,
            omega_c: 0.0,
            omega_qd: 0.0,
            eta_in: 1.0,
        }
    }

    #[test]
    fn basis_change_round_trips() {
        let v = [C64::new(0.3, -0.1), C64::new(-0.7, 0.4)];
        let back = from_circular(to_circular(v));
        assert!((back[0] - v[0]).norm() < 1e-15 && (back[1] - v[1]).norm() < 1e-15);
        let r = from_circular([C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((norm(&r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_coupling_no_rotation() {
        let p = device(0.0);
        let input = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let k = kerr_rotation(&p, &p, 3.0, input).unwrap();
        assert!((k.overlap - 1.0).norm() < 1e-14);
        assert!((k.up[0] - k.down[0]).norm() < 1e-14 && (k.up[1] - k.down[1]).norm() < 1e-14);
    }

    #[test]
    fn spin_flip_swaps_circular_components() {
        let p = device(15.0);
        let h = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        for d in [-20.0, 0.0, 7.0] {
            let k = kerr_rotation(&p, &p, d, h).unwrap();
            let (u, dn) = (to_circular(k.up), to_circular(k.down));
            assert!((u[0] - dn[1]).norm() < 1e-14 && (u[1] - dn[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn reflected_power_bounded() {
        for g in [0.0, 5.0, 30.0] {
            let p = device(g);
            for d in (-30..=30).map(|k| k as f64) {
                let k = kerr_rotation(&p, &p, d, [C64::new(0.8, 0.1), C64::new(0.2, -0.5)]).unwrap();
                assert!(k.power_up <= 1.0 + 1e-12 && k.power_down <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn orthogonal_outputs_exist() {
        let cs: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let etas: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
        let ds: Vec<f64> = (-20..=20).map(|k| k as f64 * 2.0).collect();
        let best = kerr_orthogonality_search(30.0, 60.0, 0.5, &cs, &etas, &ds).unwrap();
        assert!(best.overlap < 1e-3, "{best:?}");
        // direct substitution at the reported point
        let p = DeviceParams::from_cooperativity(30.0, 60.0, 0.5, best.cooperativity, best.eta_top, 1.0).unwrap();
        let k = kerr_rotation(&p, &p, best.detuning, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let (rc, ru) = (
            linear_reflection_amplitude(&p, best.detuning, true),
            linear_reflection_amplitude(&p, best.detuning, false),
        );
        let direct = (rc.conj() * ru + ru.conj() * rc) / 2.0 / (0.5 * (rc.norm_sqr() + ru.norm_sqr()));
        assert!((k.overlap - direct).norm() < 1e-12);
    }

    #[test]
    fn total_absorption_is_degenerate() {
        // critically coupled bare cavity on both spins: nothing comes back
        let p = DeviceParams { g: 0.0, kappa_loss: 0.0, ..device(0.0) };
        let r = kerr_rotation(&p, &p, 0.0, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(r, Err(Error::DegenerateOutput(_))));
    }
}
