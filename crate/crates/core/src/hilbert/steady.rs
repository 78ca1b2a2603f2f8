use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::generator::LindbladGenerator;
use super::ops::DensityMatrix;
use super::HilbertConfig;
use crate::error::{Error, Result};

/// Stationary state of a constant-drive generator.
///
/// Solves `L vec(ρ) = 0` by dense LU with the equation for ρ₀₀ replaced by
/// the trace condition. A couple of refinement sweeps start from the vacuum.
pub fn steady_state(gen: &LindbladGenerator, cfg: &HilbertConfig) -> Result<DensityMatrix> {
    steady_state_from(gen, cfg, &DensityMatrix::vacuum(gen.space))
}

/// Like [`steady_state`] but refinement starts from `seed`.
pub fn steady_state_from(gen: &LindbladGenerator, cfg: &HilbertConfig, seed: &DensityMatrix) -> Result<DensityMatrix> {
    let d = gen.space.dim();
    let n = d * d;
    let liouvillian = gen.superoperator();
    let mut system = liouvillian.clone();
    for col in 0..n {
        system[(0, col)] = C64::new(0.0, 0.0);
    }
    for i in 0..d {
        system[(0, i + i * d)] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::zeros(n);
    rhs[0] = C64::new(1.0, 0.0);

    let lu = system.clone().lu();
    let pivots = lu.u().diagonal();
    let (lo, hi) = pivots.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.norm()), hi.max(p.norm())));
    if !(hi > 0.0) || lo / hi < 1e-13 {
        return Err(Error::Solver { residual: if hi > 0.0 { lo / hi } else { f64::INFINITY } });
    }
    let mut x = seed.to_vec();
    for _ in 0..3 {
        let r = &rhs - &system * &x;
        let dx = lu.solve(&r).ok_or(Error::Solver { residual: f64::INFINITY })?;
        x += dx;
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Solver { residual: f64::INFINITY });
    }

    let mut rho = DMatrix::from_column_slice(d, d, x.as_slice());
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    rho /= tr;

    let v = DVector::from_column_slice(rho.as_slice());
    let residual = (&liouvillian * &v).norm();
    let scale = liouvillian.norm() * v.norm();
    let relative = if scale > 0.0 { residual / scale } else { residual };
    if !(relative <= cfg.steady_tol) {
        return Err(Error::Solver { residual: relative });
    }
    Ok(DensityMatrix { space: gen.space, rho, displacement: gen.constant_displacement() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{FockSpace, Frame};
    use crate::qed::DeviceParams;

    fn params(g: f64) -> DeviceParams {
        DeviceParams {
            g,
            kappa_top: 25.0,
            kappa_bottom: 25.0,
            kappa_loss: 10.0,
            gamma_sp: 1.0,
            gamma_star: 0.5,
            omega_c: 0.0,
            omega_qd: 0.0,
            eta_in: 0.9,
        }
    }

    #[test]
    fn undriven_state_is_vacuum() {
        let gen = LindbladGenerator::lab(&params(15.0), 0.0, C64::new(0.0, 0.0), 3).unwrap();
        let ss = steady_state(&gen, &HilbertConfig::default()).unwrap();
        let vac = DensityMatrix::vacuum(gen.space);
        assert!((ss.rho - vac.rho).norm() < 1e-12);
    }

    #[test]
    fn empty_cavity_lorentzian() {
        // g = 0: ⟨a†a⟩ = η_in κ_top |b|² / (Δ² + κ²/4)
        let p = params(0.0);
        let b = C64::new(0.8, 0.0);
        let cfg = HilbertConfig::default();
        for k in -5..=5 {
            let laser = 12.0 * k as f64;
            let gen = LindbladGenerator::lab(&p, laser, b, 12).unwrap();
            let ss = steady_state(&gen, &cfg).unwrap();
            let delta = laser - p.omega_c;
            let expected = p.eta_in * p.kappa_top * b.norm_sqr() / (delta * delta + p.kappa().powi(2) / 4.0);
            assert!((ss.photon_number() - expected).abs() < 1e-9 * (1.0 + expected), "{laser}");
        }
    }

    #[test]
    fn seed_independence() {
        let gen = LindbladGenerator::lab(&params(15.0), 2.0, C64::new(2.0, 0.5), 6).unwrap();
        let cfg = HilbertConfig::default();
        let a = steady_state_from(&gen, &cfg, &DensityMatrix::basis_state(gen.space, true, 2)).unwrap();
        let b = steady_state_from(&gen, &cfg, &DensityMatrix::basis_state(gen.space, false, 5)).unwrap();
        assert!((a.rho - b.rho).norm() < cfg.steady_tol * 10.0);
    }

    #[test]
    fn frames_agree() {
        let p = params(15.0);
        let cfg = HilbertConfig::default();
        let b = C64::new(1.2, 0.0);
        let lab = steady_state(&LindbladGenerator::lab(&p, 3.0, b, 14).unwrap(), &cfg).unwrap();
        let disp = steady_state(
            &LindbladGenerator::new(&p, 3.0, b, FockSpace::new(8).unwrap(), Frame::Displaced).unwrap(),
            &cfg,
        )
        .unwrap();
        assert!((lab.cavity_amplitude() - disp.cavity_amplitude()).norm() < 1e-7);
        assert!((lab.photon_number() - disp.photon_number()).abs() < 1e-7);
        assert!((lab.excited_population() - disp.excited_population()).abs() < 1e-7);
    }

    #[test]
    fn steady_state_is_physical() {
        let gen = LindbladGenerator::lab(&params(20.0), -4.0, C64::new(1.5, -0.4), 8).unwrap();
        let ss = steady_state(&gen, &HilbertConfig::default()).unwrap();
        assert!((ss.trace().re - 1.0).abs() < 1e-12);
        assert!(ss.hermiticity_error() < 1e-12);
        assert!(ss.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn degenerate_null_space_is_reported() {
        // no damping of the QD and an uncoupled cavity: every QD population
        // is stationary
        let mut p = params(0.0);
        p.gamma_sp = 0.0;
        p.gamma_star = 0.0;
        let gen = LindbladGenerator::lab(&p, 0.0, C64::new(0.0, 0.0), 2).unwrap();
        let err = steady_state(&gen, &HilbertConfig::default());
        assert!(matches!(err, Err(Error::Solver { .. })), "{err:?}");
    }
}
