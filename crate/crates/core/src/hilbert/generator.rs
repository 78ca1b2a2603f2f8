//! Lindblad generator of the driven QD-cavity system.
//!
//! In the frame rotating at the laser frequency ω, with ħ = 1,
//!
//! ```text
//! H = Δ_C a†a + Δ_QD σ†σ + g(a†σ + aσ†) + i√(η_in κ_top)(b_in a† − b_in* a)
//! L(ρ) = −i[H, ρ] + κ D[a]ρ + γ_sp D[σ]ρ + 2γ* D[σ†σ]ρ
//! ```
//!
//! with Δ_C = ω_C − ω, Δ_QD = ω_QD − ω and |b_in|² the incident photon flux.
//!
//! The generator can also be written in a displaced frame where the cavity
//! field is split into the classical response α(t) of the empty cavity and a
//! quantum remainder. The drive then acts on the QD as g(α σ† + α* σ) and the
//! remainder stays close to vacuum even for intense drives, so the Fock
//! truncation no longer grows with the incident power.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::ops::{DensityMatrix, FockSpace, SparseOp};
use crate::error::Result;
use crate::qed::DeviceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    /// Drive enters as a cavity field term; the state holds the whole field.
    #[default]
    Lab,
    /// Cavity field displaced by the empty-cavity response α.
    Displaced,
}

#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    pub space: FockSpace,
    pub params: DeviceParams,
    /// Laser angular frequency, same reference as `omega_c`.
    pub laser: f64,
    /// Constant drive amplitude b_in (√(photons/ns)).
    pub drive: C64,
    pub frame: Frame,
    a: SparseOp,
    sigma: SparseOp,
    /// Static Hamiltonian without any drive term.
    h0: SparseOp,
    /// Collapse operators with the rate folded in (`√rate · L`).
    collapse: Vec<SparseOp>,
    /// `−i/2 Σ L†L`, precomputed.
    anti_hermitian: SparseOp,
}

impl LindbladGenerator {
    pub fn new(params: &DeviceParams, laser: f64, drive: C64, space: FockSpace, frame: Frame) -> Result<Self> {
        params.validate()?;
        let a = space.annihilation();
        let sigma = space.lowering();
        let delta_c = params.omega_c - laser;
        let delta_qd = params.omega_qd - laser;
        let h0 = space
            .number()
            .scale(C64::new(delta_c, 0.0))
            .add(&space.excited_projector().scale(C64::new(delta_qd, 0.0)))
            .add(&a.adjoint().mul(&sigma).scale(C64::new(params.g, 0.0)))
            .add(&a.mul(&sigma.adjoint()).scale(C64::new(params.g, 0.0)));

        let mut collapse = Vec::new();
        for (rate, op) in [
            (params.kappa(), a.clone()),
            (params.gamma_sp, sigma.clone()),
            (2.0 * params.gamma_star, space.excited_projector()),
        ] {
            if rate > 0.0 {
                collapse.push(op.scale(C64::new(rate.sqrt(), 0.0)));
            }
        }
        let mut ldl = SparseOp::zeros(space.dim());
        for l in &collapse {
            ldl = ldl.add(&l.adjoint().mul(l));
        }
        let anti_hermitian = ldl.scale(C64::new(0.0, -0.5));

        Ok(LindbladGenerator { space, params: *params, laser, drive, frame, a, sigma, h0, collapse, anti_hermitian })
    }

    /// Laboratory-frame generator.
    pub fn lab(params: &DeviceParams, laser: f64, drive: C64, n_max: usize) -> Result<Self> {
        Self::new(params, laser, drive, FockSpace::new(n_max)?, Frame::Lab)
    }

    /// Displaced-frame generator.
    pub fn displaced(params: &DeviceParams, laser: f64, drive: C64, n_max: usize) -> Result<Self> {
        Self::new(params, laser, drive, FockSpace::new(n_max)?, Frame::Displaced)
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(&self.params, self.laser, self.drive, FockSpace::new(n_max)?, self.frame)
    }

    pub fn annihilation(&self) -> &SparseOp {
        &self.a
    }

    pub fn lowering(&self) -> &SparseOp {
        &self.sigma
    }

    /// Cavity detuning Δ_C = ω_C − ω.
    pub fn cavity_detuning(&self) -> f64 {
        self.params.omega_c - self.laser
    }

    /// Input coupling √(η_in κ_top) of the incident field into the mode.
    pub fn input_coupling(&self) -> f64 {
        (self.params.eta_in * self.params.kappa_top).sqrt()
    }

    /// Rate of change of the empty-cavity amplitude α.
    pub fn displacement_rate(&self, alpha: C64, drive: C64) -> C64 {
        let k = C64::new(self.params.kappa() / 2.0, self.cavity_detuning());
        -k * alpha + drive * self.input_coupling()
    }

    /// Stationary empty-cavity amplitude for a constant drive.
    pub fn stationary_displacement(&self, drive: C64) -> C64 {
        drive * self.input_coupling() / C64::new(self.params.kappa() / 2.0, self.cavity_detuning())
    }

    /// Effective drive term `ε X† + ε* X` for a drive `b_in` and displacement α.
    fn drive_term(&self, drive: C64, alpha: C64) -> SparseOp {
        match self.frame {
            // i c (b a† − b* a) = ε a† + ε* a with ε = i c b
            Frame::Lab => {
                let eps = C64::new(0.0, self.input_coupling()) * drive;
                self.a.adjoint().scale(eps).add(&self.a.scale(eps.conj()))
            }
            Frame::Displaced => {
                let eps = alpha * self.params.g;
                self.sigma.adjoint().scale(eps).add(&self.sigma.scale(eps.conj()))
            }
        }
    }

    /// Full Hamiltonian for a drive amplitude and (displaced frame) α.
    pub fn hamiltonian(&self, drive: C64, alpha: C64) -> SparseOp {
        self.h0.add(&self.drive_term(drive, alpha))
    }

    /// Non-Hermitian effective Hamiltonian H − i/2 Σ L†L.
    pub fn effective_hamiltonian(&self, drive: C64, alpha: C64) -> SparseOp {
        self.hamiltonian(drive, alpha).add(&self.anti_hermitian)
    }

    /// Static effective Hamiltonian (no drive), for callers that add the
    /// drive separately.
    pub(crate) fn effective_static(&self) -> SparseOp {
        self.h0.add(&self.anti_hermitian)
    }

    /// Drive operator X such that the drive term is `ε X† + ε* X`, and ε.
    pub(crate) fn drive_operator(&self, drive: C64, alpha: C64) -> (&SparseOp, C64) {
        match self.frame {
            Frame::Lab => (&self.a, C64::new(0.0, self.input_coupling()) * drive),
            Frame::Displaced => (&self.sigma, alpha * self.params.g),
        }
    }

    pub fn collapse_operators(&self) -> &[SparseOp] {
        &self.collapse
    }

    /// Applies the generator: `L(ρ)` for given drive and displacement.
    pub fn apply(&self, rho: &DMatrix<C64>, drive: C64, alpha: C64) -> DMatrix<C64> {
        let heff = self.effective_hamiltonian(drive, alpha);
        let mut out = DMatrix::zeros(self.space.dim(), self.space.dim());
        apply_with(&heff, &self.collapse, rho, &mut out);
        out
    }

    /// Steady-state drive applied by [`steady_state`](super::steady_state):
    /// the constant `drive` and, in the displaced frame, its stationary α.
    pub fn constant_displacement(&self) -> C64 {
        match self.frame {
            Frame::Lab => C64::new(0.0, 0.0),
            Frame::Displaced => self.stationary_displacement(self.drive),
        }
    }

    /// Dense superoperator acting on column-major `vec(ρ)` for the constant
    /// drive stored in the generator.
    pub fn superoperator(&self) -> DMatrix<C64> {
        let d = self.space.dim();
        let heff = self.effective_hamiltonian(self.drive, self.constant_displacement());
        let mut s = DMatrix::zeros(d * d, d * d);
        let mi = C64::new(0.0, -1.0);
        // −i Heff ρ
        for &(i, k, v) in &heff.entries {
            for j in 0..d {
                s[(i + j * d, k + j * d)] += mi * v;
            }
        }
        // +i ρ Heff†, (ρ Heff†)_ij = Σ_k ρ_ik conj(Heff_jk)
        for &(j, k, v) in &heff.entries {
            for i in 0..d {
                s[(i + j * d, i + k * d)] -= mi * v.conj();
            }
        }
        for l in &self.collapse {
            for &(i, k, lik) in &l.entries {
                for &(j, m, ljm) in &l.entries {
                    s[(i + j * d, k + m * d)] += lik * ljm.conj();
                }
            }
        }
        s
    }

    /// Reflected mode-matched photon flux ⟨b_out† b_out⟩ plus the
    /// non-mode-matched background, and the coherent part |⟨b_out⟩|² plus
    /// background, for a state and instantaneous drive.
    pub fn reflected_flux(&self, state: &DensityMatrix, drive: C64) -> ReflectedFlux {
        let kt = self.params.kappa_top.sqrt();
        let eta_in = self.params.eta_in;
        let background = (1.0 - eta_in) * drive.norm_sqr();
        let beta_in = drive * eta_in.sqrt();
        // classical part of the output: β_in − √κ_top α
        let beta_out = beta_in - state.displacement * kt;
        let c = state.fluctuation_amplitude();
        let cc = state.fluctuation_number();
        let total = beta_out.norm_sqr() - 2.0 * kt * (beta_out.conj() * c).re + kt * kt * cc;
        let coherent = (beta_out - c * kt).norm_sqr();
        ReflectedFlux { total: background + total, coherent: background + coherent, incident: drive.norm_sqr() }
    }
}

/// Output fluxes in photons/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectedFlux {
    /// Total detected reflected flux.
    pub total: f64,
    /// Same, keeping only the coherent (mean-field) part of the cavity emission.
    pub coherent: f64,
    pub incident: f64,
}

/// `out = −i(Heff ρ − ρ Heff†) + Σ L ρ L†` (out is overwritten).
pub(crate) fn apply_with(heff: &SparseOp, collapse: &[SparseOp], rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    out.fill(C64::new(0.0, 0.0));
    let mi = C64::new(0.0, -1.0);
    heff.left_mul_acc(rho, mi, out);
    heff.adjoint().right_mul_acc(rho, -mi, out);
    for l in collapse {
        l.sandwich_acc(rho, C64::new(1.0, 0.0), out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qed::DeviceParams;

    fn params() -> DeviceParams {
        DeviceParams {
            g: 20.0,
            kappa_top: 30.0,
            kappa_bottom: 30.0,
            kappa_loss: 10.0,
            gamma_sp: 1.5,
            gamma_star: 0.7,
            omega_c: 3.0,
            omega_qd: -2.0,
            eta_in: 0.9,
        }
    }

    fn random_hermitian(d: usize, seed: u64) -> DMatrix<C64> {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = DMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn generator_preserves_trace() {
        for frame in [Frame::Lab, Frame::Displaced] {
            let gen = LindbladGenerator::new(&params(), 1.0, C64::new(0.7, 0.2), FockSpace::new(4).unwrap(), frame)
                .unwrap();
            let s = gen.superoperator();
            let d = gen.space.dim();
            // Σ_i S[(i,i), :] = 0
            for col in 0..d * d {
                let sum: C64 = (0..d).map(|i| s[(i + i * d, col)]).sum();
                assert!(sum.norm() < 1e-10, "trace column {col}: {sum}");
            }
        }
    }

    #[test]
    fn superoperator_matches_direct_application() {
        let gen = LindbladGenerator::lab(&params(), 1.0, C64::new(0.4, -0.3), 3).unwrap();
        let d = gen.space.dim();
        let rho = random_hermitian(d, 7);
        let direct = gen.apply(&rho, gen.drive, C64::new(0.0, 0.0));
        let v = gen.superoperator() * nalgebra::DVector::from_column_slice(rho.as_slice());
        let via_super = DMatrix::from_column_slice(d, d, v.as_slice());
        assert!((direct - via_super).norm() < 1e-10);
    }

    #[test]
    fn liouvillian_is_linear() {
        let gen = LindbladGenerator::lab(&params(), 0.0, C64::new(1.1, 0.0), 3).unwrap();
        let d = gen.space.dim();
        let (r1, r2) = (random_hermitian(d, 1), random_hermitian(d, 2));
        let (a, b) = (C64::new(0.3, 0.0), C64::new(-1.7, 0.0));
        let drive = gen.drive;
        let z = C64::new(0.0, 0.0);
        let lhs = gen.apply(&(&r1 * a + &r2 * b), drive, z);
        let rhs = gen.apply(&r1, drive, z) * a + gen.apply(&r2, drive, z) * b;
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + r1.norm() + r2.norm()) * 100.0);
    }

    #[test]
    fn jaynes_cummings_ladder() {
        let mut p = params();
        p.omega_c = 0.0;
        p.omega_qd = 0.0;
        let gen = LindbladGenerator::lab(&p, 0.0, C64::new(0.0, 0.0), 6).unwrap();
        let h = gen.hamiltonian(C64::new(0.0, 0.0), C64::new(0.0, 0.0)).to_dense();
        let evals = h.symmetric_eigenvalues();
        for n in 1..=3usize {
            let target = p.g * (n as f64).sqrt();
            for sign in [1.0, -1.0] {
                assert!(
                    evals.iter().any(|&e| (e - sign * target).abs() < 1e-10),
                    "missing eigenvalue {}",
                    sign * target
                );
            }
        }
    }

    #[test]
    fn dephasing_alone_conserves_populations() {
        let p = DeviceParams {
            g: 0.0,
            kappa_top: 0.0,
            kappa_bottom: 0.0,
            kappa_loss: 1e-300,
            gamma_sp: 0.0,
            gamma_star: 2.0,
            omega_c: 0.0,
            omega_qd: 0.0,
            eta_in: 1.0,
        };
        let gen = LindbladGenerator::lab(&p, 0.0, C64::new(0.0, 0.0), 2).unwrap();
        let d = gen.space.dim();
        let rho = random_hermitian(d, 3);
        let drho = gen.apply(&rho, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for i in 0..d {
            assert!(drho[(i, i)].norm() < 1e-12);
        }
    }
}
