//! Operators and states on the (two-level QD) ⊗ (truncated Fock) space.
//!
//! Basis ordering is `|qd⟩ ⊗ |n⟩` with ground = 0, excited = 1 and the
//! photon number ascending, i.e. `index = qd * (n_max + 1) + n`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Domain("Fock truncation n_max must be >= 1".into()));
        }
        Ok(FockSpace { n_max })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    #[inline]
    pub fn index(&self, excited: bool, n: usize) -> usize {
        usize::from(excited) * (self.n_max + 1) + n
    }

    /// Cavity annihilation operator `a`.
    pub fn annihilation(&self) -> SparseOp {
        let mut entries = Vec::with_capacity(2 * self.n_max);
        for qd in [false, true] {
            for n in 1..=self.n_max {
                entries.push((self.index(qd, n - 1), self.index(qd, n), C64::new((n as f64).sqrt(), 0.0)));
            }
        }
        SparseOp { dim: self.dim(), entries }
    }

    /// QD lowering operator `σ = |ground⟩⟨excited|`.
    pub fn lowering(&self) -> SparseOp {
        let entries = (0..=self.n_max)
            .map(|n| (self.index(false, n), self.index(true, n), C64::new(1.0, 0.0)))
            .collect();
        SparseOp { dim: self.dim(), entries }
    }

    /// Photon-number operator `a†a`.
    pub fn number(&self) -> SparseOp {
        let entries = [false, true]
            .iter()
            .flat_map(|&qd| (1..=self.n_max).map(move |n| (qd, n)))
            .map(|(qd, n)| (self.index(qd, n), self.index(qd, n), C64::new(n as f64, 0.0)))
            .collect();
        SparseOp { dim: self.dim(), entries }
    }

    /// Excited-state projector `σ†σ`.
    pub fn excited_projector(&self) -> SparseOp {
        let entries = (0..=self.n_max)
            .map(|n| (self.index(true, n), self.index(true, n), C64::new(1.0, 0.0)))
            .collect();
        SparseOp { dim: self.dim(), entries }
    }
}

/// Sparse operator stored as `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        SparseOp { dim, entries: Vec::new() }
    }

    pub fn adjoint(&self) -> SparseOp {
        SparseOp {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> SparseOp {
        SparseOp { dim: self.dim, entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect() }
    }

    /// Sum of two operators; entries are merged and zeros dropped.
    pub fn add(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim);
        let mut dense = self.to_dense();
        for &(r, c, v) in &other.entries {
            dense[(r, c)] += v;
        }
        SparseOp::from_dense(&dense)
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &SparseOp) -> SparseOp {
        SparseOp::from_dense(&(self.to_dense() * other.to_dense()))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> SparseOp {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((r, c, v));
                }
            }
        }
        SparseOp { dim: m.nrows(), entries }
    }

    /// `out += s * self * rho`
    pub fn left_mul_acc(&self, rho: &DMatrix<C64>, s: C64, out: &mut DMatrix<C64>) {
        let d = self.dim;
        for &(r, k, v) in &self.entries {
            let w = v * s;
            for j in 0..d {
                out[(r, j)] += w * rho[(k, j)];
            }
        }
    }

    /// `out += s * rho * self`
    pub fn right_mul_acc(&self, rho: &DMatrix<C64>, s: C64, out: &mut DMatrix<C64>) {
        let d = self.dim;
        for &(k, c, v) in &self.entries {
            let w = v * s;
            for i in 0..d {
                out[(i, c)] += w * rho[(i, k)];
            }
        }
    }

    /// `out += s * self * rho * self†`
    pub fn sandwich_acc(&self, rho: &DMatrix<C64>, s: C64, out: &mut DMatrix<C64>) {
        for &(i, k, lik) in &self.entries {
            let w = lik * s;
            for &(j, l, ljl) in &self.entries {
                out[(i, j)] += w * rho[(k, l)] * ljl.conj();
            }
        }
    }

    /// `Tr(self · rho)`
    pub fn expect(&self, rho: &DMatrix<C64>) -> C64 {
        self.entries.iter().map(|&(r, c, v)| v * rho[(c, r)]).sum()
    }
}

/// Density matrix on the QD ⊗ Fock space.
///
/// `displacement` is a classical coherent amplitude α of the cavity field:
/// the physical annihilation operator is `α + a`, where `a` acts on the
/// stored matrix. It is zero in the laboratory frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub space: FockSpace,
    pub rho: DMatrix<C64>,
    pub displacement: C64,
}

impl DensityMatrix {
    pub fn basis_state(space: FockSpace, excited: bool, n: usize) -> Self {
        let mut rho = DMatrix::zeros(space.dim(), space.dim());
        let i = space.index(excited, n);
        rho[(i, i)] = C64::new(1.0, 0.0);
        DensityMatrix { space, rho, displacement: C64::new(0.0, 0.0) }
    }

    /// `|ground, 0⟩⟨ground, 0|`
    pub fn vacuum(space: FockSpace) -> Self {
        Self::basis_state(space, false, 0)
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// Largest entry of `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.space.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..=i {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `⟨σ†σ⟩`
    pub fn excited_population(&self) -> f64 {
        self.space.excited_projector().expect(&self.rho).re
    }

    /// `⟨σ⟩`
    pub fn qd_coherence(&self) -> C64 {
        self.space.lowering().expect(&self.rho)
    }

    /// Expectation of the physical cavity field `⟨α + a⟩`.
    pub fn cavity_amplitude(&self) -> C64 {
        self.displacement + self.fluctuation_amplitude()
    }

    /// `⟨a⟩` of the stored (displaced) state alone.
    pub fn fluctuation_amplitude(&self) -> C64 {
        self.space.annihilation().expect(&self.rho)
    }

    /// `⟨a†a⟩` of the stored (displaced) state alone.
    pub fn fluctuation_number(&self) -> f64 {
        self.space.number().expect(&self.rho).re
    }

    /// Physical intracavity photon number including the displacement.
    pub fn photon_number(&self) -> f64 {
        let alpha = self.displacement;
        alpha.norm_sqr() + 2.0 * (alpha.conj() * self.fluctuation_amplitude()).re + self.fluctuation_number()
    }

    /// Population of the highest Fock level kept; a truncation diagnostic.
    pub fn top_fock_population(&self) -> f64 {
        let n = self.space.n_max;
        (self.rho[(self.space.index(false, n), self.space.index(false, n))]
            + self.rho[(self.space.index(true, n), self.space.index(true, n))])
        .re
    }

    /// Column-major vectorisation, matching the superoperator layout.
    pub fn to_vec(&self) -> DVector<C64> {
        DVector::from_column_slice(self.rho.as_slice())
    }

    pub fn from_vec(space: FockSpace, v: &[C64], displacement: C64) -> Self {
        let d = space.dim();
        DensityMatrix { space, rho: DMatrix::from_column_slice(d, d, v), displacement }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_of_truncated_ladder() {
        let s = FockSpace::new(4).unwrap();
        let a = s.annihilation().to_dense();
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        // [a, a†] = 1 except at the truncation edge
        for qd in [false, true] {
            for n in 0..4 {
                let i = s.index(qd, n);
                assert!((comm[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-14);
            }
        }
        let n_op = s.number().to_dense();
        assert!((a.adjoint() * &a - n_op).norm() < 1e-14);
    }

    #[test]
    fn lowering_squares_to_zero() {
        let s = FockSpace::new(3).unwrap();
        let sm = s.lowering();
        assert!(sm.mul(&sm).entries.is_empty());
        let proj = sm.adjoint().mul(&sm).to_dense();
        assert!((proj - s.excited_projector().to_dense()).norm() < 1e-15);
    }

    #[test]
    fn sparse_products_match_dense() {
        let s = FockSpace::new(3).unwrap();
        let d = s.dim();
        let a = s.annihilation().add(&s.lowering().scale(C64::new(0.3, -0.2)));
        let rho = DMatrix::from_fn(d, d, |i, j| C64::new((i * 7 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02));
        let ad = a.to_dense();
        let one = C64::new(1.0, 0.0);
        let mut out = DMatrix::zeros(d, d);
        a.left_mul_acc(&rho, one, &mut out);
        assert!((&out - &ad * &rho).norm() < 1e-13);
        let mut out = DMatrix::zeros(d, d);
        a.right_mul_acc(&rho, one, &mut out);
        assert!((&out - &rho * &ad).norm() < 1e-13);
        let mut out = DMatrix::zeros(d, d);
        a.sandwich_acc(&rho, one, &mut out);
        assert!((&out - &ad * &rho * ad.adjoint()).norm() < 1e-13);
        assert!((a.expect(&rho) - (&ad * &rho).trace()).norm() < 1e-13);
    }

    #[test]
    fn rejects_zero_truncation() {
        assert!(FockSpace::new(0).is_err());
    }
}
