//! Linear-optical CNOT with two partially distinguishable photons.

mod circuit;

pub use circuit::{Element, OpticalCircuit, UNITARITY_TOL};

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Polarization qubit amplitudes (H, V).
pub type Qubit = [C64; 2];

pub fn horizontal() -> Qubit {
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

pub fn vertical() -> Qubit {
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
}

/// (H + V)/√2.
pub fn diagonal() -> Qubit {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonInput {
    pub control: Qubit,
    pub target: Qubit,
    /// Mean wavepacket overlap of the two photons.
    pub overlap: f64,
}

impl TwoPhotonInput {
    pub fn new(control: Qubit, target: Qubit, overlap: f64) -> Self {
        TwoPhotonInput { control, target, overlap }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, q) in [("control", self.control), ("target", self.target)] {
            let norm = q[0].norm_sqr() + q[1].norm_sqr();
            if !((norm - 1.0).abs() <= 1e-12) {
                return Err(Error::Domain(format!("{name} qubit norm² = {norm}")));
            }
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Domain(format!("overlap {} not in [0, 1]", self.overlap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    /// Post-selected polarization state, basis HH, HV, VH, VV
    /// (control ⊗ target).
    pub rho: Matrix4<C64>,
    pub success_probability: f64,
    /// Diagonal of `rho`.
    pub probabilities: [f64; 4],
}

impl GateOutcome {
    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_fn(8, 8, |i, j| {
            let (a, b) = (self.rho[(i % 4, j % 4)].re, self.rho[(i % 4, j % 4)].im);
            match (i < 4, j < 4) {
                (true, true) | (false, false) => a,
                (true, false) => -b,
                (false, true) => b,
            }
        });
        SymmetricEigen::new(m).eigenvalues.min()
    }
}

/// Unnormalized amplitudes of the post-selected events, indexed
/// `[p, i, q, j]` with `p`, `q` the polarizations at the control and target
/// outputs and `i`, `j` the internal wavepacket labels there.
///
/// The control photon carries label 0; the target photon is
/// √M·|0⟩ + √(1−M)·|1⟩, so only the label-0 part interferes.
pub fn output_amplitudes(circuit: &OpticalCircuit, input: &TwoPhotonInput) -> Result<[C64; 16]> {
    input.validate()?;
    let u = circuit.transfer_matrix()?;
    let n = 2 * circuit.n_spatial;
    let propagate = |spatial: usize, q: &Qubit| -> Vec<C64> {
        (0..n).map(|m| u[(m, 2 * spatial)] * q[0] + u[(m, 2 * spatial + 1)] * q[1]).collect()
    };
    let c = propagate(circuit.inputs.0, &input.control);
    let t = propagate(circuit.inputs.1, &input.target);
    let chi = [C64::new(input.overlap.sqrt(), 0.0), C64::new((1.0 - input.overlap).sqrt(), 0.0)];
    let (o0, o1) = circuit.outputs;
    let mut phi = [C64::new(0.0, 0.0); 16];
    for p in 0..2 {
        for i in 0..2 {
            for q in 0..2 {
                for j in 0..2 {
                    let direct = if i == 0 { c[2 * o0 + p] * t[2 * o1 + q] * chi[j] } else { C64::new(0.0, 0.0) };
                    let exchanged = if j == 0 { t[2 * o0 + p] * chi[i] * c[2 * o1 + q] } else { C64::new(0.0, 0.0) };
                    phi[((p * 2 + i) * 2 + q) * 2 + j] = direct + exchanged;
                }
            }
        }
    }
    Ok(phi)
}

/// Runs two photons through `circuit`, keeps events with one photon in each
/// marked output and traces out the wavepacket labels.
pub fn run_gate(circuit: &OpticalCircuit, input: &TwoPhotonInput) -> Result<GateOutcome> {
    let phi = output_amplitudes(circuit, input)?;
    let success: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
    if !(success > 1e-300) {
        return Err(Error::DegeneratePostSelection);
    }
    let mut rho = Matrix4::<C64>::zeros();
    for p in 0..2 {
        for q in 0..2 {
            for pp in 0..2 {
                for qq in 0..2 {
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..2 {
                        for j in 0..2 {
                            s += phi[((p * 2 + i) * 2 + q) * 2 + j] * phi[((pp * 2 + i) * 2 + qq) * 2 + j].conj();
                        }
                    }
                    rho[(2 * p + q, 2 * pp + qq)] = s / success;
                }
            }
        }
    }
    let probabilities = [rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re, rho[(3, 3)].re];
    Ok(GateOutcome { rho, success_probability: success, probabilities })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    /// Rows: inputs HH, HV, VH, VV. Columns: outputs in the same order.
    pub table: [[f64; 4]; 4],
    /// Mean over inputs of the probability of the ideal CNOT output.
    pub average_correct: f64,
    pub success_probability: [f64; 4],
}

const IDEAL_OUTPUT: [usize; 4] = [0, 1, 3, 2];

/// Truth table of the built-in CNOT at overlap `m`.
pub fn truth_table(m: f64) -> Result<TruthTable> {
    let circuit = OpticalCircuit::cnot();
    let mut table = [[0.0; 4]; 4];
    let mut success = [0.0; 4];
    for (row, (c, t)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let q = |b: usize| if b == 0 { horizontal() } else { vertical() };
        let out = run_gate(&circuit, &TwoPhotonInput::new(q(c), q(t), m))?;
        table[row] = out.probabilities;
        success[row] = out.success_probability;
    }
    let average_correct = (0..4).map(|r| table[r][IDEAL_OUTPUT[r]]).sum::<f64>() / 4.0;
    Ok(TruthTable { table, average_correct, success_probability: success })
}

/// Measurement basis for two-photon polarization correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Basis {
    HV,
    DA,
    RL,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::RL];

    /// The two basis states (α, β).
    pub fn states(self) -> (Qubit, Qubit) {
        let s = FRAC_1_SQRT_2;
        match self {
            Basis::HV => (horizontal(), vertical()),
            Basis::DA => ([C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-s, 0.0)]),
            Basis::RL => ([C64::new(s, 0.0), C64::new(0.0, -s)], [C64::new(s, 0.0), C64::new(0.0, s)]),
        }
    }
}

fn projected(rho: &Matrix4<C64>, a: &Qubit, b: &Qubit) -> f64 {
    let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut s = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            s += v[i].conj() * rho[(i, j)] * v[j];
        }
    }
    s.re
}

/// Polarization correlation `(A_αα + A_ββ − A_αβ − A_βα) / Σ A` of a
/// two-photon state.
pub fn correlation_e(rho: &Matrix4<C64>, basis: Basis) -> Result<f64> {
    let (a, b) = basis.states();
    let aa = projected(rho, &a, &a);
    let bb = projected(rho, &b, &b);
    let ab = projected(rho, &a, &b);
    let ba = projected(rho, &b, &a);
    let total = aa + bb + ab + ba;
    if !(total.abs() > 1e-300) {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((aa + bb - ab - ba) / total)
}

/// Fidelity to Φ⁺ from correlation values.
pub fn bell_fidelity(e_hv: f64, e_da: f64, e_rl: f64) -> Result<f64> {
    for e in [e_hv, e_da, e_rl] {
        if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&e) {
            return Err(Error::Domain(format!("correlation {e} not in [-1, 1]")));
        }
    }
    Ok((1.0 + e_hv + e_da - e_rl) / 4.0)
}

/// Closed-form Bell fidelity of the gate output for control D, target H.
pub fn fidelity_vs_overlap(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Domain(format!("overlap {m} not in [0, 1]")));
    }
    Ok((1.0 + m) / (2.0 * (2.0 - m)))
}

/// Bell fidelity of the simulated gate output for control D, target H.
pub fn simulated_bell_fidelity(m: f64) -> Result<f64> {
    let out = run_gate(&OpticalCircuit::cnot(), &TwoPhotonInput::new(diagonal(), horizontal(), m))?;
    let e = |b| correlation_e(&out.rho, b);
    bell_fidelity(e(Basis::HV)?, e(Basis::DA)?, e(Basis::RL)?)
}

#[cfg(test)]
mod tests;
