use super::*;
use std::collections::BTreeMap;

/// Second-quantized oracle: expand both creation operators through the
/// circuit and collect Fock amplitudes over (mode, label) pairs.
fn fock_oracle(circuit: &OpticalCircuit, input: &TwoPhotonInput) -> BTreeMap<((usize, usize), (usize, usize)), C64> {
    let u = circuit.transfer_matrix().unwrap();
    let n = u.nrows();
    let mut creators_c = Vec::new();
    let mut creators_t = Vec::new();
    let chi = [input.overlap.sqrt(), (1.0 - input.overlap).sqrt()];
    for m in 0..n {
        let c = u[(m, 2 * circuit.inputs.0)] * input.control[0] + u[(m, 2 * circuit.inputs.0 + 1)] * input.control[1];
        creators_c.push(((m, 0), c));
        let t = u[(m, 2 * circuit.inputs.1)] * input.target[0] + u[(m, 2 * circuit.inputs.1 + 1)] * input.target[1];
        for (label, w) in chi.iter().enumerate() {
            creators_t.push(((m, label), t * *w));
        }
    }
    // a†_x a†_y |0⟩: the normalized Fock state |1_x 1_y⟩ for x ≠ y and
    // √2 |2_x⟩ for x = y
    let mut state = BTreeMap::new();
    for &(x, a) in &creators_c {
        for &(y, b) in &creators_t {
            let key = if x <= y { (x, y) } else { (y, x) };
            let factor = if x == y { 2f64.sqrt() } else { 1.0 };
            *state.entry(key).or_insert(C64::new(0.0, 0.0)) += a * b * factor;
        }
    }
    state
}

fn max_abs<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, C>>(m: &nalgebra::Matrix<C64, R, C, S>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn basis(b: usize) -> Qubit {
    if b == 0 {
        horizontal()
    } else {
        vertical()
    }
}

#[test]
fn circuit_is_unitary() {
    let u = OpticalCircuit::cnot().transfer_matrix().unwrap();
    let err = max_abs(&(u.adjoint() * &u - DMatrix::<C64>::identity(12, 12)));
    assert!(err < 1e-12);
}

#[test]
fn ideal_truth_table() {
    let t = truth_table(1.0).unwrap();
    let ideal = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
    for r in 0..4 {
        for c in 0..4 {
            assert!((t.table[r][c] - ideal[r][c]).abs() < 1e-12, "{t:?}");
        }
        assert!((t.success_probability[r] - 1.0 / 9.0).abs() < 1e-12);
    }
    assert!((t.average_correct - 1.0).abs() < 1e-12);
}

#[test]
fn rows_are_normalized() {
    for k in 0..=10 {
        let t = truth_table(k as f64 / 10.0).unwrap();
        for row in t.table {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn matches_fock_enumeration() {
    let circuit = OpticalCircuit::cnot();
    for m in [0.0, 0.3, 0.5, 1.0] {
        for (c, t) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let input = TwoPhotonInput::new(basis(c), basis(t), m);
            let oracle = fock_oracle(&circuit, &input);
            let phi = output_amplitudes(&circuit, &input).unwrap();
            let (o0, o1) = circuit.outputs;
            let mut success = 0.0;
            for p in 0..2 {
                for i in 0..2 {
                    for q in 0..2 {
                        for j in 0..2 {
                            let x = (2 * o0 + p, i);
                            let y = (2 * o1 + q, j);
                            let key = if x <= y { (x, y) } else { (y, x) };
                            let expected = oracle.get(&key).copied().unwrap_or_default();
                            let got = phi[((p * 2 + i) * 2 + q) * 2 + j];
                            assert!((expected - got).norm() < 1e-12, "m = {m}, {c}{t}: {expected} vs {got}");
                            success += expected.norm_sqr();
                        }
                    }
                }
            }
            let out = run_gate(&circuit, &input).unwrap();
            assert!((out.success_probability - success).abs() < 1e-12);
        }
    }
}

#[test]
fn distinguishable_photons_do_not_flip_coherently() {
    let t = truth_table(0.0).unwrap();
    // control V: no interference, the target flips only with probability 1/3
    for (row, flipped) in [(2, 3), (3, 2)] {
        assert!((t.table[row][flipped] - 1.0 / 3.0).abs() < 1e-12, "{:?}", t.table);
        assert!((t.table[row][5 - flipped] - 2.0 / 3.0).abs() < 1e-12, "{:?}", t.table);
    }
    // control H rows are untouched for any overlap
    for m in [0.0, 0.5] {
        let t = truth_table(m).unwrap();
        assert!((t.table[0][0] - 1.0).abs() < 1e-12 && (t.table[1][1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn flip_probability_follows_overlap() {
    let t = truth_table(0.5).unwrap();
    assert!((t.table[2][3] - 0.5).abs() < 1e-12 && (t.table[3][2] - 0.5).abs() < 1e-12);
    assert!((t.average_correct - 0.75).abs() < 1e-12);
    for k in 0..=10 {
        let m = k as f64 / 10.0;
        let t = truth_table(m).unwrap();
        assert!((t.table[2][3] - 1.0 / (3.0 - 2.0 * m)).abs() < 1e-12);
    }
}

#[test]
fn bell_state_correlations() {
    let s = FRAC_1_SQRT_2;
    let v = [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
    let phi_plus = Matrix4::from_fn(|i, j| v[i] * v[j].conj());
    assert!((correlation_e(&phi_plus, Basis::HV).unwrap() - 1.0).abs() < 1e-12);
    assert!((correlation_e(&phi_plus, Basis::DA).unwrap() - 1.0).abs() < 1e-12);
    assert!((correlation_e(&phi_plus, Basis::RL).unwrap() + 1.0).abs() < 1e-12);

    let mut hh = Matrix4::<C64>::zeros();
    hh[(0, 0)] = C64::new(1.0, 0.0);
    assert!((correlation_e(&hh, Basis::HV).unwrap() - 1.0).abs() < 1e-12);
    assert!(correlation_e(&hh, Basis::DA).unwrap().abs() < 1e-12);
    assert!(correlation_e(&hh, Basis::RL).unwrap().abs() < 1e-12);
    assert!(correlation_e(&Matrix4::zeros(), Basis::HV).is_err());
}

#[test]
fn fidelity_closed_forms() {
    assert_eq!(bell_fidelity(1.0, 1.0, -1.0).unwrap(), 1.0);
    assert_eq!(bell_fidelity(1.0, 0.0, 0.0).unwrap(), 0.5);
    assert!((fidelity_vs_overlap(0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!((fidelity_vs_overlap(0.76).unwrap() - 0.7097).abs() < 1e-4);
    assert!(fidelity_vs_overlap(1.2).is_err());
}

#[test]
fn simulation_matches_fidelity_formula() {
    for k in 0..=20 {
        let m = k as f64 / 20.0;
        let sim = simulated_bell_fidelity(m).unwrap();
        assert!((sim - fidelity_vs_overlap(m).unwrap()).abs() < 1e-9, "m = {m}: {sim}");
    }
}

#[test]
fn output_states_are_physical() {
    let circuit = OpticalCircuit::cnot();
    for m in [0.0, 0.4, 1.0] {
        let out = run_gate(&circuit, &TwoPhotonInput::new(diagonal(), horizontal(), m)).unwrap();
        assert!((out.rho.trace().re - 1.0).abs() < 1e-12);
        assert!(max_abs(&(out.rho - out.rho.adjoint())) < 1e-12);
        assert!(out.min_eigenvalue() > -1e-12);
    }
}

#[test]
fn outputs_are_linear_in_the_inputs() {
    use rand::{Rng, SeedableRng};
    let circuit = OpticalCircuit::cnot();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let random_qubit = |rng: &mut rand_chacha::ChaCha8Rng| {
        let a = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let b = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        [a / n, b / n]
    };
    for _ in 0..10 {
        let c = random_qubit(&mut rng);
        let t = random_qubit(&mut rng);
        let m = rng.random::<f64>();
        let whole = output_amplitudes(&circuit, &TwoPhotonInput::new(c, t, m)).unwrap();
        let mut sum = [C64::new(0.0, 0.0); 16];
        for (bc, wc) in [(0, c[0]), (1, c[1])] {
            for (bt, wt) in [(0, t[0]), (1, t[1])] {
                let part = output_amplitudes(&circuit, &TwoPhotonInput::new(basis(bc), basis(bt), m)).unwrap();
                for k in 0..16 {
                    sum[k] += wc * wt * part[k];
                }
            }
        }
        for k in 0..16 {
            assert!((whole[k] - sum[k]).norm() < 1e-12);
        }
    }
}

#[test]
fn invalid_inputs() {
    let circuit = OpticalCircuit::cnot();
    let bad = TwoPhotonInput::new([C64::new(1.0, 0.0), C64::new(1.0, 0.0)], horizontal(), 1.0);
    assert!(run_gate(&circuit, &bad).is_err());
    assert!(run_gate(&circuit, &TwoPhotonInput::new(horizontal(), horizontal(), 1.5)).is_err());
    let mut c = OpticalCircuit::cnot();
    c.elements.push(Element::Bs { a: 0, b: 9, reflectivity: 0.5 });
    assert!(c.validate().is_err());
    // everything routed away from the marked outputs
    let blocked = OpticalCircuit {
        n_spatial: 4,
        elements: vec![Element::Swap { a: 0, b: 1 }, Element::Swap { a: 2, b: 3 }],
        inputs: (0, 2),
        outputs: (0, 2),
    };
    assert_eq!(
        run_gate(&blocked, &TwoPhotonInput::new(horizontal(), horizontal(), 1.0)),
        Err(Error::DegeneratePostSelection)
    );
}
