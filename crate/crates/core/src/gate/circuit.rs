use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const H: usize = 0;
pub const V: usize = 1;

/// Linear-optical element acting on spatial modes; every spatial mode
/// carries an H and a V polarization mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Element {
    /// Polarizing beam splitter: H stays in its spatial mode, V swaps.
    Pbs { a: usize, b: usize },
    /// Half-wave plate with fast axis at `theta` (rad) from H.
    Hwp { mode: usize, theta: f64 },
    /// Polarization-independent beam splitter. A photon in `a` stays with
    /// amplitude √(1−η) and moves to `b` with √η; a photon in `b` moves to
    /// `a` with −√η.
    Bs { a: usize, b: usize, reflectivity: f64 },
    Swap { a: usize, b: usize },
    Phase { mode: usize, phi: f64 },
}

impl Element {
    fn modes(&self) -> Vec<usize> {
        match *self {
            Element::Pbs { a, b } | Element::Bs { a, b, .. } | Element::Swap { a, b } => vec![a, b],
            Element::Hwp { mode, .. } | Element::Phase { mode, .. } => vec![mode],
        }
    }

    /// Single-photon transfer matrix on `2 · n_spatial` modes, indexed
    /// `2 · spatial + polarization`. Column = input mode.
    pub fn matrix(&self, n_spatial: usize) -> DMatrix<C64> {
        let n = 2 * n_spatial;
        let mut u = DMatrix::<C64>::identity(n, n);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match *self {
            Element::Pbs { a, b } => {
                let (av, bv) = (2 * a + V, 2 * b + V);
                u[(av, av)] = zero;
                u[(bv, bv)] = zero;
                u[(bv, av)] = one;
                u[(av, bv)] = one;
            }
            Element::Hwp { mode, theta } => {
                let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
                let (h, v) = (2 * mode + H, 2 * mode + V);
                u[(h, h)] = C64::new(c, 0.0);
                u[(v, h)] = C64::new(s, 0.0);
                u[(h, v)] = C64::new(s, 0.0);
                u[(v, v)] = C64::new(-c, 0.0);
            }
            Element::Bs { a, b, reflectivity } => {
                let t = C64::new((1.0 - reflectivity).sqrt(), 0.0);
                let r = C64::new(reflectivity.sqrt(), 0.0);
                for p in [H, V] {
                    let (x, y) = (2 * a + p, 2 * b + p);
                    u[(x, x)] = t;
                    u[(y, x)] = r;
                    u[(x, y)] = -r;
                    u[(y, y)] = t;
                }
            }
            Element::Swap { a, b } => {
                for p in [H, V] {
                    let (x, y) = (2 * a + p, 2 * b + p);
                    u[(x, x)] = zero;
                    u[(y, y)] = zero;
                    u[(x, y)] = one;
                    u[(y, x)] = one;
                }
            }
            Element::Phase { mode, phi } => {
                let e = C64::from_polar(1.0, phi);
                u[(2 * mode + H, 2 * mode + H)] = e;
                u[(2 * mode + V, 2 * mode + V)] = e;
            }
        }
        u
    }
}

/// Ordered element list with marked input and output spatial modes
/// (control first, target second).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalCircuit {
    pub n_spatial: usize,
    pub elements: Vec<Element>,
    pub inputs: (usize, usize),
    pub outputs: (usize, usize),
}

/// Deviation from unitarity tolerated for any element or the whole circuit.
pub const UNITARITY_TOL: f64 = 1e-12;

fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl OpticalCircuit {
    /// Post-selected CNOT with three 1/3 beam splitters. Spatial modes:
    /// 0, 1 control rails; 2, 3 target rails; 4, 5 vacuum ancillas.
    /// Polarization is turned into path at the input and back at the output.
    pub fn cnot() -> Self {
        use std::f64::consts::FRAC_PI_4;
        let third = 1.0 / 3.0;
        let elements = vec![
            Element::Pbs { a: 0, b: 1 },
            Element::Hwp { mode: 1, theta: FRAC_PI_4 },
            Element::Pbs { a: 2, b: 3 },
            Element::Hwp { mode: 3, theta: FRAC_PI_4 },
            Element::Bs { a: 2, b: 3, reflectivity: 0.5 },
            Element::Bs { a: 3, b: 1, reflectivity: third },
            Element::Swap { a: 1, b: 3 },
            Element::Bs { a: 0, b: 4, reflectivity: third },
            Element::Swap { a: 0, b: 4 },
            Element::Bs { a: 2, b: 5, reflectivity: third },
            Element::Swap { a: 2, b: 5 },
            Element::Bs { a: 3, b: 2, reflectivity: 0.5 },
            Element::Hwp { mode: 1, theta: FRAC_PI_4 },
            Element::Pbs { a: 0, b: 1 },
            Element::Hwp { mode: 3, theta: FRAC_PI_4 },
            Element::Pbs { a: 2, b: 3 },
        ];
        OpticalCircuit { n_spatial: 6, elements, inputs: (0, 2), outputs: (0, 2) }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_spatial;
        let (i0, i1) = self.inputs;
        let (o0, o1) = self.outputs;
        if i0 >= n || i1 >= n || o0 >= n || o1 >= n {
            return Err(Error::Domain(format!("marked mode outside 0..{n}")));
        }
        if i0 == i1 || o0 == o1 {
            return Err(Error::Domain("marked modes must be distinct".into()));
        }
        for (k, e) in self.elements.iter().enumerate() {
            let modes = e.modes();
            if modes.iter().any(|&m| m >= n) || (modes.len() == 2 && modes[0] == modes[1]) {
                return Err(Error::Domain(format!("element {k} has invalid modes {modes:?}")));
            }
            if let Element::Bs { reflectivity, .. } = e {
                if !(0.0..=1.0).contains(reflectivity) {
                    return Err(Error::Domain(format!("element {k}: reflectivity {reflectivity} not in [0, 1]")));
                }
            }
            let err = unitarity_error(&e.matrix(n));
            if !(err <= UNITARITY_TOL) {
                return Err(Error::Domain(format!("element {k} is not unitary ({err:e})")));
            }
        }
        Ok(())
    }

    /// Composed single-photon transfer matrix.
    pub fn transfer_matrix(&self) -> Result<DMatrix<C64>> {
        self.validate()?;
        let n = 2 * self.n_spatial;
        let u = self.elements.iter().fold(DMatrix::<C64>::identity(n, n), |acc, e| e.matrix(self.n_spatial) * acc);
        let err = unitarity_error(&u);
        if !(err <= UNITARITY_TOL) {
            return Err(Error::Domain(format!("circuit is not unitary ({err:e})")));
        }
        Ok(u)
    }
}
