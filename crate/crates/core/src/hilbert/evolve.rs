//! Time integration of the master equation with a time-dependent drive.
//!
//! Adaptive Dormand–Prince 5(4). The integrated vector holds `vec(ρ)`, the
//! classical displacement α (displaced frame only) and three running
//! integrals: reflected photons, their coherent part and incident photons.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::generator::{apply_with, Frame, LindbladGenerator};
use super::ops::{DensityMatrix, SparseOp};
use super::HilbertConfig;
use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrated photon numbers since the start of a propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhotonCounts {
    pub reflected: f64,
    pub reflected_coherent: f64,
    pub incident: f64,
}

/// States sampled on a time grid, plus integrator diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub counts: Vec<PhotonCounts>,
    /// Largest |Tr ρ − 1| seen on any accepted step.
    pub max_trace_drift: f64,
    /// Largest entry of |ρ − ρ†| seen on any accepted step.
    pub max_hermiticity_error: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_counts(&self) -> PhotonCounts {
        *self.counts.last().expect("trajectory has at least one sample")
    }

    /// CSV with columns `t,p_excited,n_photon,re_a,im_a`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p_excited,n_photon,re_a,im_a\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            let a = s.cavity_amplitude();
            out.push_str(&format!("{t},{},{},{},{}\n", s.excited_population(), s.photon_number(), a.re, a.im));
        }
        out
    }
}

/// Stateful adaptive propagator; [`evolve`] is the one-shot wrapper.
pub struct Propagator<'a> {
    gen: &'a LindbladGenerator,
    drive: &'a dyn Fn(f64) -> C64,
    cfg: HilbertConfig,
    heff: SparseOp,
    drive_op: SparseOp,
    drive_op_adj: SparseOp,
    number: SparseOp,
    t: f64,
    h: f64,
    y: Vec<C64>,
    k: [Vec<C64>; 7],
    scratch: Vec<C64>,
    rho_buf: DMatrix<C64>,
    out_buf: DMatrix<C64>,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl<'a> Propagator<'a> {
    pub fn new(
        gen: &'a LindbladGenerator,
        drive: &'a dyn Fn(f64) -> C64,
        rho0: &DensityMatrix,
        t0: f64,
        cfg: &HilbertConfig,
    ) -> Result<Self> {
        if rho0.space != gen.space {
            return Err(Error::Domain("initial state and generator use different Fock spaces".into()));
        }
        let d = gen.space.dim();
        let n = d * d + 4;
        let mut y = vec![ZERO; n];
        y[..d * d].copy_from_slice(rho0.rho.as_slice());
        y[d * d] = if gen.frame == Frame::Displaced { rho0.displacement } else { ZERO };
        let (x, _) = gen.drive_operator(ZERO, ZERO);
        let drive_op = x.clone();
        let p = &gen.params;
        let rate_scale = p.kappa() + p.gamma() + p.g + p.gamma_sp + 1.0;
        Ok(Propagator {
            gen,
            drive,
            cfg: *cfg,
            heff: gen.effective_static(),
            drive_op_adj: drive_op.adjoint(),
            drive_op,
            number: gen.space.number(),
            t: t0,
            h: 1e-3 / rate_scale,
            y,
            k: std::array::from_fn(|_| vec![ZERO; n]),
            scratch: vec![ZERO; n],
            rho_buf: DMatrix::zeros(d, d),
            out_buf: DMatrix::zeros(d, d),
            max_trace_drift: 0.0,
            max_hermiticity_error: 0.0,
            accepted_steps: 0,
            rejected_steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> DensityMatrix {
        let d = self.gen.space.dim();
        let alpha = if self.gen.frame == Frame::Displaced { self.y[d * d] } else { ZERO };
        DensityMatrix::from_vec(self.gen.space, &self.y[..d * d], alpha)
    }

    pub fn counts(&self) -> PhotonCounts {
        let m = self.gen.space.dim().pow(2);
        PhotonCounts { reflected: self.y[m + 1].re, reflected_coherent: self.y[m + 2].re, incident: self.y[m + 3].re }
    }

    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        let gen = self.gen;
        let d = gen.space.dim();
        let m = d * d;
        let b = (self.drive)(t);
        let alpha = y[m];
        self.rho_buf.as_mut_slice().copy_from_slice(&y[..m]);
        let rho = &self.rho_buf;

        apply_with(&self.heff, gen.collapse_operators(), rho, &mut self.out_buf);
        let (_, eps) = gen.drive_operator(b, alpha);
        // −i[ε X† + ε* X, ρ]
        let mi = C64::new(0.0, -1.0);
        if eps != ZERO {
            self.drive_op_adj.left_mul_acc(rho, mi * eps, &mut self.out_buf);
            self.drive_op.left_mul_acc(rho, mi * eps.conj(), &mut self.out_buf);
            self.drive_op_adj.right_mul_acc(rho, -mi * eps, &mut self.out_buf);
            self.drive_op.right_mul_acc(rho, -mi * eps.conj(), &mut self.out_buf);
        }
        dy[..m].copy_from_slice(self.out_buf.as_slice());

        dy[m] = if gen.frame == Frame::Displaced { gen.displacement_rate(alpha, b) } else { ZERO };

        // output fluxes
        let p = &gen.params;
        let kt = p.kappa_top.sqrt();
        let background = (1.0 - p.eta_in) * b.norm_sqr();
        let beta_out = b * p.eta_in.sqrt() - if gen.frame == Frame::Displaced { alpha * kt } else { ZERO };
        let c = gen.annihilation().expect(rho);
        let cc = self.number.expect(rho).re;
        let total = background + beta_out.norm_sqr() - 2.0 * kt * (beta_out.conj() * c).re + p.kappa_top * cc;
        let coherent = background + (beta_out - c * kt).norm_sqr();
        dy[m + 1] = C64::new(total, 0.0);
        dy[m + 2] = C64::new(coherent, 0.0);
        dy[m + 3] = C64::new(b.norm_sqr(), 0.0);
    }

    fn error_norm(&self, y_new: &[C64], err: &[C64]) -> f64 {
        let (rtol, atol) = (self.cfg.ode_rtol, self.cfg.ode_atol);
        let mut acc = 0.0;
        for ((a, b), e) in self.y.iter().zip(y_new).zip(err) {
            let sre = atol + rtol * a.re.abs().max(b.re.abs());
            let sim = atol + rtol * a.im.abs().max(b.im.abs());
            acc += (e.re / sre).powi(2) + (e.im / sim).powi(2);
        }
        (acc / (2 * self.y.len()) as f64).sqrt()
    }

    /// Advances the state exactly to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if t_end < self.t {
            return Err(Error::Domain(format!("cannot integrate backwards from {} to {t_end}", self.t)));
        }
        let n = self.y.len();
        let d = self.gen.space.dim();
        let mut k = std::mem::take(&mut self.k);
        let mut scratch = std::mem::take(&mut self.scratch);
        let mut y_new = vec![ZERO; n];
        let mut err = vec![ZERO; n];
        let mut have_k1 = false;

        let result = loop {
            let remaining = t_end - self.t;
            if remaining <= 1e-15 * self.t.abs().max(1.0) {
                self.t = t_end;
                break Ok(());
            }
            let mut h = self.h.min(remaining);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h < 1e-13 * self.t.abs().max(1e-3) {
                break Err(Error::Integration { time: self.t, reason: format!("step size underflow (h = {h:.3e})") });
            }
            let t = self.t;
            let y = self.y.clone();
            if !have_k1 {
                self.rhs(t, &y, &mut k[0]);
                have_k1 = true;
            }
            let stages: [(f64, &[f64]); 5] = [
                (C2, &[A21]),
                (C3, &[A31, A32]),
                (C4, &[A41, A42, A43]),
                (C5, &[A51, A52, A53, A54]),
                (1.0, &[A61, A62, A63, A64, A65]),
            ];
            for (s, (c, a)) in stages.iter().enumerate() {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, aj) in a.iter().enumerate() {
                        acc += k[j][i] * (h * aj);
                    }
                    scratch[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s + 1);
                let _ = head;
                self.rhs(t + c * h, &scratch, &mut tail[0]);
            }
            for i in 0..n {
                y_new[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * h;
            }
            let (head, tail) = k.split_at_mut(6);
            self.rhs(t + h, &y_new, &mut tail[0]);
            for i in 0..n {
                err[i] = (head[0][i] * E1
                    + head[2][i] * E3
                    + head[3][i] * E4
                    + head[4][i] * E5
                    + head[5][i] * E6
                    + tail[0][i] * E7)
                    * h;
            }
            let en = self.error_norm(&y_new, &err);
            if !en.is_finite() {
                break Err(Error::Integration { time: t, reason: "non-finite state".into() });
            }
            if en <= 1.0 {
                self.t = if last { t_end } else { t + h };
                std::mem::swap(&mut self.y, &mut y_new);
                // FSAL: the last stage is the first of the next step
                k.swap(0, 6);
                self.accepted_steps += 1;
                self.check_state(d);
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    self.h = h * fac;
                } else {
                    self.h = self.h.max(h * fac.min(1.0));
                }
            } else {
                self.rejected_steps += 1;
                self.h = h * (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
            }
        };
        self.k = k;
        self.scratch = scratch;
        result
    }

    fn check_state(&mut self, d: usize) {
        let mut tr = ZERO;
        let mut herm = 0.0f64;
        for i in 0..d {
            tr += self.y[i + i * d];
            for j in 0..i {
                herm = herm.max((self.y[i + j * d] - self.y[j + i * d].conj()).norm());
            }
            herm = herm.max(self.y[i + i * d].im.abs());
        }
        self.max_trace_drift = self.max_trace_drift.max((tr - 1.0).norm());
        self.max_hermiticity_error = self.max_hermiticity_error.max(herm);
    }
}

/// Integrates from `t_grid[0]` and samples the state at every grid time.
pub fn evolve(
    gen: &LindbladGenerator,
    drive: &dyn Fn(f64) -> C64,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    cfg: &HilbertConfig,
) -> Result<Trajectory> {
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid("time grid"));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be ascending".into()));
    }
    let mut prop = Propagator::new(gen, drive, rho0, t_grid[0], cfg)?;
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut counts = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        prop.advance_to(t)?;
        times.push(t);
        states.push(prop.state());
        counts.push(prop.counts());
    }
    Ok(Trajectory {
        times,
        states,
        counts,
        max_trace_drift: prop.max_trace_drift,
        max_hermiticity_error: prop.max_hermiticity_error,
        accepted_steps: prop.accepted_steps,
        rejected_steps: prop.rejected_steps,
    })
}
