//! Long-run averages along a single trajectory: running least-squares
//! systems and Monte-Carlo checks of the forward/backward expectation
//! identities.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::forward::{lambda_gradients, lambda_td_errors};
use crate::sampling::Transition;

/// `(Σ z_jΔφ_jᵀ, Σ ρ_j r_j z_j)` in `O(np²)`.
pub fn lstd_running_sums(ts: &[Transition], lambda: f64, gamma: f64) -> (DMatrix<f64>, DVector<f64>) {
    let p = ts.first().map_or(0, |t| t.phi.len());
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    let mut z = DVector::zeros(p);
    let mut last_rho = 1.0;
    for t in ts {
        z *= gamma * lambda * last_rho;
        z += &t.phi;
        a.ger(1.0, &z, &t.delta_phi(gamma), 1.0);
        b.axpy(t.rho * t.reward, &z, 1.0);
        last_rho = t.rho;
    }
    (a, b)
}

/// `(Ã_n, b̃_n)` of the residual fit in `O(np²)`, adding at step `i` the
/// change of every `ψ_jψ_jᵀ` and `ψ_j y_j` caused by transition `i`.
pub fn residual_running_sums(ts: &[Transition], lambda: f64, gamma: f64) -> (DMatrix<f64>, DVector<f64>) {
    let p = ts.first().map_or(0, |t| t.phi.len());
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    let mut sq = 0.0;
    let mut dirs = DVector::zeros(p);
    let mut rets = 0.0;
    let mut last_rho = 1.0;
    for t in ts {
        let k = gamma * lambda * last_rho;
        sq = k * k * sq + 1.0;
        let dphi = t.delta_phi(gamma);
        a.ger(sq, &dphi, &dphi, 1.0);
        a.ger(k, &dphi, &dirs, 1.0);
        a.ger(k, &dirs, &dphi, 1.0);
        b.axpy(t.rho * t.reward * sq + k * rets, &dphi, 1.0);
        b.axpy(k * t.rho * t.reward, &dirs, 1.0);
        dirs *= k;
        dirs.axpy(sq, &dphi, 1.0);
        rets = k * rets + t.reward * t.rho * sq;
        last_rho = t.rho;
    }
    (a, b)
}

/// Outcome of one Monte-Carlo identity check.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// Sample average of the forward-view side.
    pub forward: Vec<f64>,
    /// Sample average of the backward-view side.
    pub backward: Vec<f64>,
    pub rel_error: f64,
    /// Batch-means estimate of the standard error of `rel_error`.
    pub rel_std_error: f64,
    pub tolerance: f64,
    /// Set when noise forced the tolerance above the requested one.
    pub widened: bool,
    pub pass: bool,
}

struct Accumulator {
    name: &'static str,
    fwd: DVector<f64>,
    bwd: DVector<f64>,
    batch: DVector<f64>,
    batch_diffs: Vec<DVector<f64>>,
    batch_len: usize,
    count: usize,
}

impl Accumulator {
    fn new(name: &'static str, dim: usize, batch_len: usize) -> Self {
        Accumulator {
            name,
            fwd: DVector::zeros(dim),
            bwd: DVector::zeros(dim),
            batch: DVector::zeros(dim),
            batch_diffs: Vec::new(),
            batch_len,
            count: 0,
        }
    }

    fn push(&mut self, fwd: &DVector<f64>, bwd: &DVector<f64>) {
        self.fwd += fwd;
        self.bwd += bwd;
        self.batch += fwd - bwd;
        self.count += 1;
        if self.count.is_multiple_of(self.batch_len) {
            let full = std::mem::replace(&mut self.batch, DVector::zeros(fwd.len()));
            self.batch_diffs.push(full / self.batch_len as f64);
        }
    }

    fn finish(self, tol: f64) -> IdentityCheck {
        let n = self.count.max(1) as f64;
        let fwd = self.fwd / n;
        let bwd = self.bwd / n;
        let scale = bwd.norm().max(1e-300);
        let rel_error = (&fwd - &bwd).norm() / scale;
        let m = self.batch_diffs.len();
        let rel_std_error = if m > 1 {
            let mean = self.batch_diffs.iter().fold(DVector::zeros(fwd.len()), |acc, d| acc + d) / m as f64;
            let var: f64 = self
                .batch_diffs
                .iter()
                .map(|d| (d - &mean).norm_squared())
                .sum::<f64>()
                / (m - 1) as f64;
            (var / m as f64).sqrt() / scale
        } else {
            f64::INFINITY
        };
        let noise_tol = 4.0 * rel_std_error;
        let widened = noise_tol > tol;
        let tolerance = tol.max(noise_tol);
        IdentityCheck {
            name: self.name,
            forward: fwd.iter().copied().collect(),
            backward: bwd.iter().copied().collect(),
            rel_error,
            rel_std_error,
            tolerance,
            widened,
            pass: rel_error <= tolerance,
        }
    }
}

/// Checks, as averages over `ts[burn_in .. len − tail]` for a fixed `omega`:
///
/// * `E[φ_i δ_i^λ] = E[z_i δ_i]`
/// * `E[g_i^λ φ_iᵀ] = E[γρ_i(1−λ) φ_{i+1} z_iᵀ]`
/// * `E[δ_i^λ g_i^λ] = E[δ_i ζ_i + d_i γρ_i(1−λ)φ_{i+1} − δ_i γρ_i(1−λ)φ_{i+1} c_i]`
///
/// The head is skipped so the backward traces forget their zero start and
/// the tail so the forward sums are not cut short by the trajectory end.
pub fn expectation_identities(
    ts: &[Transition],
    omega: &DVector<f64>,
    lambda: f64,
    gamma: f64,
    burn_in: usize,
    tail: usize,
    tol: f64,
) -> Vec<IdentityCheck> {
    let p = omega.len();
    let end = ts.len().saturating_sub(tail);
    let used = end.saturating_sub(burn_in).max(1);
    let batch_len = (used / 100).max(1);
    let fwd_err = lambda_td_errors(ts, omega, lambda, gamma);
    let fwd_grad = lambda_gradients(ts, lambda, gamma);

    let mut td = Accumulator::new("phi_delta", p, batch_len);
    let mut cross = Accumulator::new("grad_phi", p * p, batch_len);
    let mut resid = Accumulator::new("delta_grad", p, batch_len);

    let mut z = DVector::zeros(p);
    let mut c = 0.0;
    let mut zeta = DVector::zeros(p);
    let mut d = 0.0;
    let mut last_rho = 1.0;
    for (i, t) in ts[..end].iter().enumerate() {
        let k = gamma * lambda * last_rho;
        let delta = t.td_error(omega, gamma);
        let corr = gamma * t.rho * (1.0 - lambda);
        z *= k;
        z += &t.phi;
        c = 1.0 + k * k * c;
        zeta *= k;
        zeta.axpy(corr * c, &t.phi_next, 1.0);
        d = delta * c + k * d;
        last_rho = t.rho;
        if i < burn_in {
            continue;
        }
        td.push(&(&t.phi * fwd_err[i]), &(&z * delta));
        let gp = &fwd_grad[i] * t.phi.transpose();
        let bp = &t.phi_next * z.transpose() * corr;
        cross.push(
            &DVector::from_column_slice(gp.as_slice()),
            &DVector::from_column_slice(bp.as_slice()),
        );
        let back = &zeta * delta + &t.phi_next * (corr * (d - delta * c));
        resid.push(&(&fwd_grad[i] * fwd_err[i]), &back);
    }
    vec![td.finish(tol), cross.finish(tol), resid.finish(tol)]
}
