//! Forward views: truncated λ-returns and their gradients, evaluated with
//! the whole future of the trajectory in hand.
//!
//! Sums stop at the last transition `n`, i.e. `T̂_{n+1}V = V(s_{n+1})`.
//! Indices in this module are 1-based to match the usual notation.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::learner::{Algorithm, Hyper};
use crate::sampling::Transition;

/// `T̂^λ_{j,i}V = V(s_j) + Σ_{k=j}^{i} (γλ)^{k-j} (ρ_j^k (r_k + γV(s_{k+1})) − ρ_j^{k-1} V(s_k))`
/// with `ρ_j^k = Π_{m=j}^{k} ρ_m` and `ρ_j^{j-1} = 1`. `v` is indexed by state.
pub fn empirical_operator(
    ts: &[Transition],
    j: usize,
    i: usize,
    v: &DVector<f64>,
    lambda: f64,
    gamma: f64,
) -> Result<f64> {
    if j == 0 || j > i || i > ts.len() {
        return Err(Error::OutOfRange(format!(
            "need 1 ≤ j ≤ i ≤ {}, got j={j} i={i}",
            ts.len()
        )));
    }
    let mut out = v[ts[j - 1].state];
    let mut before = 1.0;
    let mut decay = 1.0;
    for t in &ts[j - 1..i] {
        let after = before * t.rho;
        out += decay * (after * (t.reward + gamma * v[t.next_state]) - before * v[t.state]);
        before = after;
        decay *= gamma * lambda;
    }
    Ok(out)
}

/// `δ_i^λ(θ)` for `i = 1..=n`, by the backward recursion
/// `δ_i^λ = δ_i + γλρ_i δ_{i+1}^λ`, `δ_{n+1}^λ = 0`.
pub fn lambda_td_errors(ts: &[Transition], theta: &DVector<f64>, lambda: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; ts.len()];
    let mut next = 0.0;
    for (k, t) in ts.iter().enumerate().rev() {
        next = t.td_error(theta, gamma) + gamma * lambda * t.rho * next;
        out[k] = next;
    }
    out
}

/// `g_i^λ = γρ_i(1−λ)φ_{i+1} + γλρ_i g_{i+1}^λ`, `g_{n+1}^λ = φ_{n+1}`.
pub fn lambda_gradients(ts: &[Transition], lambda: f64, gamma: f64) -> Vec<DVector<f64>> {
    let Some(last) = ts.last() else {
        return Vec::new();
    };
    let mut out = vec![DVector::zeros(0); ts.len()];
    let mut next = last.phi_next.clone();
    for (k, t) in ts.iter().enumerate().rev() {
        next = &t.phi_next * (gamma * t.rho * (1.0 - lambda)) + next * (gamma * lambda * t.rho);
        out[k] = next.clone();
    }
    out
}

/// `δ_i^λ(θ)` for a single `i`, summed over the future directly.
fn lambda_td_error_at(ts: &[Transition], i: usize, theta: &DVector<f64>, lambda: f64, gamma: f64) -> f64 {
    let mut acc = 0.0;
    let mut w = 1.0;
    for t in &ts[i..] {
        acc += w * t.td_error(theta, gamma);
        w *= gamma * lambda * t.rho;
        if w == 0.0 {
            break;
        }
    }
    acc
}

/// θ sequence of a gradient learner run in its forward view:
///
/// * TD:   `θ += α φ_i δ_i^λ(θ)`
/// * TDC:  `θ += α (φ_i δ_i^λ(θ) − g_i^λ φ_iᵀw)`
/// * GTD2: `θ += α (φ_i − g_i^λ) φ_iᵀw`
/// * gBRM: `θ += α (φ_i − g_i^λ) δ_i^λ(θ)`
///
/// with `w += β φ_i (δ_i^λ(θ_new) − φ_iᵀw)` for TDC and GTD2. `O(n²p)`.
pub fn forward_view_updates(
    ts: &[Transition],
    kind: Algorithm,
    hyper: &Hyper,
    gamma: f64,
) -> Result<Vec<DVector<f64>>> {
    if kind.is_least_squares() {
        return Err(Error::invalid("algorithm", format!("{kind} has no forward view here")));
    }
    let Some(first) = ts.first() else {
        return Ok(Vec::new());
    };
    let p = first.phi.len();
    let lambda = hyper.lambda;
    let grads = lambda_gradients(ts, lambda, gamma);
    let mut theta = DVector::zeros(p);
    let mut w = DVector::zeros(p);
    let mut out = Vec::with_capacity(ts.len());
    for (k, t) in ts.iter().enumerate() {
        let i = k + 1;
        let alpha = hyper.alpha.rate(i);
        let proj = t.phi.dot(&w);
        let incr = match kind {
            Algorithm::Td => &t.phi * lambda_td_error_at(ts, k, &theta, lambda, gamma),
            Algorithm::Tdc => {
                &t.phi * lambda_td_error_at(ts, k, &theta, lambda, gamma) - &grads[k] * proj
            }
            Algorithm::Gtd2 => (&t.phi - &grads[k]) * proj,
            Algorithm::Gbrm => (&t.phi - &grads[k]) * lambda_td_error_at(ts, k, &theta, lambda, gamma),
            _ => unreachable!(),
        };
        theta.axpy(alpha, &incr, 1.0);
        if kind.uses_beta() {
            let err = lambda_td_error_at(ts, k, &theta, lambda, gamma);
            w.axpy(hyper.beta.rate(i) * (err - proj), &t.phi, 1.0);
        }
        out.push(theta.clone());
    }
    Ok(out)
}
