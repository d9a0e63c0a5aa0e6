//! Direct-summation counterparts of the recursive least-squares learners.
//!
//! Nothing here reuses the learners' trace recursions: every weighted sum is
//! evaluated term by term, and every inverse is an explicit solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sampling::Transition;

fn dim(ts: &[Transition]) -> Result<usize> {
    ts.first()
        .map(|t| t.phi.len())
        .ok_or_else(|| Error::invalid("trajectory", "empty"))
}

fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::Solver("batch system is singular".into()))
}

fn regularized(a: DMatrix<f64>, reg: f64) -> DMatrix<f64> {
    let p = a.nrows();
    a + DMatrix::identity(p, p) * reg
}

/// Traces `z_j = Σ_{k≤j} (Π_{m=k}^{j-1} γλρ_m) φ_k`, each summed from scratch
/// walking backwards from `j`.
pub fn traces_by_sum(ts: &[Transition], lambda: f64, gamma: f64) -> Vec<DVector<f64>> {
    (0..ts.len())
        .map(|j| {
            let mut z = DVector::zeros(ts[j].phi.len());
            let mut w = 1.0;
            for k in (0..=j).rev() {
                if k < j {
                    w *= gamma * lambda * ts[k].rho;
                }
                if w == 0.0 {
                    break;
                }
                z.axpy(w, &ts[k].phi, 1.0);
            }
            z
        })
        .collect()
}

/// `(A_i, b_i) = (Σ z_jΔφ_jᵀ, Σ ρ_j r_j z_j)`.
pub fn lstd_system(ts: &[Transition], lambda: f64, gamma: f64) -> (DMatrix<f64>, DVector<f64>) {
    let p = ts.first().map_or(0, |t| t.phi.len());
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for (t, z) in ts.iter().zip(traces_by_sum(ts, lambda, gamma)) {
        a += &z * t.delta_phi(gamma).transpose();
        b += &z * (t.rho * t.reward);
    }
    (a, b)
}

/// Solves `(reg·I + A_n) θ = b_n`.
pub fn batch_lstd(ts: &[Transition], lambda: f64, gamma: f64, reg: f64) -> Result<DVector<f64>> {
    dim(ts)?;
    let (a, b) = lstd_system(ts, lambda, gamma);
    solve(regularized(a, reg), &b)
}

/// `(reg·I + Σ φ_jφ_jᵀ)⁻¹`.
pub fn batch_lspe_n(ts: &[Transition], reg: f64) -> Result<DMatrix<f64>> {
    let p = dim(ts)?;
    let mut g = DMatrix::identity(p, p) * reg;
    for t in ts {
        g += &t.phi * t.phi.transpose();
    }
    g.try_inverse()
        .ok_or_else(|| Error::Solver("feature Gram matrix is singular".into()))
}

/// LSPE's θ sequence with `A_i`, `b_i` and `N_i` rebuilt from sums at every step.
pub fn batch_lspe(ts: &[Transition], lambda: f64, gamma: f64, reg: f64) -> Result<DVector<f64>> {
    let p = dim(ts)?;
    let zs = traces_by_sum(ts, lambda, gamma);
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    let mut gram = DMatrix::identity(p, p) * reg;
    let mut theta = DVector::zeros(p);
    for (t, z) in ts.iter().zip(&zs) {
        a += z * t.delta_phi(gamma).transpose();
        b += z * (t.rho * t.reward);
        gram += &t.phi * t.phi.transpose();
        let step = solve(gram.clone(), &(&b - &a * &theta))?;
        theta += step;
    }
    Ok(theta)
}

/// FPKF's θ sequence from its closed form
/// `(reg·I + Σφ_jφ_jᵀ) θ_i = Σ_j φ_j (φ_jᵀθ_{j-1} + Σ_{k=j}^{i} ρ̃_j^{k-1}(ρ_k r_k − Δφ_kᵀθ_{j-1}))`
/// where `ρ̃_j^{k-1} = Π_{m=j}^{k-1} γλρ_m`.
pub fn batch_fpkf(ts: &[Transition], lambda: f64, gamma: f64, reg: f64) -> Result<DVector<f64>> {
    let p = dim(ts)?;
    let mut gram = DMatrix::identity(p, p) * reg;
    // per anchor j: θ_{j-1}, running weight ρ̃_j^{i-1}, partial inner sum
    let mut anchors: Vec<(DVector<f64>, f64, f64)> = Vec::with_capacity(ts.len());
    let mut theta = DVector::zeros(p);
    for (i, t) in ts.iter().enumerate() {
        gram += &t.phi * t.phi.transpose();
        anchors.push((theta.clone(), 1.0, 0.0));
        let dphi = t.delta_phi(gamma);
        for (j, (th, w, acc)) in anchors.iter_mut().enumerate() {
            if j < i {
                *w *= gamma * lambda * ts[i - 1].rho;
            }
            *acc += *w * (t.rho * t.reward - dphi.dot(th));
        }
        let mut rhs = DVector::zeros(p);
        for (j, (th, _, acc)) in anchors.iter().enumerate() {
            rhs.axpy(ts[j].phi.dot(th) + acc, &ts[j].phi, 1.0);
        }
        theta = solve(gram.clone(), &rhs)?;
    }
    Ok(theta)
}

/// `(Ã_n, b̃_n) = (Σ_j ψ_jψ_jᵀ, Σ_j ψ_j y_j)` with the forward residual
/// directions `ψ_j = Σ_{k≥j} ρ̃_j^{k-1} Δφ_k` and targets
/// `y_j = Σ_{k≥j} ρ̃_j^{k-1} ρ_k r_k`, each built by an inner loop.
pub fn brm_system(ts: &[Transition], lambda: f64, gamma: f64) -> (DMatrix<f64>, DVector<f64>) {
    let p = ts.first().map_or(0, |t| t.phi.len());
    let dphis: Vec<DVector<f64>> = ts.iter().map(|t| t.delta_phi(gamma)).collect();
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for j in 0..ts.len() {
        let mut psi = DVector::zeros(p);
        let mut target = 0.0;
        let mut w = 1.0;
        for k in j..ts.len() {
            if k > j {
                w *= gamma * lambda * ts[k - 1].rho;
            }
            if w == 0.0 {
                break;
            }
            psi.axpy(w, &dphis[k], 1.0);
            target += w * ts[k].rho * ts[k].reward;
        }
        a += &psi * psi.transpose();
        b += psi * target;
    }
    (a, b)
}

/// Solves `(reg·I + Ã_n) θ = b̃_n`.
pub fn batch_brm(ts: &[Transition], lambda: f64, gamma: f64, reg: f64) -> Result<DVector<f64>> {
    dim(ts)?;
    let (a, b) = brm_system(ts, lambda, gamma);
    solve(regularized(a, reg), &b)
}

/// `Σ_{i=1}^n Σ_{j=i}^n f(i,j)` in the forward order.
pub fn pair_sum_forward(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    (1..=n).map(|i| (i..=n).map(|j| f(i, j)).sum::<f64>()).sum()
}

/// Same sum, regrouped by the later index: `Σ_{i=1}^n Σ_{j=1}^i f(j,i)`.
pub fn pair_sum_backward(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    (1..=n).map(|i| (1..=i).map(|j| f(j, i)).sum::<f64>()).sum()
}

/// `Σ_{i=1}^n Σ_{j=i}^n Σ_{k=i}^n f(i,j,k)`.
pub fn triple_sum_forward(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 1..=n {
        for j in i..=n {
            for k in i..=n {
                s += f(i, j, k);
            }
        }
    }
    s
}

/// The regrouping of [`triple_sum_forward`] that the BRM recursion relies on.
pub fn triple_sum_backward(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 1..=n {
        for j in 1..=i {
            for k in 1..=j {
                s += f(k, i, j);
            }
        }
    }
    for i in 2..=n {
        for j in 1..i {
            for k in 1..=j {
                s += f(k, j, i);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::testutil::{random_trajectory, zero_rewards};
    use crate::traces::TraceState;

    #[test]
    fn lambda_zero_system_uses_current_features() {
        let traj = random_trajectory(61, 50, true);
        let (a, _) = lstd_system(&traj.transitions, 0.0, traj.gamma);
        let mut direct = DMatrix::zeros(8, 8);
        for t in traj.iter() {
            direct += &t.phi * t.delta_phi(traj.gamma).transpose();
        }
        assert!((a - direct).amax() < 1e-12);
    }

    #[test]
    fn zero_rewards_give_zero_solutions() {
        let traj = zero_rewards(random_trajectory(62, 40, true));
        let ts = &traj.transitions;
        assert_eq!(batch_lstd(ts, 0.5, traj.gamma, 1e-3).unwrap().amax(), 0.0);
        assert_eq!(batch_brm(ts, 0.5, traj.gamma, 1e-3).unwrap().amax(), 0.0);
    }

    #[test]
    fn summed_traces_match_recursion() {
        let traj = random_trajectory(63, 60, true);
        let mut tr = TraceState::new(8);
        for (t, z) in traj.iter().zip(traces_by_sum(&traj.transitions, 0.8, traj.gamma)) {
            let rec = tr.advance(&t.phi, 0.8, traj.gamma, t.rho);
            assert!((rec - &z).amax() < 1e-12 * (1.0 + z.amax()));
        }
    }

    #[test]
    fn brm_lambda_zero_directions_are_one_step() {
        let traj = random_trajectory(64, 30, true);
        let g = traj.gamma;
        let (a, b) = brm_system(&traj.transitions, 0.0, g);
        let mut da = DMatrix::zeros(8, 8);
        let mut db = DVector::zeros(8);
        for t in traj.iter() {
            let d = t.delta_phi(g);
            da += &d * d.transpose();
            db += d * (t.rho * t.reward);
        }
        assert!((a - da).amax() < 1e-12);
        assert!((b - db).amax() < 1e-12);
    }

    #[test]
    fn single_transition_brm() {
        let traj = random_trajectory(65, 1, true);
        let t = &traj.transitions[0];
        let d = t.delta_phi(traj.gamma);
        let theta = batch_brm(&traj.transitions, 0.9, traj.gamma, 1e-3).unwrap();
        let lhs = (DMatrix::identity(8, 8) * 1e-3 + &d * d.transpose()) * &theta;
        assert!((lhs - d * (t.rho * t.reward)).amax() < 1e-9);
    }

    #[test]
    fn sum_regroupings_agree() {
        let mut r = rng::rng_from_seed(66);
        for n in 1..=20usize {
            let table: Vec<f64> = (0..(n + 1).pow(3)).map(|_| rng::unit(&mut r) - 0.5).collect();
            let f2 = |i: usize, j: usize| table[i * (n + 1) + j];
            let f3 = |i: usize, j: usize, k: usize| table[(i * (n + 1) + j) * (n + 1) + k];
            assert!((pair_sum_forward(n, f2) - pair_sum_backward(n, f2)).abs() < 1e-12);
            assert!((triple_sum_forward(n, f3) - triple_sum_backward(n, f3)).abs() < 1e-11);
        }
    }
}
