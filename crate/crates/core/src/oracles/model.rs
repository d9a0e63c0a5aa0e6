//! Model-based limits of the learners, computed from the true dynamics.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::garnet::FeatureMap;
use crate::mdp::{self, Mdp, Policy};

/// Quantities describing where the learners should converge on a given
/// problem. Target-chain dynamics `P`, `R` are weighted by the behavior
/// chain's stationary distribution `μ₀`.
#[derive(Debug, Clone)]
pub struct ModelQuantities {
    pub lambda: f64,
    pub gamma: f64,
    pub mu0: DVector<f64>,
    pub p_pi: DMatrix<f64>,
    pub r_pi: DVector<f64>,
    /// `(I − λγP)⁻¹`
    pub q: DMatrix<f64>,
    /// `ΦᵀD₀(I − γP)QΦ`
    pub a: DMatrix<f64>,
    /// `ΦᵀD₀QR`
    pub b: DVector<f64>,
    /// `Φ(ΦᵀD₀Φ)⁻¹ΦᵀD₀`
    pub pi0: DMatrix<f64>,
    /// Spectral radius of `(1−λ)γ Π₀PQ`, the linear part of `Π₀T^λ`.
    pub contraction_radius: f64,
    pub v_true: DVector<f64>,
    /// `max_{s,a} λγρ(s,a)`
    pub trace_bound: f64,
    /// Residual-minimization limits; `None` when `trace_bound ≥ 1`.
    pub residual: Option<ResidualLimits>,
}

/// Limits of `(1/i)Ã_i` and `(1/i)b̃_i` for the BRM learner.
#[derive(Debug, Clone)]
pub struct ResidualLimits {
    /// `P̃(s,s') = Σ_a π(a|s)ρ(s,a)P(s'|s,a)`
    pub p_tilde: DMatrix<f64>,
    /// `d = (I − (λγ)²P̃ᵀ)⁻¹μ₀`, the diagonal of `D`
    pub d: DVector<f64>,
    /// `P̃ᵀd`, the diagonal of `D'`
    pub d_prime: DVector<f64>,
    /// `λγ(DP − γD')Q`
    pub s: DMatrix<f64>,
    pub a_tilde: DMatrix<f64>,
    pub b_tilde: DVector<f64>,
    /// `Φᵀ[(I − γPᵀ)QᵀD + S]R`. Only equal to `b_tilde` on-policy.
    pub b_tilde_displayed: DVector<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelSummary {
    pub lambda: f64,
    pub trace_bound: f64,
    pub contraction_radius: f64,
    pub residual_defined: bool,
}

impl ModelQuantities {
    /// Projected fixed point `θ* = A⁻¹b`.
    pub fn theta_star(&self) -> Result<DVector<f64>> {
        self.a
            .clone()
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::Solver("A is singular".into()))
    }

    /// `Ã⁻¹b̃`, the BRM limit.
    pub fn theta_residual(&self) -> Result<DVector<f64>> {
        let r = self.residual_limits()?;
        r.a_tilde
            .clone()
            .lu()
            .solve(&r.b_tilde)
            .ok_or_else(|| Error::Solver("Ã is singular".into()))
    }

    pub fn residual_limits(&self) -> Result<&ResidualLimits> {
        self.residual.as_ref().ok_or_else(|| {
            Error::HypothesisUnmet(format!(
                "max λγρ = {} must be below 1 for the residual limits",
                self.trace_bound
            ))
        })
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            lambda: self.lambda,
            trace_bound: self.trace_bound,
            contraction_radius: self.contraction_radius,
            residual_defined: self.residual.is_some(),
        }
    }
}

fn inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.try_inverse()
        .ok_or_else(|| Error::Solver(format!("{what} is singular")))
}

pub fn model_quantities(
    mdp: &Mdp,
    target: &Policy,
    behavior: &Policy,
    features: &FeatureMap,
    lambda: f64,
) -> Result<ModelQuantities> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda", format!("{lambda} not in [0, 1]")));
    }
    if features.n_states() != mdp.n_states() {
        return Err(Error::Dimension("features vs mdp states".into()));
    }
    let n = mdp.n_states();
    let gamma = mdp.gamma();
    let lg = lambda * gamma;
    let eye = DMatrix::<f64>::identity(n, n);
    let phi = features.matrix();

    let mu0 = mdp::stationary_distribution(&mdp::induce_chain(mdp, behavior)?)?;
    let d0 = DMatrix::from_diagonal(&mu0);
    let target_chain = mdp::induce_chain(mdp, target)?;
    let p = target_chain.p_pi.clone();
    let r = target_chain.r_pi.clone();
    let q = inverse(&eye - &p * lg, "I − λγP")?;

    let a = phi.transpose() * &d0 * (&eye - &p * gamma) * &q * phi;
    let b = phi.transpose() * &d0 * &q * &r;

    let gram = phi.transpose() * &d0 * phi;
    let pi0 = phi * inverse(gram, "ΦᵀD₀Φ")? * phi.transpose() * &d0;
    let lin = &pi0 * &p * &q * ((1.0 - lambda) * gamma);
    let contraction_radius = lin
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);

    let v_true = mdp::value_of_chain(&target_chain, gamma)?;
    let trace_bound = lg * mdp::max_importance_weight(target, behavior)?;
    let residual = if trace_bound < 1.0 {
        Some(residual_limits(mdp, target, behavior, phi, lambda, &mu0, &p, &r, &q)?)
    } else {
        None
    };

    Ok(ModelQuantities {
        lambda,
        gamma,
        mu0,
        p_pi: p,
        r_pi: r,
        q,
        a,
        b,
        pi0,
        contraction_radius,
        v_true,
        trace_bound,
        residual,
    })
}

#[allow(clippy::too_many_arguments)]
fn residual_limits(
    mdp: &Mdp,
    target: &Policy,
    behavior: &Policy,
    phi: &DMatrix<f64>,
    lambda: f64,
    mu0: &DVector<f64>,
    p: &DMatrix<f64>,
    r: &DVector<f64>,
    q: &DMatrix<f64>,
) -> Result<ResidualLimits> {
    let n = mdp.n_states();
    let gamma = mdp.gamma();
    let lg = lambda * gamma;
    let eye = DMatrix::<f64>::identity(n, n);

    let mut p_tilde = DMatrix::zeros(n, n);
    // same as p_tilde but each action also weighted by its reward
    let mut p_tilde_r = DMatrix::zeros(n, n);
    for s in 0..n {
        for act in 0..mdp.n_actions() {
            let w = target.prob(s, act) * mdp::importance_weight(target, behavior, s, act)?;
            if w == 0.0 {
                continue;
            }
            for (s2, &pr) in mdp.next_probs(s, act).iter().enumerate() {
                p_tilde[(s, s2)] += w * pr;
                p_tilde_r[(s, s2)] += w * mdp.reward(s, act) * pr;
            }
        }
    }

    let d = (&eye - p_tilde.transpose() * (lg * lg))
        .lu()
        .solve(mu0)
        .ok_or_else(|| Error::Solver("I − (λγ)²P̃ᵀ is singular".into()))?;
    let d_prime = p_tilde.transpose() * &d;
    let dm = DMatrix::from_diagonal(&d);
    let dpm = DMatrix::from_diagonal(&d_prime);
    let s_mat = (&dm * p - &dpm * gamma) * q * lg;

    let ig = &eye - p * gamma;
    let igt = ig.transpose();
    let inner = &dm - &dm * p * gamma - p.transpose() * &dm * gamma + &dpm * (gamma * gamma)
        + &s_mat * &ig
        + &igt * s_mat.transpose();
    let a_tilde = phi.transpose() * inner * phi;

    let b_tilde = phi.transpose()
        * ((&dm - &dpm * (lg * gamma)) * q * r
            - q.transpose() * p_tilde_r.transpose() * &d * (gamma * (1.0 - lambda)));
    let b_tilde_displayed = phi.transpose() * (&igt * q.transpose() * &dm + &s_mat) * r;

    Ok(ResidualLimits {
        p_tilde,
        d,
        d_prime,
        s: s_mat,
        a_tilde,
        b_tilde,
        b_tilde_displayed,
    })
}

/// `T^λV = (I − λγP)⁻¹(R + (1−λ)γPV)` on the target chain.
pub fn apply_t_lambda(mdp: &Mdp, pi: &Policy, v: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let chain = mdp::induce_chain(mdp, pi)?;
    let gamma = mdp.gamma();
    if v.len() != mdp.n_states() {
        return Err(Error::Dimension("value vector length".into()));
    }
    let n = mdp.n_states();
    let m = DMatrix::<f64>::identity(n, n) - &chain.p_pi * (lambda * gamma);
    let rhs = &chain.r_pi + &chain.p_pi * v * ((1.0 - lambda) * gamma);
    m.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("I − λγP is singular".into()))
}

/// Geometric average `(1−λ) Σ_{k=0}^{terms-1} λ^k T^{k+1}V` of Bellman
/// iterates.
pub fn t_lambda_series(mdp: &Mdp, pi: &Policy, v: &DVector<f64>, lambda: f64, terms: usize) -> Result<DVector<f64>> {
    let chain = mdp::induce_chain(mdp, pi)?;
    let gamma = mdp.gamma();
    let mut iterate = v.clone();
    let mut acc = DVector::zeros(v.len());
    let mut weight = 1.0 - lambda;
    for _ in 0..terms {
        iterate = &chain.r_pi + &chain.p_pi * &iterate * gamma;
        acc.axpy(weight, &iterate, 1.0);
        weight *= lambda;
    }
    Ok(acc)
}

/// Unweighted least-squares coefficients of `v` on the features.
pub fn least_squares_fit(features: &FeatureMap, v: &DVector<f64>) -> Result<DVector<f64>> {
    let phi = features.matrix();
    (phi.transpose() * phi)
        .lu()
        .solve(&(phi.transpose() * v))
        .ok_or_else(|| Error::Solver("ΦᵀΦ is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garnet::{GarnetInstance, GarnetSpec};
    use crate::sampling::{sample_trajectory, StartState};
    use crate::ls::Brm;
    use crate::Learner;

    fn instance(seed: u64, off: bool) -> GarnetInstance {
        GarnetInstance::generate(&GarnetSpec::new(6, 2, 3, 3, seed), off).unwrap()
    }

    #[test]
    fn lambda_zero_on_policy_a() {
        let inst = instance(71, false);
        let m = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, 0.0).unwrap();
        let phi = inst.features.matrix();
        let d0 = DMatrix::from_diagonal(&m.mu0);
        let expect = phi.transpose() * d0 * (DMatrix::identity(6, 6) - &m.p_pi * m.gamma) * phi;
        assert!((m.a - expect).amax() < 1e-12);
    }

    #[test]
    fn lambda_one_b_targets_true_values() {
        let inst = instance(72, true);
        let m = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, 1.0).unwrap();
        let phi = inst.features.matrix();
        let d0 = DMatrix::from_diagonal(&m.mu0);
        assert!((&m.b - phi.transpose() * &d0 * &m.v_true).amax() < 1e-10);
        // θ* is then the D₀-weighted projection of V^π
        let proj = &m.pi0 * &m.v_true;
        assert!((phi * m.theta_star().unwrap() - proj).amax() < 1e-8);
    }

    #[test]
    fn t_lambda_basic_identities() {
        let inst = instance(73, false);
        let v = DVector::from_fn(6, |i, _| i as f64 * 0.3 - 1.0);
        let chain = mdp::induce_chain(&inst.mdp, &inst.target).unwrap();
        let bellman = &chain.r_pi + &chain.p_pi * &v * inst.mdp.gamma();
        let t0 = apply_t_lambda(&inst.mdp, &inst.target, &v, 0.0).unwrap();
        assert!((t0 - bellman).amax() < 1e-12);
        let vt = mdp::exact_value(&inst.mdp, &inst.target).unwrap();
        for lambda in [0.0, 0.5, 1.0] {
            let fixed = apply_t_lambda(&inst.mdp, &inst.target, &vt, lambda).unwrap();
            assert!((fixed - &vt).amax() < 1e-9);
        }
    }

    #[test]
    fn t_lambda_matches_series() {
        let mdp = Mdp::new(
            3,
            1,
            vec![0.2, 0.5, 0.3, 0.0, 0.1, 0.9, 0.6, 0.4, 0.0],
            vec![1.0, -0.5, 2.0],
            0.9,
        )
        .unwrap();
        let pi = Policy::new(3, 1, vec![1.0; 3]).unwrap();
        let v = DVector::from_vec(vec![0.3, -2.0, 5.0]);
        let closed = apply_t_lambda(&mdp, &pi, &v, 0.5).unwrap();
        let series = t_lambda_series(&mdp, &pi, &v, 0.5, 200).unwrap();
        assert!((closed - series).amax() < 1e-10);
        let inst = instance(74, true);
        let v = DVector::from_element(6, 1.5);
        for lambda in [0.1, 0.7, 0.9] {
            let closed = apply_t_lambda(&inst.mdp, &inst.target, &v, lambda).unwrap();
            let series = t_lambda_series(&inst.mdp, &inst.target, &v, lambda, 2000).unwrap();
            assert!((closed - series).amax() < 1e-10);
        }
    }

    #[test]
    fn guard_refuses_residual_limits() {
        // uniform behavior over 2 actions lets ρ reach ~2, so λγρ > 1 at λ = 1
        let inst = instance(75, true);
        let m = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, 1.0).unwrap();
        assert!(m.trace_bound >= 1.0);
        assert!(matches!(m.theta_residual(), Err(Error::HypothesisUnmet(_))));
    }

    #[test]
    fn residual_limits_agree_on_policy() {
        let inst = instance(76, false);
        let m = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, 0.6).unwrap();
        let r = m.residual_limits().unwrap();
        assert!((&r.b_tilde - &r.b_tilde_displayed).amax() < 1e-10 * r.b_tilde.amax());
        assert!((&r.d - &m.mu0 / (1.0 - (0.6 * m.gamma).powi(2))).amax() < 1e-12);
    }

    #[test]
    fn residual_limits_match_long_run_average() {
        let inst = instance(77, true);
        let lambda = 0.4;
        let m = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, lambda).unwrap();
        let lim = m.residual_limits().unwrap();
        let n = 200_000;
        let traj = sample_trajectory(
            &inst.mdp,
            &inst.behavior,
            &inst.target,
            &inst.features,
            n,
            78,
            StartState::Stationary,
        )
        .unwrap();
        let (a, b) = crate::oracles::stats::residual_running_sums(&traj.transitions, lambda, m.gamma);
        let a = a / n as f64;
        let b = b / n as f64;
        assert!((&a - &lim.a_tilde).norm() / lim.a_tilde.norm() < 0.05);
        assert!((&b - &lim.b_tilde).norm() / lim.b_tilde.norm() < 0.05);
        let mut brm = Brm::new(3, lambda, m.gamma, 1e3);
        for t in traj.iter() {
            brm.step(t).unwrap();
        }
        let th = m.theta_residual().unwrap();
        assert!((brm.theta() - &th).norm() / th.norm() < 0.1);
    }

    #[test]
    fn radius_vanishes_at_lambda_one() {
        let inst = instance(79, false);
        let m = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, 1.0).unwrap();
        assert!(m.contraction_radius < 1e-12);
        let m = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, 0.0).unwrap();
        assert!(m.contraction_radius > 0.0);
    }
}
