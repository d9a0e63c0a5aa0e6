//! Finite MDPs, policies and the exact model-based quantities derived from
//! them.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_BUDGET: usize = 1_000_000;
const RESIDUAL_TOL: f64 = 1e-10;

/// A finite MDP with transition kernel `P(s'|s,a)`, reward `R(s,a)` and
/// discount `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    /// Row-major `[s][a][s']`.
    transition: Vec<f64>,
    /// Row-major `[s][a]`.
    reward: Vec<f64>,
    gamma: f64,
}

impl Mdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("mdp", "state and action counts must be positive"));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::Dimension(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        if reward.len() != n_states * n_actions {
            return Err(Error::Dimension(format!(
                "reward has {} entries, expected {}",
                reward.len(),
                n_states * n_actions
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("mdp", format!("gamma must lie in [0, 1), got {gamma}")));
        }
        for (row_idx, row) in transition.chunks(n_states).enumerate() {
            check_distribution(row).map_err(|reason| {
                Error::invalid(
                    "mdp",
                    format!(
                        "transition row (s={}, a={}) {reason}",
                        row_idx / n_actions,
                        row_idx % n_actions
                    ),
                )
            })?;
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("mdp", "rewards must be finite"));
        }
        Ok(Mdp {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Copy of this MDP with another discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Mdp::new(
            self.n_states,
            self.n_actions,
            self.transition.clone(),
            self.reward.clone(),
            gamma,
        )
    }

    /// `P(·|s,a)`.
    pub fn next_probs(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn transition_flat(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward_flat(&self) -> &[f64] {
        &self.reward
    }
}

/// A stochastic policy `π(a|s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    /// Row-major `[s][a]`.
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("policy", "state and action counts must be positive"));
        }
        if probs.len() != n_states * n_actions {
            return Err(Error::Dimension(format!(
                "policy has {} entries, expected {}",
                probs.len(),
                n_states * n_actions
            )));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            check_distribution(row)
                .map_err(|reason| Error::invalid("policy", format!("row s={s} {reason}")))?;
        }
        Ok(Policy {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn probs_flat(&self) -> &[f64] {
        &self.probs
    }

    fn check_against(&self, mdp: &Mdp) -> Result<()> {
        if self.n_states != mdp.n_states || self.n_actions != mdp.n_actions {
            return Err(Error::Dimension(format!(
                "policy is {}x{}, mdp is {}x{}",
                self.n_states, self.n_actions, mdp.n_states, mdp.n_actions
            )));
        }
        Ok(())
    }
}

fn check_distribution(row: &[f64]) -> std::result::Result<(), String> {
    if let Some(x) = row.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(format!("has invalid entry {x}"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

/// Markov chain `P^π` and mean reward `R^π` induced by a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    pub p_pi: DMatrix<f64>,
    pub r_pi: DVector<f64>,
}

pub fn induce_chain(mdp: &Mdp, pi: &Policy) -> Result<InducedChain> {
    pi.check_against(mdp)?;
    let n = mdp.n_states;
    let mut p_pi = DMatrix::zeros(n, n);
    let mut r_pi = DVector::zeros(n);
    for s in 0..n {
        for a in 0..mdp.n_actions {
            let w = pi.prob(s, a);
            if w == 0.0 {
                continue;
            }
            r_pi[s] += w * mdp.reward(s, a);
            for (s2, &p) in mdp.next_probs(s, a).iter().enumerate() {
                p_pi[(s, s2)] += w * p;
            }
        }
    }
    Ok(InducedChain { p_pi, r_pi })
}

/// Solves `(I - γP^π) V = R^π` by LU with partial pivoting.
pub fn exact_value(mdp: &Mdp, pi: &Policy) -> Result<DVector<f64>> {
    let chain = induce_chain(mdp, pi)?;
    value_of_chain(&chain, mdp.gamma)
}

pub fn value_of_chain(chain: &InducedChain, gamma: f64) -> Result<DVector<f64>> {
    let n = chain.r_pi.len();
    let system = DMatrix::identity(n, n) - &chain.p_pi * gamma;
    let v = system
        .clone()
        .lu()
        .solve(&chain.r_pi)
        .ok_or_else(|| Error::Solver("I - γP^π is singular".into()))?;
    let residual = (&system * &v - &chain.r_pi).amax();
    if residual >= RESIDUAL_TOL * (1.0 + chain.r_pi.amax()) {
        return Err(Error::Solver(format!(
            "Bellman residual {residual:e} after solve"
        )));
    }
    Ok(v)
}

/// Number of closed communicating classes of a stochastic matrix.
pub fn closed_class_count(p: &DMatrix<f64>) -> usize {
    let n = p.nrows();
    let mut graph = DiGraph::<usize, ()>::with_capacity(n, n * 4);
    let nodes: Vec<_> = (0..n).map(|s| graph.add_node(s)).collect();
    for s in 0..n {
        for s2 in 0..n {
            if p[(s, s2)] > 0.0 {
                graph.add_edge(nodes[s], nodes[s2], ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; n];
    for (c, members) in sccs.iter().enumerate() {
        for node in members {
            component[graph[*node]] = c;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|node| {
                let s = graph[*node];
                (0..n).all(|s2| p[(s, s2)] == 0.0 || component[s2] == *c)
            })
        })
        .count()
}

/// Stationary distribution `μ` with `μᵀP = μᵀ`.
///
/// Power iteration runs on the lazy chain `(I + P)/2`, which shares its
/// stationary distribution with `P` but is aperiodic. If the iteration
/// budget runs out, the balance equations are solved directly. A chain with
/// more than one closed class has no unique answer and is rejected.
pub fn stationary_distribution(chain: &InducedChain) -> Result<DVector<f64>> {
    let p = &chain.p_pi;
    let n = p.nrows();
    let closed = closed_class_count(p);
    if closed != 1 {
        return Err(Error::NotErgodic(format!(
            "chain has {closed} closed classes"
        )));
    }

    let pt = p.transpose();
    let mut mu = DVector::from_element(n, 1.0 / n as f64);
    let mut next = DVector::zeros(n);
    let mut converged = false;
    for _ in 0..STATIONARY_BUDGET {
        pt.mul_to(&mu, &mut next);
        next += &mu;
        next *= 0.5;
        let change = (&next - &mu).lp_norm(1);
        std::mem::swap(&mut mu, &mut next);
        if change < STATIONARY_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        mu = stationary_direct(p)?;
    }
    let total = mu.sum();
    mu /= total;
    mu.iter_mut().for_each(|x| *x = x.max(0.0));

    let residual = (p.tr_mul(&mu) - &mu).amax();
    if residual >= RESIDUAL_TOL {
        return Err(Error::NotErgodic(format!(
            "stationary residual {residual:e}"
        )));
    }
    Ok(mu)
}

fn stationary_direct(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    // (I - P)ᵀ μ = 0 with the last equation replaced by Σμ = 1
    let mut system = (DMatrix::identity(n, n) - p).transpose();
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotErgodic("balance equations are singular".into()))
}

/// `ρ(s,a) = π(a|s) / π₀(a|s)`, zero when both probabilities vanish.
pub fn importance_weight(target: &Policy, behavior: &Policy, s: usize, a: usize) -> Result<f64> {
    let t = target.prob(s, a);
    let b = behavior.prob(s, a);
    if b > 0.0 {
        Ok(t / b)
    } else if t > 0.0 {
        Err(Error::Coverage {
            state: s,
            action: a,
            target: t,
        })
    } else {
        Ok(0.0)
    }
}

/// Largest importance weight over the actions the behavior policy can take.
pub fn max_importance_weight(target: &Policy, behavior: &Policy) -> Result<f64> {
    let mut best: f64 = 0.0;
    for s in 0..target.n_states() {
        for a in 0..target.n_actions() {
            best = best.max(importance_weight(target, behavior, s, a)?);
        }
    }
    Ok(best)
}
