//! Random Garnet problems `G(n_S, n_A, b, p)`.
//!
//! For each state-action pair, `b` distinct successors are drawn uniformly
//! without replacement (partial Fisher-Yates) and receive the lengths of the
//! `b` intervals cut from `[0, 1]` by `b - 1` uniform points. Rewards are
//! uniform on `[0, 1]` per state and shared by all actions. Features are
//! uniform on `[0, 1]` except for the first column, which is constant 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Mdp, Policy};
use crate::rng::{self, Stream};
use crate::DEFAULT_GAMMA;

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarnetSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub n_features: usize,
    pub seed: u64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl GarnetSpec {
    pub fn new(n_states: usize, n_actions: usize, branching: usize, n_features: usize, seed: u64) -> Self {
        GarnetSpec {
            n_states,
            n_actions,
            branching,
            n_features,
            seed,
            gamma: DEFAULT_GAMMA,
        }
    }

    /// `G(30, 4, 2, 8)`.
    pub fn small(seed: u64) -> Self {
        GarnetSpec::new(30, 4, 2, 8, seed)
    }

    /// `G(100, 10, 3, 20)`.
    pub fn big(seed: u64) -> Self {
        GarnetSpec::new(100, 10, 3, 20, seed)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GarnetSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::invalid("garnet spec", "need at least one state and action"));
        }
        if self.branching == 0 || self.branching > self.n_states {
            return Err(Error::invalid(
                "garnet spec",
                format!(
                    "branching factor {} outside 1..={}",
                    self.branching, self.n_states
                ),
            ));
        }
        if self.n_features == 0 {
            return Err(Error::invalid("garnet spec", "need at least one feature"));
        }
        Ok(())
    }
}

/// State features `Φ` (one row per state), defining `V̂_θ = Φθ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    phi: DMatrix<f64>,
}

impl FeatureMap {
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(Error::invalid("features", "empty feature matrix"));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("features", "non-finite entry"));
        }
        Ok(FeatureMap { phi })
    }

    pub fn n_states(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.phi.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// `φ(s)`.
    pub fn feature(&self, s: usize) -> DVector<f64> {
        self.phi.row(s).transpose()
    }

    /// `Φθ`.
    pub fn values(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.phi * theta
    }
}

/// Builds the MDP and features of a Garnet instance. Each artifact has its
/// own sub-seed so that, say, a change in feature count leaves the dynamics
/// untouched.
pub fn generate_garnet(spec: &GarnetSpec) -> Result<(Mdp, FeatureMap)> {
    spec.validate()?;
    let n = spec.n_states;
    let m = spec.n_actions;

    let mut rng_t = rng::stream_rng(spec.seed, Stream::Transitions, 0);
    let mut transition = vec![0.0; n * m * n];
    let mut pool: Vec<usize> = (0..n).collect();
    for sa in 0..n * m {
        // partial Fisher-Yates over a fresh identity permutation
        for (k, slot) in pool.iter_mut().enumerate() {
            *slot = k;
        }
        for k in 0..spec.branching {
            let j = rng::index_in(&mut rng_t, k, n);
            pool.swap(k, j);
        }
        let probs = rng::simplex_cuts(&mut rng_t, spec.branching);
        let row = &mut transition[sa * n..(sa + 1) * n];
        for (&succ, p) in pool[..spec.branching].iter().zip(probs) {
            row[succ] = p;
        }
    }

    let mut rng_r = rng::stream_rng(spec.seed, Stream::Rewards, 0);
    let mut reward = Vec::with_capacity(n * m);
    for _ in 0..n {
        let r = rng::unit(&mut rng_r);
        reward.extend(std::iter::repeat_n(r, m));
    }

    let mut rng_f = rng::stream_rng(spec.seed, Stream::Features, 0);
    let mut phi = DMatrix::zeros(n, spec.n_features);
    for s in 0..n {
        phi[(s, 0)] = 1.0;
        for k in 1..spec.n_features {
            phi[(s, k)] = rng::unit(&mut rng_f);
        }
    }

    let mdp = Mdp::new(n, m, transition, reward, spec.gamma)?;
    Ok((mdp, FeatureMap::new(phi)?))
}

/// Per-state action probabilities from `n_actions - 1` uniform cut points.
pub fn random_policy(n_states: usize, n_actions: usize, seed: u64) -> Result<Policy> {
    let mut rng = rng::rng_from_seed(seed);
    let probs = (0..n_states)
        .flat_map(|_| rng::simplex_cuts(&mut rng, n_actions))
        .collect();
    Policy::new(n_states, n_actions, probs)
}

pub fn uniform_policy(n_states: usize, n_actions: usize) -> Result<Policy> {
    let w = 1.0 / n_actions as f64;
    Policy::new(n_states, n_actions, vec![w; n_states * n_actions])
}

/// `(1−ε)π + ε·uniform`, a behavior policy close to `pi` that still covers
/// every action.
pub fn mixed_policy(pi: &Policy, eps: f64) -> Result<Policy> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid("mixing weight", format!("{eps} not in [0, 1]")));
    }
    let u = 1.0 / pi.n_actions() as f64;
    let probs = pi.probs_flat().iter().map(|p| (1.0 - eps) * p + eps * u).collect();
    Policy::new(pi.n_states(), pi.n_actions(), probs)
}

/// A Garnet MDP with its features, the policy to evaluate and the policy
/// that generates data.
#[derive(Debug, Clone)]
pub struct GarnetInstance {
    pub spec: GarnetSpec,
    pub mdp: Mdp,
    pub features: FeatureMap,
    pub target: Policy,
    pub behavior: Policy,
}

impl GarnetInstance {
    /// On-policy: the behavior policy is the random target policy.
    /// Off-policy: the behavior policy is uniform.
    pub fn generate(spec: &GarnetSpec, off_policy: bool) -> Result<Self> {
        let (mdp, features) = generate_garnet(spec)?;
        let target = random_policy(
            spec.n_states,
            spec.n_actions,
            rng::derive_seed(spec.seed, Stream::TargetPolicy, 0),
        )?;
        let behavior = if off_policy {
            uniform_policy(spec.n_states, spec.n_actions)?
        } else {
            target.clone()
        };
        Ok(GarnetInstance {
            spec: *spec,
            mdp,
            features,
            target,
            behavior,
        })
    }

    pub fn is_on_policy(&self) -> bool {
        self.target == self.behavior
    }
}
