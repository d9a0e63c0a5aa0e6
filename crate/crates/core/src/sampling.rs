//! Trajectories generated by a behavior policy and annotated with importance
//! weights against a target policy.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garnet::FeatureMap;
use crate::mdp::{self, Mdp, Policy};
use crate::rng;

/// One observed step `(s_i, a_i, r_i, s_{i+1})` with `ρ_i` and both feature
/// vectors materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub rho: f64,
    pub phi: DVector<f64>,
    pub phi_next: DVector<f64>,
}

impl Transition {
    /// `Δφ_i = φ_i - γ ρ_i φ_{i+1}`.
    pub fn delta_phi(&self, gamma: f64) -> DVector<f64> {
        &self.phi - &self.phi_next * (gamma * self.rho)
    }

    /// Off-policy TD error `ρ_i r_i - Δφ_iᵀθ`.
    pub fn td_error(&self, theta: &DVector<f64>, gamma: f64) -> f64 {
        self.rho * self.reward - self.phi.dot(theta) + gamma * self.rho * self.phi_next.dot(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    /// Draw `s_1` from the behavior chain's stationary distribution.
    #[default]
    Stationary,
    Uniform,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub gamma: f64,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.transitions.first().map_or(0, |t| t.phi.len())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transition> {
        self.transitions.iter()
    }

    /// First `n` transitions.
    pub fn prefix(&self, n: usize) -> Trajectory {
        Trajectory {
            transitions: self.transitions[..n.min(self.len())].to_vec(),
            gamma: self.gamma,
            seed: self.seed,
        }
    }

    pub fn is_chained(&self) -> bool {
        self.transitions
            .windows(2)
            .all(|w| w[0].next_state == w[1].state)
    }
}

/// Importance weights `ρ(s,a)` for every pair, checking coverage once.
pub fn weight_table(target: &Policy, behavior: &Policy) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(target.n_states() * target.n_actions());
    for s in 0..target.n_states() {
        for a in 0..target.n_actions() {
            out.push(mdp::importance_weight(target, behavior, s, a)?);
        }
    }
    Ok(out)
}

/// Samples `n` transitions following `behavior`.
pub fn sample_trajectory(
    mdp: &Mdp,
    behavior: &Policy,
    target: &Policy,
    features: &FeatureMap,
    n: usize,
    seed: u64,
    start: StartState,
) -> Result<Trajectory> {
    if features.n_states() != mdp.n_states() {
        return Err(Error::Dimension(format!(
            "features cover {} states, mdp has {}",
            features.n_states(),
            mdp.n_states()
        )));
    }
    let weights = weight_table(target, behavior)?;
    let n_actions = mdp.n_actions();
    let mut rng = rng::rng_from_seed(seed);

    let mut state = match start {
        StartState::Stationary => {
            let chain = mdp::induce_chain(mdp, behavior)?;
            let mu = mdp::stationary_distribution(&chain)?;
            rng::categorical(&mut rng, mu.as_slice())
        }
        StartState::Uniform => rng::index_in(&mut rng, 0, mdp.n_states()),
        StartState::Fixed(s) if s < mdp.n_states() => s,
        StartState::Fixed(s) => {
            return Err(Error::OutOfRange(format!("start state {s}")));
        }
    };

    let rows: Vec<DVector<f64>> = (0..mdp.n_states()).map(|s| features.feature(s)).collect();
    let mut transitions = Vec::with_capacity(n);
    for _ in 0..n {
        let action = rng::categorical(&mut rng, behavior.row(state));
        let next_state = rng::categorical(&mut rng, mdp.next_probs(state, action));
        transitions.push(Transition {
            state,
            action,
            reward: mdp.reward(state, action),
            next_state,
            rho: weights[state * n_actions + action],
            phi: rows[state].clone(),
            phi_next: rows[next_state].clone(),
        });
        state = next_state;
    }
    Ok(Trajectory {
        transitions,
        gamma: mdp.gamma(),
        seed,
    })
}

const DUMP_MAGIC: &[u8; 4] = b"OTRJ";
const DUMP_VERSION: u32 = 1;

/// Writes the little-endian replay format:
///
/// ```text
/// magic  "OTRJ"          4 bytes
/// version u32            (= 1)
/// n       u64            transition count
/// p       u32            feature count
/// gamma   f64
/// seed    u64
/// n records of:
///   state u32, action u32, reward f64, next_state u32, rho f64,
///   phi [f64; p], phi_next [f64; p]
/// ```
pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let p = traj.n_features();
    out.write_all(DUMP_MAGIC)?;
    out.write_u32::<LittleEndian>(DUMP_VERSION)?;
    out.write_u64::<LittleEndian>(traj.len() as u64)?;
    out.write_u32::<LittleEndian>(p as u32)?;
    out.write_f64::<LittleEndian>(traj.gamma)?;
    out.write_u64::<LittleEndian>(traj.seed)?;
    for t in &traj.transitions {
        out.write_u32::<LittleEndian>(t.state as u32)?;
        out.write_u32::<LittleEndian>(t.action as u32)?;
        out.write_f64::<LittleEndian>(t.reward)?;
        out.write_u32::<LittleEndian>(t.next_state as u32)?;
        out.write_f64::<LittleEndian>(t.rho)?;
        for x in t.phi.iter().chain(t.phi_next.iter()) {
            out.write_f64::<LittleEndian>(*x)?;
        }
    }
    Ok(())
}

pub fn read_trajectory<R: Read>(mut input: R) -> Result<Trajectory> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Format("not a trajectory dump".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != DUMP_VERSION {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let n = input.read_u64::<LittleEndian>()? as usize;
    let p = input.read_u32::<LittleEndian>()? as usize;
    let gamma = input.read_f64::<LittleEndian>()?;
    let seed = input.read_u64::<LittleEndian>()?;
    let mut transitions = Vec::with_capacity(n.min(1 << 24));
    let read_vec = |input: &mut R| -> Result<DVector<f64>> {
        let mut v = DVector::zeros(p);
        for x in v.iter_mut() {
            *x = input.read_f64::<LittleEndian>()?;
        }
        Ok(v)
    };
    for _ in 0..n {
        let state = input.read_u32::<LittleEndian>()? as usize;
        let action = input.read_u32::<LittleEndian>()? as usize;
        let reward = input.read_f64::<LittleEndian>()?;
        let next_state = input.read_u32::<LittleEndian>()? as usize;
        let rho = input.read_f64::<LittleEndian>()?;
        let phi = read_vec(&mut input)?;
        let phi_next = read_vec(&mut input)?;
        transitions.push(Transition {
            state,
            action,
            reward,
            next_state,
            rho,
            phi,
            phi_next,
        });
    }
    Ok(Trajectory {
        transitions,
        gamma,
        seed,
    })
}
