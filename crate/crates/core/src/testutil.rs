//! Fixtures shared by unit tests.

use nalgebra::DVector;

use crate::garnet::{GarnetInstance, GarnetSpec};
use crate::sampling::{sample_trajectory, StartState, Trajectory, Transition};

/// Trajectory on a 10-state, 3-action, 8-feature Garnet.
pub fn random_trajectory(seed: u64, n: usize, off_policy: bool) -> Trajectory {
    let inst = GarnetInstance::generate(&GarnetSpec::new(10, 3, 3, 8, seed), off_policy).unwrap();
    sample_trajectory(
        &inst.mdp,
        &inst.behavior,
        &inst.target,
        &inst.features,
        n,
        seed ^ 0x5eed,
        StartState::Stationary,
    )
    .unwrap()
}

pub fn zero_rewards(mut traj: Trajectory) -> Trajectory {
    for t in &mut traj.transitions {
        t.reward = 0.0;
    }
    traj
}

pub fn transition(phi: &[f64], phi_next: &[f64], reward: f64, rho: f64) -> Transition {
    Transition {
        state: 0,
        action: 0,
        reward,
        next_state: 0,
        rho,
        phi: DVector::from_column_slice(phi),
        phi_next: DVector::from_column_slice(phi_next),
    }
}

pub fn rel_err(got: &DVector<f64>, want: &DVector<f64>) -> f64 {
    (got - want).norm() / want.norm().max(1e-300)
}
