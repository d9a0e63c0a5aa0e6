use nalgebra::DVector;

use crate::error::Result;
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;
use crate::traces::{RateSchedule, TraceState};

/// Off-policy TD(λ).
#[derive(Debug, Clone)]
pub struct Td {
    theta: DVector<f64>,
    trace: TraceState,
    alpha: RateSchedule,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Td {
    pub fn new(p: usize, lambda: f64, gamma: f64, alpha: RateSchedule) -> Self {
        Td {
            theta: DVector::zeros(p),
            trace: TraceState::new(p),
            alpha,
            lambda,
            gamma,
            steps: 0,
        }
    }
}

impl Learner for Td {
    fn kind(&self) -> Algorithm {
        Algorithm::Td
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let delta = t.td_error(&self.theta, self.gamma);
        let z = self.trace.advance(&t.phi, self.lambda, self.gamma, t.rho);
        let incr = z * delta;
        self.theta += incr * self.alpha.rate(self.steps);
        Ok(&self.theta)
    }

    fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    fn steps(&self) -> usize {
        self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::run_all;
    use crate::testutil::{random_trajectory, rel_err, zero_rewards};

    #[test]
    fn zero_reward_stays_at_zero() {
        let traj = zero_rewards(random_trajectory(31, 200, true));
        let mut l = Td::new(traj.n_features(), 0.9, traj.gamma, RateSchedule::linear(0.1, 100.0));
        run_all(&mut l, &traj.transitions).unwrap();
        assert_eq!(l.theta().amax(), 0.0);
    }

    #[test]
    fn lambda_zero_on_policy_is_classical_td() {
        let traj = random_trajectory(32, 200, false);
        let gamma = traj.gamma;
        let sched = RateSchedule::linear(0.5, 10.0);
        let mut l = Td::new(traj.n_features(), 0.0, gamma, sched);
        let mut theta = DVector::zeros(traj.n_features());
        for (i, t) in traj.iter().enumerate() {
            let err = t.reward + gamma * t.phi_next.dot(&theta) - t.phi.dot(&theta);
            theta += &t.phi * (sched.rate(i + 1) * err);
            assert!(rel_err(l.step(t).unwrap(), &theta) < 1e-12);
        }
    }
}
