use nalgebra::DVector;

use super::AuxWeights;
use crate::error::Result;
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;
use crate::traces::{RateSchedule, TraceState};

/// Off-policy TDC(λ), also known as GQ(λ).
#[derive(Debug, Clone)]
pub struct Tdc {
    theta: DVector<f64>,
    aux: AuxWeights,
    trace: TraceState,
    alpha: RateSchedule,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Tdc {
    pub fn new(p: usize, lambda: f64, gamma: f64, alpha: RateSchedule, beta: RateSchedule) -> Self {
        Tdc {
            theta: DVector::zeros(p),
            aux: AuxWeights::new(p, beta),
            trace: TraceState::new(p),
            alpha,
            lambda,
            gamma,
            steps: 0,
        }
    }

    pub fn aux_weights(&self) -> &DVector<f64> {
        &self.aux.w
    }
}

impl Learner for Tdc {
    fn kind(&self) -> Algorithm {
        Algorithm::Tdc
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let i = self.steps;
        let delta = t.td_error(&self.theta, self.gamma);
        let z = self.trace.advance(&t.phi, self.lambda, self.gamma, t.rho);
        let mut incr = z * delta;
        let corr = self.gamma * t.rho * (1.0 - self.lambda);
        if corr != 0.0 {
            incr.axpy(-corr * z.dot(&self.aux.w), &t.phi_next, 1.0);
        }
        self.theta += incr * self.alpha.rate(i);
        // auxiliary update sees the new θ
        self.aux.update(i, t, z, &self.theta, self.gamma);
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
    use crate::grad::Td;
    use crate::learner::run_all;
    use crate::testutil::{random_trajectory, transition};

    #[test]
    fn lambda_one_is_td_one() {
        let traj = random_trajectory(41, 2000, true);
        let a = RateSchedule::linear(0.1, 100.0);
        let b = RateSchedule::two_thirds(0.5, 10.0);
        let mut tdc = Tdc::new(traj.n_features(), 1.0, traj.gamma, a, b);
        let mut td = Td::new(traj.n_features(), 1.0, traj.gamma, a);
        for t in traj.iter() {
            assert_eq!(tdc.step(t).unwrap(), td.step(t).unwrap());
        }
        assert!(tdc.aux_weights().amax() > 0.0);
    }

    #[test]
    fn single_step_by_hand() {
        // λ = 0, γ = 0.5, α = β = 1 on the first step
        let t = transition(&[1.0, 2.0], &[0.5, 0.0], 3.0, 2.0);
        let one = RateSchedule::linear(1.0, f64::MAX);
        let mut l = Tdc::new(2, 0.0, 0.5, one, RateSchedule::two_thirds(1.0, f64::MAX));
        // δ = ρr − φᵀ0 = 6, z = φ, w₀ = 0 ⇒ θ₁ = 6 φ = (6, 12)
        let th = l.step(&t).unwrap().clone();
        assert_eq!(th, DVector::from_vec(vec![6.0, 12.0]));
        // δ(θ₁) = 6 − (6 + 24) + 0.5·2·(3) = −21; w₁ = φ·δ(θ₁) = (−21, −42)
        assert_eq!(l.aux_weights(), &DVector::from_vec(vec![-21.0, -42.0]));
    }

    #[test]
    fn steps_are_finite_on_random_data() {
        let traj = random_trajectory(42, 500, true);
        let mut l = Tdc::new(
            traj.n_features(),
            0.4,
            traj.gamma,
            RateSchedule::linear(0.01, 100.0),
            RateSchedule::two_thirds(0.1, 100.0),
        );
        let th = run_all(&mut l, &traj.transitions).unwrap();
        assert!(th.iter().all(|t| t.iter().all(|x| x.is_finite())));
    }
}
