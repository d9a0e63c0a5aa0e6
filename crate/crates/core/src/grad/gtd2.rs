use nalgebra::DVector;

use super::AuxWeights;
use crate::error::Result;
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;
use crate::traces::{RateSchedule, TraceState};

/// Off-policy GTD2(λ).
#[derive(Debug, Clone)]
pub struct Gtd2 {
    theta: DVector<f64>,
    aux: AuxWeights,
    trace: TraceState,
    alpha: RateSchedule,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Gtd2 {
    pub fn new(p: usize, lambda: f64, gamma: f64, alpha: RateSchedule, beta: RateSchedule) -> Self {
        Gtd2 {
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

impl Learner for Gtd2 {
    fn kind(&self) -> Algorithm {
        Algorithm::Gtd2
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let i = self.steps;
        let z = self.trace.advance(&t.phi, self.lambda, self.gamma, t.rho);
        let w = &self.aux.w;
        let mut incr = &t.phi * t.phi.dot(w);
        let corr = self.gamma * t.rho * (1.0 - self.lambda);
        if corr != 0.0 {
            incr.axpy(-corr * z.dot(w), &t.phi_next, 1.0);
        }
        self.theta.axpy(self.alpha.rate(i), &incr, 1.0);
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
