use nalgebra::{DMatrix, DVector};

use super::sherman_morrison;
use crate::error::Result;
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;
use crate::traces::TraceState;

/// Off-policy LSTD(λ). `m` tracks `(I/scale + Σ z_j Δφ_jᵀ)⁻¹`.
#[derive(Debug, Clone)]
pub struct Lstd {
    theta: DVector<f64>,
    m: DMatrix<f64>,
    trace: TraceState,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Lstd {
    pub fn new(p: usize, lambda: f64, gamma: f64, init_scale: f64) -> Self {
        Lstd {
            theta: DVector::zeros(p),
            m: DMatrix::identity(p, p) * init_scale,
            trace: TraceState::new(p),
            lambda,
            gamma,
            steps: 0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl Learner for Lstd {
    fn kind(&self) -> Algorithm {
        Algorithm::Lstd
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let z = self.trace.advance(&t.phi, self.lambda, self.gamma, t.rho);
        let dphi = t.delta_phi(self.gamma);
        let err = t.rho * t.reward - dphi.dot(&self.theta);
        let gain = sherman_morrison(&mut self.m, z, &dphi, "lstd", self.steps)?;
        self.theta.axpy(err, &gain, 1.0);
        Ok(&self.theta)
    }

    fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    fn steps(&self) -> usize {
        self.steps
    }
}
