use nalgebra::{DMatrix, DVector};

use super::sherman_morrison;
use crate::error::Result;
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;
use crate::traces::TraceState;

/// Off-policy LSPE(λ).
#[derive(Debug, Clone)]
pub struct Lspe {
    theta: DVector<f64>,
    /// `(I/scale + Σ φ_jφ_jᵀ)⁻¹`
    n: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    trace: TraceState,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Lspe {
    pub fn new(p: usize, lambda: f64, gamma: f64, init_scale: f64) -> Self {
        Lspe {
            theta: DVector::zeros(p),
            n: DMatrix::identity(p, p) * init_scale,
            a: DMatrix::zeros(p, p),
            b: DVector::zeros(p),
            trace: TraceState::new(p),
            lambda,
            gamma,
            steps: 0,
        }
    }

    pub fn n_matrix(&self) -> &DMatrix<f64> {
        &self.n
    }
}

impl Learner for Lspe {
    fn kind(&self) -> Algorithm {
        Algorithm::Lspe
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let z = self.trace.advance(&t.phi, self.lambda, self.gamma, t.rho);
        let dphi = t.delta_phi(self.gamma);
        self.a.ger(1.0, z, &dphi, 1.0);
        self.b.axpy(t.rho * t.reward, z, 1.0);
        sherman_morrison(&mut self.n, &t.phi, &t.phi, "lspe", self.steps)?;
        let resid = &self.b - &self.a * &self.theta;
        self.theta += &self.n * resid;
        Ok(&self.theta)
    }

    fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    fn steps(&self) -> usize {
        self.steps
    }
}
