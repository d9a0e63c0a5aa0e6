use nalgebra::{DMatrix, DVector};

use super::sherman_morrison;
use crate::error::Result;
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;
use crate::traces::TraceState;

/// Off-policy FPKF(λ). Besides the usual trace it carries a matrix trace
/// `Z_i = γλρ_{i-1} Z_{i-1} + φ_i θ_{i-1}ᵀ` of past estimates.
#[derive(Debug, Clone)]
pub struct Fpkf {
    theta: DVector<f64>,
    n: DMatrix<f64>,
    z_mat: DMatrix<f64>,
    trace: TraceState,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Fpkf {
    pub fn new(p: usize, lambda: f64, gamma: f64, init_scale: f64) -> Self {
        Fpkf {
            theta: DVector::zeros(p),
            n: DMatrix::identity(p, p) * init_scale,
            z_mat: DMatrix::zeros(p, p),
            trace: TraceState::new(p),
            lambda,
            gamma,
            steps: 0,
        }
    }
}

impl Learner for Fpkf {
    fn kind(&self) -> Algorithm {
        Algorithm::Fpkf
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let decay = self.trace.decay(self.lambda, self.gamma);
        let z = self.trace.advance(&t.phi, self.lambda, self.gamma, t.rho);
        self.z_mat *= decay;
        self.z_mat.ger(1.0, &t.phi, &self.theta, 1.0);
        sherman_morrison(&mut self.n, &t.phi, &t.phi, "fpkf", self.steps)?;
        let dphi = t.delta_phi(self.gamma);
        let rhs = z * (t.rho * t.reward) - &self.z_mat * dphi;
        self.theta += &self.n * rhs;
        Ok(&self.theta)
    }

    fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    fn steps(&self) -> usize {
        self.steps
    }
}
