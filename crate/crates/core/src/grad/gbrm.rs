use nalgebra::DVector;

use crate::error::Result;
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;
use crate::traces::{RateSchedule, TraceState};

/// Off-policy gBRM(λ): stochastic gradient on the λ-residual, with three
/// extra traces standing in for the product of two forward views.
#[derive(Debug, Clone)]
pub struct Gbrm {
    theta: DVector<f64>,
    trace: TraceState,
    /// `c_i = 1 + (γλρ_{i-1})² c_{i-1}`
    sq: f64,
    /// `ζ_i = γρ_i(1−λ)φ_{i+1}c_i + γλρ_{i-1}ζ_{i-1}`
    next_feat: DVector<f64>,
    /// `d_i = δ_i c_i + γλρ_{i-1} d_{i-1}`
    err_sum: f64,
    alpha: RateSchedule,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Gbrm {
    pub fn new(p: usize, lambda: f64, gamma: f64, alpha: RateSchedule) -> Self {
        Gbrm {
            theta: DVector::zeros(p),
            trace: TraceState::new(p),
            sq: 0.0,
            next_feat: DVector::zeros(p),
            err_sum: 0.0,
            alpha,
            lambda,
            gamma,
            steps: 0,
        }
    }

    /// Current `(c, ζ, d)` traces.
    pub fn traces(&self) -> (f64, &DVector<f64>, f64) {
        (self.sq, &self.next_feat, self.err_sum)
    }

    pub fn eligibility(&self) -> &DVector<f64> {
        &self.trace.z
    }
}

impl Learner for Gbrm {
    fn kind(&self) -> Algorithm {
        Algorithm::Gbrm
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let k = self.trace.decay(self.lambda, self.gamma);
        let delta = t.td_error(&self.theta, self.gamma);
        let corr = self.gamma * t.rho * (1.0 - self.lambda);

        let z = self.trace.advance(&t.phi, self.lambda, self.gamma, t.rho);
        self.sq = 1.0 + k * k * self.sq;
        self.next_feat *= k;
        if corr != 0.0 {
            self.next_feat.axpy(corr * self.sq, &t.phi_next, 1.0);
        }
        self.err_sum = delta * self.sq + k * self.err_sum;

        let mut dir = z - &self.next_feat;
        if corr != 0.0 {
            dir.axpy(corr * self.sq, &t.phi_next, 1.0);
        }
        let mut incr = dir * delta;
        if corr != 0.0 {
            incr.axpy(-self.err_sum * corr, &t.phi_next, 1.0);
        }
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
    use crate::grad::Td;
    use crate::testutil::{random_trajectory, rel_err};

    #[test]
    fn lambda_one_is_td_one() {
        let traj = random_trajectory(51, 2000, true);
        let a = RateSchedule::linear(0.1, 100.0);
        let mut g = Gbrm::new(traj.n_features(), 1.0, traj.gamma, a);
        let mut td = Td::new(traj.n_features(), 1.0, traj.gamma, a);
        for t in traj.iter() {
            assert_eq!(g.step(t).unwrap(), td.step(t).unwrap());
        }
        assert_eq!(g.traces().1.amax(), 0.0);
    }

    #[test]
    fn lambda_zero_on_policy_is_residual_gradient() {
        let traj = random_trajectory(52, 300, false);
        let gamma = traj.gamma;
        let a = RateSchedule::linear(0.2, 50.0);
        let mut g = Gbrm::new(traj.n_features(), 0.0, gamma, a);
        let mut theta = DVector::zeros(traj.n_features());
        for (i, t) in traj.iter().enumerate() {
            let delta = t.reward + gamma * t.phi_next.dot(&theta) - t.phi.dot(&theta);
            theta += (&t.phi - &t.phi_next * gamma) * (a.rate(i + 1) * delta);
            assert!(rel_err(g.step(t).unwrap(), &theta) < 1e-12);
        }
    }

    #[test]
    fn traces_match_unrolled_sums() {
        let traj = random_trajectory(53, 10, true);
        let (lambda, gamma) = (0.6, traj.gamma);
        let ts = &traj.transitions;
        let mut g = Gbrm::new(traj.n_features(), lambda, gamma, RateSchedule::linear(0.05, 10.0));
        let mut deltas = Vec::new();
        for (i, t) in ts.iter().enumerate() {
            deltas.push(t.td_error(g.theta(), gamma));
            g.step(t).unwrap();
            // weight carried from step k to step j: Π_{m=k}^{j-1} γλρ_m
            let w = |k: usize, j: usize| ts[k..j].iter().map(|x| gamma * lambda * x.rho).product::<f64>();
            let cs: Vec<f64> = (0..=i).map(|j| (0..=j).map(|k| w(k, j).powi(2)).sum()).collect();
            let c = cs[i];
            let d: f64 = (0..=i).map(|j| w(j, i) * deltas[j] * cs[j]).sum();
            let mut zeta = DVector::zeros(traj.n_features());
            for j in 0..=i {
                zeta += &ts[j].phi_next * (w(j, i) * gamma * ts[j].rho * (1.0 - lambda) * cs[j]);
            }
            let (gc, gz, gd) = g.traces();
            assert!((gc - c).abs() < 1e-12 * c);
            assert!((gd - d).abs() < 1e-12 * (1.0 + d.abs()));
            assert!((gz - &zeta).amax() < 1e-12 * (1.0 + zeta.amax()));
        }
    }
}
