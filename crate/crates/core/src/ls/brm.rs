use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::SINGULAR_TOL;
use crate::error::{Error, Result};
use crate::learner::{Algorithm, Learner};
use crate::sampling::Transition;

/// Off-policy BRM(λ), the recursive form of the least-squares fit of the
/// truncated λ-residuals. Each step is a rank-two Woodbury update of `c`.
#[derive(Debug, Clone)]
pub struct Brm {
    theta: DVector<f64>,
    c: DMatrix<f64>,
    /// `Σ_j (ρ̃_j^{i-1})²`
    y: f64,
    /// running sum of residual directions
    dir: DVector<f64>,
    /// running sum of weighted rewards
    ret: f64,
    last_rho: f64,
    lambda: f64,
    gamma: f64,
    steps: usize,
}

impl Brm {
    pub fn new(p: usize, lambda: f64, gamma: f64, init_scale: f64) -> Self {
        Brm {
            theta: DVector::zeros(p),
            c: DMatrix::identity(p, p) * init_scale,
            y: 0.0,
            dir: DVector::zeros(p),
            ret: 0.0,
            last_rho: 1.0,
            lambda,
            gamma,
            steps: 0,
        }
    }

    pub fn c_matrix(&self) -> &DMatrix<f64> {
        &self.c
    }
}

impl Learner for Brm {
    fn kind(&self) -> Algorithm {
        Algorithm::Brm
    }

    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>> {
        self.steps += 1;
        let k = self.gamma * self.lambda * self.last_rho;
        self.y = k * k * self.y + 1.0;
        let sy = self.y.sqrt();
        let dphi = t.delta_phi(self.gamma);
        let u = &dphi * sy;
        let v = &self.dir * (k / sy);
        let upv = &u + &v;
        let carry = k / sy * self.ret;
        let w = Vector2::new(sy * t.rho * t.reward + carry, -carry);

        // U = [u+v, v], Vᵀ rows = [(u+v)ᵀ, -vᵀ]
        let cu0 = &self.c * &upv;
        let cu1 = &self.c * &v;
        let g = Matrix2::new(
            1.0 + upv.dot(&cu0),
            upv.dot(&cu1),
            -v.dot(&cu0),
            1.0 - v.dot(&cu1),
        );
        let det = g.determinant();
        if !(det.abs() >= SINGULAR_TOL) {
            return Err(Error::SingularUpdate {
                learner: "brm",
                step: self.steps,
                detail: format!("2x2 Woodbury determinant {det:e}"),
            });
        }
        let g_inv = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det;

        let resid = w - Vector2::new(upv.dot(&self.theta), -v.dot(&self.theta));
        let coef = g_inv * resid;
        self.theta.axpy(coef[0], &cu0, 1.0);
        self.theta.axpy(coef[1], &cu1, 1.0);

        // C -= CU G⁻¹ VᵀC, with VᵀC rows (Cᵀ(u+v))ᵀ and -(Cᵀv)ᵀ
        let vc0 = self.c.tr_mul(&upv);
        let vc1 = -self.c.tr_mul(&v);
        let l0 = &cu0 * g_inv[(0, 0)] + &cu1 * g_inv[(1, 0)];
        let l1 = &cu0 * g_inv[(0, 1)] + &cu1 * g_inv[(1, 1)];
        self.c.ger(-1.0, &l0, &vc0, 1.0);
        self.c.ger(-1.0, &l1, &vc1, 1.0);

        self.dir *= k;
        self.dir.axpy(self.y, &dphi, 1.0);
        self.ret = k * self.ret + t.reward * t.rho * self.y;
        self.last_rho = t.rho;
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
    use crate::oracles::batch;
    use crate::testutil::{random_trajectory, rel_err, zero_rewards};

    #[test]
    fn zero_reward_stays_at_zero() {
        let traj = zero_rewards(random_trajectory(21, 200, false));
        let mut l = Brm::new(traj.n_features(), 0.9, traj.gamma, 1e3);
        run_all(&mut l, &traj.transitions).unwrap();
        assert_eq!(l.theta().amax(), 0.0);
    }

    #[test]
    fn lambda_zero_is_residual_least_squares() {
        let traj = random_trajectory(22, 100, true);
        let gamma = traj.gamma;
        let p = traj.n_features();
        let mut l = Brm::new(p, 0.0, gamma, 1e3);
        let mut gram = DMatrix::identity(p, p) * 1e-3;
        let mut rhs = DVector::zeros(p);
        for t in traj.iter() {
            let d = t.delta_phi(gamma);
            gram += &d * d.transpose();
            rhs += &d * (t.rho * t.reward);
            let direct = gram.clone().lu().solve(&rhs).unwrap();
            assert!(rel_err(l.step(t).unwrap(), &direct) < 1e-8);
        }
        assert_eq!(l.y, 1.0);
    }

    #[test]
    fn matches_batch_solution() {
        for (seed, lambda, off) in [(23, 0.4, true), (24, 0.9, false), (25, 0.9, true), (26, 1.0, false)] {
            let traj = random_trajectory(seed, 1000, off);
            let mut l = Brm::new(traj.n_features(), lambda, traj.gamma, 1e3);
            run_all(&mut l, &traj.transitions).unwrap();
            let direct = batch::batch_brm(&traj.transitions, lambda, traj.gamma, 1e-3).unwrap();
            assert!(rel_err(l.theta(), &direct) < 1e-7, "seed {seed}: {}", rel_err(l.theta(), &direct));
        }
    }

    #[test]
    fn c_matrix_is_inverse_of_regularized_gram() {
        let traj = random_trajectory(27, 300, true);
        let mut l = Brm::new(traj.n_features(), 0.5, traj.gamma, 1e3);
        run_all(&mut l, &traj.transitions).unwrap();
        let (a, _) = batch::brm_system(&traj.transitions, 0.5, traj.gamma);
        let p = traj.n_features();
        let prod = l.c_matrix() * (a + DMatrix::identity(p, p) * 1e-3);
        assert!((prod - DMatrix::identity(p, p)).amax() < 1e-6);
    }
}
