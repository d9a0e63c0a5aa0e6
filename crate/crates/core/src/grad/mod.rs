//! Stochastic-gradient learners, `O(p)` per step.

mod gbrm;
mod gtd2;
mod td;
mod tdc;

pub use gbrm::Gbrm;
pub use gtd2::Gtd2;
pub use td::Td;
pub use tdc::Tdc;

use nalgebra::DVector;

use crate::sampling::Transition;
use crate::traces::RateSchedule;

/// Auxiliary weights shared by TDC and GTD2:
/// `w ← w + β_i (z_i (ρ_i r_i − Δφ_iᵀθ) − φ_i (φ_iᵀ w))`.
#[derive(Debug, Clone)]
pub(crate) struct AuxWeights {
    pub w: DVector<f64>,
    pub beta: RateSchedule,
}

impl AuxWeights {
    pub fn new(p: usize, beta: RateSchedule) -> Self {
        AuxWeights {
            w: DVector::zeros(p),
            beta,
        }
    }

    pub fn update(&mut self, i: usize, t: &Transition, z: &DVector<f64>, theta: &DVector<f64>, gamma: f64) {
        let err = t.td_error(theta, gamma);
        let proj = t.phi.dot(&self.w);
        let incr = z * err - &t.phi * proj;
        self.w.axpy(self.beta.rate(i), &incr, 1.0);
    }
}
