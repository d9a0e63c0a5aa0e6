//! Recursive least-squares learners, `O(p²)` per step.
//!
//! All four start from `θ₀ = 0` and an initial matrix `scale · I`, which is
//! the same as adding `I / scale` to the batch system each of them solves.

mod brm;
mod fpkf;
mod lspe;
mod lstd;

pub use brm::Brm;
pub use fpkf::Fpkf;
pub use lspe::Lspe;
pub use lstd::Lstd;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const SINGULAR_TOL: f64 = 1e-12;

/// Rank-one inverse update `M ← (M⁻¹ + u vᵀ)⁻¹`. Returns the gain
/// `M_old u / (1 + vᵀ M_old u)`.
pub(crate) fn sherman_morrison(
    m: &mut DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    learner: &'static str,
    step: usize,
) -> Result<DVector<f64>> {
    let mu = &*m * u;
    let denom = 1.0 + v.dot(&mu);
    if !(denom.abs() >= SINGULAR_TOL) {
        return Err(Error::SingularUpdate {
            learner,
            step,
            detail: format!("Sherman-Morrison denominator {denom:e}"),
        });
    }
    let gain = mu / denom;
    let vm = m.tr_mul(v);
    m.ger(-1.0, &gain, &vm, 1.0);
    Ok(gain)
}
