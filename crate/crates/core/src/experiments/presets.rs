//! Published meta-parameter selections for the two standard problem shapes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::garnet::GarnetSpec;
use crate::learner::{Algorithm, Hyper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemSize {
    Small,
    Big,
}

impl ProblemSize {
    /// Matches on shape only; the seed is irrelevant.
    pub fn of(spec: &GarnetSpec) -> Option<ProblemSize> {
        let shape = (spec.n_states, spec.n_actions, spec.branching, spec.n_features);
        let small = GarnetSpec::small(0);
        let big = GarnetSpec::big(0);
        if shape == (small.n_states, small.n_actions, small.branching, small.n_features) {
            Some(ProblemSize::Small)
        } else if shape == (big.n_states, big.n_actions, big.branching, big.n_features) {
            Some(ProblemSize::Big)
        } else {
            None
        }
    }
}

// (λ, α₀, α_c, β₀, β_c); NaN marks an unused entry.
type Row = (Algorithm, f64, f64, f64, f64, f64);
const X: f64 = f64::NAN;

const SMALL_ON: [Row; 8] = [
    (Algorithm::Lstd, 0.9, X, X, X, X),
    (Algorithm::Lspe, 0.9, X, X, X, X),
    (Algorithm::Fpkf, 1.0, X, X, X, X),
    (Algorithm::Brm, 0.9, X, X, X, X),
    (Algorithm::Td, 0.0, 1e-1, 1e3, X, X),
    (Algorithm::Gbrm, 0.7, 1e-1, 1e2, X, X),
    (Algorithm::Tdc, 0.9, 1e-1, 1e3, 1e-1, 1e3),
    (Algorithm::Gtd2, 0.7, 1e-1, 1e3, 1e-1, 1e3),
];

const BIG_ON: [Row; 8] = [
    (Algorithm::Lstd, 0.4, X, X, X, X),
    (Algorithm::Lspe, 0.7, X, X, X, X),
    (Algorithm::Fpkf, 1.0, X, X, X, X),
    (Algorithm::Brm, 0.9, X, X, X, X),
    (Algorithm::Td, 0.4, 1e-1, 1e3, X, X),
    (Algorithm::Gbrm, 0.9, 1e-1, 1e3, X, X),
    (Algorithm::Tdc, 0.9, 1e-1, 1e3, 1e-1, 1e3),
    (Algorithm::Gtd2, 0.9, 1e-2, 1e3, 1e-1, 1e3),
];

const SMALL_OFF: [Row; 8] = [
    (Algorithm::Lstd, 0.0, X, X, X, X),
    (Algorithm::Lspe, 0.0, X, X, X, X),
    (Algorithm::Fpkf, 0.9, X, X, X, X),
    (Algorithm::Brm, 1.0, X, X, X, X),
    (Algorithm::Td, 0.4, 1e-1, 1e2, X, X),
    (Algorithm::Gbrm, 1.0, 1e-2, 1e2, X, X),
    (Algorithm::Tdc, 1.0, 1e-2, 1e2, 1e-2, 1e1),
    (Algorithm::Gtd2, 0.7, 1e-1, 1e3, 1e-2, 1e1),
];

const BIG_OFF: [Row; 8] = [
    (Algorithm::Lstd, 0.0, X, X, X, X),
    (Algorithm::Lspe, 0.0, X, X, X, X),
    (Algorithm::Fpkf, 0.9, X, X, X, X),
    (Algorithm::Brm, 1.0, X, X, X, X),
    (Algorithm::Td, 0.4, 1e-1, 1e1, X, X),
    (Algorithm::Gbrm, 0.0, 1e-2, 1e1, X, X),
    (Algorithm::Tdc, 0.7, 1e-2, 1e3, 1e-2, 1e1),
    (Algorithm::Gtd2, 1.0, 1e-2, 1e1, 1e-1, 1e3),
];

/// The meta-parameters selected by grid search in the reference study, for
/// each problem shape and sampling regime.
pub fn published_preset(size: ProblemSize, off_policy: bool) -> BTreeMap<Algorithm, Hyper> {
    let rows = match (size, off_policy) {
        (ProblemSize::Small, false) => &SMALL_ON,
        (ProblemSize::Big, false) => &BIG_ON,
        (ProblemSize::Small, true) => &SMALL_OFF,
        (ProblemSize::Big, true) => &BIG_OFF,
    };
    rows.iter()
        .map(|&(kind, lambda, a0, ac, b0, bc)| {
            let mut h = if a0.is_nan() {
                Hyper::least_squares(lambda)
            } else {
                Hyper::gradient(lambda, a0, ac)
            };
            if !b0.is_nan() {
                h = h.with_beta(b0, bc);
            }
            (kind, h)
        })
        .collect()
}
