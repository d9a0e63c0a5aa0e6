//! Off-policy policy evaluation with eligibility traces and linear function
//! approximation on finite MDPs.
//!
//! The crate ships eight learners, all consuming the same [`Transition`]
//! stream and exposing the uniform [`Learner`] interface:
//!
//! | family        | gradient (O(p))       | least squares (O(p²)) |
//! |---------------|-----------------------|-----------------------|
//! | bootstrapping | [`grad::Td`]          | [`ls::Fpkf`]          |
//! | residual      | [`grad::Gbrm`]        | [`ls::Brm`]           |
//! | projected FP  | [`grad::Tdc`], [`grad::Gtd2`] | [`ls::Lstd`], [`ls::Lspe`] |
//!
//! Alongside them live exact model-based solvers ([`mdp`]), a Garnet
//! generator ([`garnet`]), independent reference computations used for
//! validation ([`oracles`]) and the benchmark harness ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod garnet;
pub mod grad;
pub mod learner;
pub mod ls;
pub mod mdp;
pub mod oracles;
pub mod problem;
pub mod rng;
pub mod sampling;
pub mod traces;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use garnet::{FeatureMap, GarnetSpec};
pub use learner::{Algorithm, Hyper, Learner};
pub use mdp::{InducedChain, Mdp, Policy};
pub use sampling::{StartState, Trajectory, Transition};
pub use traces::{RateMode, RateSchedule, TraceState};

/// Discount factor used throughout the Garnet benchmarks.
pub const DEFAULT_GAMMA: f64 = 0.95;

/// Scale of the initial matrices `M₀ = N₀ = C₀ = scale · I` of the
/// least-squares learners.
pub const DEFAULT_INIT_SCALE: f64 = 1e3;
