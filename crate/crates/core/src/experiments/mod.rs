//! Benchmark protocol: the err metric, grid search over meta-parameters,
//! multi-instance learning curves and λ-sensitivity sweeps.
//!
//! Every instance and trajectory seed is derived from one master seed, and
//! parallel work is always reduced in task order, so outputs do not depend
//! on the number of workers.

mod bench;
mod grid;
mod metric;
pub mod output;
mod presets;
mod spec;

pub use bench::{benchmark, AlgorithmSummary, BenchResult};
pub use grid::{
    evaluate_grid, grid_search, grid_study, lambda_sensitivity, select_best, sensitivity_rows, GridBest, GridPoint, GridStudy,
    SensitivityRow,
};
pub use metric::{err_metric, run_learner, value_error, window_mean, RunResult, DIVERGENCE_NORM};
pub use presets::{published_preset, ProblemSize};
pub use spec::{ExperimentSpec, Grid};

use crate::error::Result;
use crate::garnet::GarnetInstance;
use crate::rng::{self, Stream};
use crate::sampling::{sample_trajectory, Trajectory};

/// Instance `k` of an experiment: fresh dynamics, features and target policy.
pub fn instance(spec: &ExperimentSpec, k: usize) -> Result<GarnetInstance> {
    let seed = rng::derive_seed(spec.master_seed, Stream::Instance, k as u64);
    GarnetInstance::generate(&spec.garnet.with_seed(seed), spec.off_policy)
}

/// Trajectory `d` of an instance, seeded from the instance seed.
pub fn instance_trajectory(spec: &ExperimentSpec, inst: &GarnetInstance, d: usize, n: usize) -> Result<Trajectory> {
    sample_trajectory(
        &inst.mdp,
        &inst.behavior,
        &inst.target,
        &inst.features,
        n,
        rng::derive_seed(inst.spec.seed, Stream::Trajectory, d as u64),
        spec.start,
    )
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}
