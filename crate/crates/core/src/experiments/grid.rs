use serde::Serialize;

use super::{instance, instance_trajectory, par_map, run_learner, ExperimentSpec};
use crate::error::Result;
use crate::learner::{Algorithm, Hyper};
use crate::mdp;

/// One meta-parameter combination scored on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    /// Mean err over the shared trajectories, `+∞` if any run diverged.
    pub err: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridBest {
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    pub err: f64,
    /// Every combination diverged; `hyper` is then just the first point.
    pub all_diverged: bool,
}

/// Best err reachable at a fixed λ, minimised over the other axes.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityRow {
    pub algorithm: Algorithm,
    pub lambda: f64,
    /// Median over the sweep instances.
    pub err: f64,
    /// Instances where every combination at this λ diverged.
    pub diverged_instances: usize,
}

/// Everything a grid run produces.
#[derive(Debug, Clone, Serialize)]
pub struct GridStudy {
    /// Selected on instance 0.
    pub best: Vec<GridBest>,
    pub sensitivity: Vec<SensitivityRow>,
    /// All points of instance 0, in grid order.
    pub points: Vec<GridPoint>,
}

/// Scores every grid point of every requested algorithm on instance `k`.
/// All points share the same `spec.trajectories` trajectories.
pub fn evaluate_grid(spec: &ExperimentSpec, k: usize) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    let inst = instance(spec, k)?;
    let v_true = mdp::exact_value(&inst.mdp, &inst.target)?;
    let gamma = inst.mdp.gamma();
    let trajs = (0..spec.trajectories)
        .map(|d| instance_trajectory(spec, &inst, d, spec.steps))
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(Algorithm, Hyper)> = spec
        .algorithms
        .iter()
        .flat_map(|&a| spec.grid.points(a).into_iter().map(move |h| (a, h)))
        .collect();

    Ok(par_map(&tasks, |&(algorithm, hyper)| {
        let mut sum = 0.0;
        let mut diverged = false;
        for tr in &trajs {
            let r = run_learner(algorithm, &hyper, &tr.transitions, gamma, &inst.features, &v_true, false);
            if r.diverged || !r.err.is_finite() {
                diverged = true;
                break;
            }
            sum += r.err;
        }
        GridPoint {
            algorithm,
            hyper,
            err: if diverged { f64::INFINITY } else { sum / trajs.len() as f64 },
            diverged,
        }
    }))
}

/// First minimum per algorithm, in the order algorithms first appear.
pub fn select_best(points: &[GridPoint]) -> Vec<GridBest> {
    let mut out: Vec<GridBest> = Vec::new();
    for p in points {
        match out.iter_mut().find(|b| b.algorithm == p.algorithm) {
            None => out.push(GridBest {
                algorithm: p.algorithm,
                hyper: p.hyper,
                err: p.err,
                all_diverged: p.diverged,
            }),
            Some(b) => {
                if p.err < b.err {
                    b.hyper = p.hyper;
                    b.err = p.err;
                }
                b.all_diverged &= p.diverged;
            }
        }
    }
    out
}

/// Per algorithm and λ, the minimum err over the remaining axes, then the
/// median over instances. The median keeps one diverged or heavy-tailed
/// instance from deciding the curve. Rows follow grid order.
pub fn sensitivity_rows(per_instance: &[Vec<GridPoint>]) -> Vec<SensitivityRow> {
    let mut keys: Vec<(Algorithm, f64)> = Vec::new();
    if let Some(first) = per_instance.first() {
        for p in first {
            if !keys.iter().any(|&(a, l)| a == p.algorithm && l == p.hyper.lambda) {
                keys.push((p.algorithm, p.hyper.lambda));
            }
        }
    }
    keys.into_iter()
        .map(|(algorithm, lambda)| {
            let bests: Vec<f64> = per_instance
                .iter()
                .map(|pts| {
                    pts.iter()
                        .filter(|p| p.algorithm == algorithm && p.hyper.lambda == lambda)
                        .map(|p| p.err)
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            SensitivityRow {
                algorithm,
                lambda,
                err: median(bests.clone()),
                diverged_instances: bests.iter().filter(|e| e.is_infinite()).count(),
            }
        })
        .collect()
}

/// Middle value, or the mean of the two middle values; `+∞` sorts last.
pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Grid search on instance 0.
pub fn grid_search(spec: &ExperimentSpec) -> Result<Vec<GridBest>> {
    Ok(select_best(&evaluate_grid(spec, 0)?))
}

/// λ-sensitivity over `spec.sweep_instances` instances.
pub fn lambda_sensitivity(spec: &ExperimentSpec) -> Result<Vec<SensitivityRow>> {
    let per = (0..spec.sweep_instances)
        .map(|k| evaluate_grid(spec, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(sensitivity_rows(&per))
}

/// Grid search and λ-sensitivity sharing the instance-0 evaluation.
pub fn grid_study(spec: &ExperimentSpec) -> Result<GridStudy> {
    let per = (0..spec.sweep_instances)
        .map(|k| evaluate_grid(spec, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridStudy {
        best: select_best(&per[0]),
        sensitivity: sensitivity_rows(&per),
        points: per[0].clone(),
    })
}
