use nalgebra::DVector;
use serde::Serialize;

use crate::garnet::FeatureMap;
use crate::learner::{self, Algorithm, Hyper};
use crate::sampling::Transition;

/// A run is declared diverged once `‖θ‖` exceeds this or turns non-finite.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// `‖Φθ − V‖₂`.
pub fn value_error(features: &FeatureMap, theta: &DVector<f64>, v_true: &DVector<f64>) -> f64 {
    (features.values(theta) - v_true).norm()
}

/// Mean of `errors[i]` over `i ∈ (L/2, L]` (1-based), i.e. the last
/// `L − ⌊L/2⌋` entries.
pub fn window_mean(errors: &[f64]) -> f64 {
    let start = errors.len() / 2;
    let tail = &errors[start..];
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Averaged second-half value error over several θ sequences.
pub fn err_metric(curves: &[Vec<DVector<f64>>], features: &FeatureMap, v_true: &DVector<f64>) -> f64 {
    let per: Vec<f64> = curves
        .iter()
        .map(|thetas| {
            let errs: Vec<f64> = thetas.iter().map(|t| value_error(features, t, v_true)).collect();
            window_mean(&errs)
        })
        .collect();
    per.iter().sum::<f64>() / per.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    /// Value error after every step; empty unless requested.
    pub curve: Vec<f64>,
    /// Second-half average value error, `+∞` when diverged.
    pub err: f64,
    /// Value error after the last step, `+∞` when diverged.
    pub final_error: f64,
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Runs one learner over `ts`, tracking `‖Φθ_i − V^π‖₂`.
pub fn run_learner(
    kind: Algorithm,
    hyper: &Hyper,
    ts: &[Transition],
    gamma: f64,
    features: &FeatureMap,
    v_true: &DVector<f64>,
    keep_curve: bool,
) -> RunResult {
    let n = ts.len();
    let start = n / 2;
    let mut curve = Vec::with_capacity(if keep_curve { n } else { 0 });
    let mut window_sum = 0.0;
    let mut last = f64::NAN;
    let mut failure = None;
    let mut diverged = false;

    match learner::create(kind, hyper, features.n_features(), gamma) {
        Err(e) => {
            failure = Some(e.to_string());
            diverged = true;
        }
        Ok(mut l) => {
            for (i, t) in ts.iter().enumerate() {
                let theta = match l.step(t) {
                    Ok(th) => th,
                    Err(e) => {
                        failure = Some(e.to_string());
                        diverged = true;
                        break;
                    }
                };
                let norm = theta.norm();
                if !(norm <= DIVERGENCE_NORM) {
                    diverged = true;
                    break;
                }
                if keep_curve || i >= start || i + 1 == n {
                    let e = value_error(features, theta, v_true);
                    if keep_curve {
                        curve.push(e);
                    }
                    if i >= start {
                        window_sum += e;
                    }
                    last = e;
                }
            }
        }
    }

    if diverged {
        if keep_curve {
            curve.resize(n, f64::INFINITY);
        }
        return RunResult {
            algorithm: kind,
            hyper: *hyper,
            curve,
            err: f64::INFINITY,
            final_error: f64::INFINITY,
            diverged,
            failure,
        };
    }
    RunResult {
        algorithm: kind,
        hyper: *hyper,
        curve,
        err: window_sum / (n - start) as f64,
        final_error: last,
        diverged,
        failure,
    }
}
