//! Browser bindings. Each export takes a JSON request and returns a JSON
//! response; the plain functions underneath are what the tests exercise.

use std::collections::BTreeMap;

use offtrace::experiments::{self, run_learner, ExperimentSpec, Grid};
use offtrace::mdp::{exact_value, max_importance_weight};
use offtrace::oracles::model::{least_squares_fit, model_quantities};
use offtrace::{Algorithm, GarnetSpec, Hyper};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Upper bound on work per request so the page stays responsive.
const MAX_STEPS: usize = 200_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Request {
    pub states: usize,
    pub actions: usize,
    pub branching: usize,
    pub features: usize,
    pub seed: u64,
    pub off_policy: bool,
    pub steps: usize,
    /// Points per curve.
    pub points: usize,
    pub trajectories: usize,
    pub algorithms: Vec<Algorithm>,
    /// Explicit meta-parameters; missing ones use presets or defaults.
    pub hypers: BTreeMap<Algorithm, Hyper>,
}

impl Default for Request {
    fn default() -> Self {
        let g = GarnetSpec::small(0);
        Request {
            states: g.n_states,
            actions: g.n_actions,
            branching: g.branching,
            features: g.n_features,
            seed: 0,
            off_policy: false,
            steps: 10_000,
            points: 200,
            trajectories: 3,
            algorithms: Algorithm::ALL.to_vec(),
            hypers: BTreeMap::new(),
        }
    }
}

impl Request {
    fn parse(json: &str) -> Result<Self, String> {
        let r: Request = if json.trim().is_empty() {
            Request::default()
        } else {
            serde_json::from_str(json).map_err(|e| e.to_string())?
        };
        if r.steps == 0 || r.steps * r.trajectories.max(1) > MAX_STEPS {
            return Err(format!("steps × trajectories must be in 1..={MAX_STEPS}"));
        }
        if r.points == 0 || r.trajectories == 0 || r.algorithms.is_empty() {
            return Err("points, trajectories and algorithms must be non-empty".into());
        }
        Ok(r)
    }

    fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            garnet: GarnetSpec::new(self.states, self.actions, self.branching, self.features, 0),
            off_policy: self.off_policy,
            master_seed: self.seed,
            algorithms: self.algorithms.clone(),
            trajectories: self.trajectories,
            steps: self.steps,
            hypers: self.hypers.clone(),
            ..ExperimentSpec::default()
        }
    }
}

fn json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curves {
    steps: Vec<usize>,
    /// Value error `‖Φθ − V‖₂`; `null` after divergence.
    curves: BTreeMap<Algorithm, Vec<f64>>,
    hypers: BTreeMap<Algorithm, Hyper>,
    floor: f64,
}

/// Learning curves of every requested algorithm on one shared trajectory.
pub fn learning_curves_json(request: &str) -> Result<String, String> {
    let req = Request::parse(request)?;
    let spec = req.spec();
    let inst = experiments::instance(&spec, 0).map_err(|e| e.to_string())?;
    let v = exact_value(&inst.mdp, &inst.target).map_err(|e| e.to_string())?;
    let traj = experiments::instance_trajectory(&spec, &inst, 0, req.steps).map_err(|e| e.to_string())?;
    let floor = least_squares_fit(&inst.features, &v)
        .map(|t| (inst.features.values(&t) - &v).norm())
        .map_err(|e| e.to_string())?;
    let hypers = spec.resolved_hypers();
    let stride = req.steps.div_ceil(req.points).max(1);
    let steps: Vec<usize> = (1..=req.steps).filter(|i| i % stride == 0 || *i == req.steps).collect();
    let curves = hypers
        .iter()
        .map(|(&a, h)| {
            let r = run_learner(a, h, &traj.transitions, traj.gamma, &inst.features, &v, true);
            (a, steps.iter().map(|&i| r.curve[i - 1]).collect())
        })
        .collect();
    json(&Curves {
        steps,
        curves,
        hypers,
        floor,
    })
}

#[derive(Serialize)]
struct SweepRow {
    algorithm: Algorithm,
    lambda: f64,
    err: f64,
}

/// err as a function of λ for least-squares learners, averaged over
/// `trajectories` runs on one instance.
pub fn lambda_sweep_json(request: &str) -> Result<String, String> {
    let req = Request::parse(request)?;
    let mut spec = req.spec();
    spec.algorithms.retain(|a| a.is_least_squares());
    if spec.algorithms.is_empty() {
        return Err("the sweep runs least-squares learners only".into());
    }
    spec.grid = Grid::default();
    let points = experiments::evaluate_grid(&spec, 0).map_err(|e| e.to_string())?;
    let rows: Vec<SweepRow> = points
        .iter()
        .map(|p| SweepRow {
            algorithm: p.algorithm,
            lambda: p.hyper.lambda,
            err: p.err,
        })
        .collect();
    json(&rows)
}

#[derive(Serialize)]
struct LambdaRow {
    lambda: f64,
    trace_bound: f64,
    contraction_radius: f64,
    /// `‖Φθ* − V‖₂` at the projected fixed point.
    fixed_point_error: Option<f64>,
    /// `‖Φθ̃ − V‖₂` at the residual-minimisation limit, when it exists.
    residual_error: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    states: usize,
    actions: usize,
    features: usize,
    gamma: f64,
    on_policy: bool,
    max_importance_weight: f64,
    value_norm: f64,
    projection_floor: f64,
    lambdas: Vec<LambdaRow>,
}

/// Model-based facts about the instance a request describes.
pub fn garnet_summary_json(request: &str) -> Result<String, String> {
    let req = Request::parse(request)?;
    let spec = req.spec();
    let inst = experiments::instance(&spec, 0).map_err(|e| e.to_string())?;
    let v = exact_value(&inst.mdp, &inst.target).map_err(|e| e.to_string())?;
    let floor = least_squares_fit(&inst.features, &v)
        .map(|t| (inst.features.values(&t) - &v).norm())
        .map_err(|e| e.to_string())?;
    let mut lambdas = Vec::new();
    for &lambda in &Grid::default().lambdas {
        let mq = model_quantities(&inst.mdp, &inst.target, &inst.behavior, &inst.features, lambda)
            .map_err(|e| e.to_string())?;
        lambdas.push(LambdaRow {
            lambda,
            trace_bound: mq.trace_bound,
            contraction_radius: mq.contraction_radius,
            fixed_point_error: mq.theta_star().ok().map(|t| (inst.features.values(&t) - &v).norm()),
            residual_error: match mq.residual {
                Some(_) => mq.theta_residual().ok().map(|t| (inst.features.values(&t) - &v).norm()),
                None => None,
            },
        });
    }
    json(&Summary {
        states: inst.spec.n_states,
        actions: inst.spec.n_actions,
        features: inst.spec.n_features,
        gamma: inst.mdp.gamma(),
        on_policy: inst.is_on_policy(),
        max_importance_weight: max_importance_weight(&inst.target, &inst.behavior).map_err(|e| e.to_string())?,
        value_norm: v.norm(),
        projection_floor: floor,
        lambdas,
    })
}

#[wasm_bindgen]
pub fn learning_curves(request: &str) -> Result<String, JsValue> {
    learning_curves_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn lambda_sweep(request: &str) -> Result<String, JsValue> {
    lambda_sweep_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn garnet_summary(request: &str) -> Result<String, JsValue> {
    garnet_summary_json(request).map_err(|e| JsValue::from_str(&e))
}
