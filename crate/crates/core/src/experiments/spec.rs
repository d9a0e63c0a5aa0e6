use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garnet::GarnetSpec;
use crate::learner::{Algorithm, Hyper};
use crate::sampling::StartState;
use crate::traces::RateSchedule;

/// Meta-parameter grid. β axes are only swept for learners with auxiliary
/// weights; least-squares learners only sweep λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub lambdas: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub alphac: Vec<f64>,
    pub beta0: Vec<f64>,
    pub betac: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            lambdas: vec![0.0, 0.4, 0.7, 0.9, 1.0],
            alpha0: vec![1e-2, 1e-1, 1.0],
            alphac: vec![1e1, 1e2, 1e3],
            beta0: vec![1e-2, 1e-1, 1.0],
            betac: vec![1e1, 1e2, 1e3],
        }
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl Grid {
    /// Grid points for `kind`, ordered by λ, then α₀, α_c, β₀, β_c, all
    /// ascending. The search keeps the first minimum, which gives the
    /// documented tie-break.
    pub fn points(&self, kind: Algorithm) -> Vec<Hyper> {
        let lambdas = sorted(&self.lambdas);
        let mut out = Vec::new();
        if kind.is_least_squares() {
            for &l in &lambdas {
                out.push(Hyper::least_squares(l));
            }
            return out;
        }
        let (a0s, acs) = (sorted(&self.alpha0), sorted(&self.alphac));
        let (b0s, bcs) = if kind.uses_beta() {
            (sorted(&self.beta0), sorted(&self.betac))
        } else {
            (vec![Hyper::default().beta.a0], vec![Hyper::default().beta.ac])
        };
        for &l in &lambdas {
            for &a0 in &a0s {
                for &ac in &acs {
                    for &b0 in &b0s {
                        for &bc in &bcs {
                            out.push(Hyper {
                                lambda: l,
                                alpha: RateSchedule::linear(a0, ac),
                                beta: RateSchedule::two_thirds(b0, bc),
                                init_scale: crate::DEFAULT_INIT_SCALE,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("grid.lambdas", &self.lambdas),
            ("grid.alpha0", &self.alpha0),
            ("grid.alphac", &self.alphac),
            ("grid.beta0", &self.beta0),
            ("grid.betac", &self.betac),
        ] {
            if v.is_empty() {
                return Err(Error::invalid(what, "empty"));
            }
        }
        Ok(())
    }
}

/// Full description of a grid search / benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    /// Problem shape. Its seed is ignored: instance seeds come from
    /// `master_seed`.
    pub garnet: GarnetSpec,
    pub off_policy: bool,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Trajectories per grid point.
    pub trajectories: usize,
    /// Length of grid-search trajectories.
    pub steps: usize,
    pub grid: Grid,
    /// Instances averaged by the λ-sensitivity sweep.
    pub sweep_instances: usize,
    /// Instances of the benchmark.
    pub instances: usize,
    pub bench_steps: usize,
    /// Meta-parameters for the benchmark; missing entries fall back to the
    /// published presets when the problem shape has one.
    pub hypers: BTreeMap<Algorithm, Hyper>,
    pub start: StartState,
    /// Keep one curve row every `curve_stride` steps in CSV output.
    pub curve_stride: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            garnet: GarnetSpec::small(0),
            off_policy: false,
            master_seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            trajectories: 10,
            steps: 10_000,
            grid: Grid::default(),
            sweep_instances: 1,
            instances: 100,
            bench_steps: 100_000,
            hypers: BTreeMap::new(),
            start: StartState::Stationary,
            curve_stride: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.garnet.validate()?;
        self.grid.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::invalid("algorithms", "empty"));
        }
        for (what, n) in [
            ("trajectories", self.trajectories),
            ("steps", self.steps),
            ("instances", self.instances),
            ("bench_steps", self.bench_steps),
            ("sweep_instances", self.sweep_instances),
            ("curve_stride", self.curve_stride),
        ] {
            if n == 0 {
                return Err(Error::invalid(what, "must be positive"));
            }
        }
        for h in self.hypers.values() {
            h.validate()?;
        }
        Ok(())
    }

    /// Reads JSON, or TOML when the extension is `.toml`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: ExperimentSpec = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?
        } else {
            serde_json::from_str(&text)?
        };
        spec.validate()?;
        Ok(spec)
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        super::output::short_hash(self)
    }

    /// Benchmark meta-parameters: explicit entries, then presets, then
    /// defaults.
    pub fn resolved_hypers(&self) -> BTreeMap<Algorithm, Hyper> {
        let preset = super::presets::ProblemSize::of(&self.garnet)
            .map(|size| super::presets::published_preset(size, self.off_policy));
        self.algorithms
            .iter()
            .map(|&a| {
                let h = self
                    .hypers
                    .get(&a)
                    .copied()
                    .or_else(|| preset.as_ref().and_then(|p| p.get(&a).copied()))
                    .unwrap_or_default();
                (a, h)
            })
            .collect()
    }
}
