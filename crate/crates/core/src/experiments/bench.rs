use std::collections::BTreeMap;

use serde::Serialize;

use super::{instance, instance_trajectory, par_map, run_learner, ExperimentSpec, RunResult};
use crate::error::Result;
use crate::learner::{Algorithm, Hyper};
use crate::mdp;

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    pub instances: usize,
    pub diverged: usize,
    /// Mean and sample std of the final value error over non-diverged
    /// instances.
    pub mean_final: f64,
    pub std_final: f64,
    pub mean_err: f64,
    /// `(instance, message)` for runs that stopped on an error.
    pub failures: Vec<(usize, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub steps: usize,
    pub stride: usize,
    pub algorithms: Vec<Algorithm>,
    /// 1-based step of each curve row.
    pub curve_steps: Vec<usize>,
    /// `mean[a][j]`: mean value error of algorithm `a` at `curve_steps[j]`
    /// over non-diverged instances; NaN when all diverged.
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
    pub summaries: Vec<AlgorithmSummary>,
    /// `finals[a][k]`: final value error of algorithm `a` on instance `k`.
    pub finals: Vec<Vec<f64>>,
}

impl BenchResult {
    pub fn summary(&self, kind: Algorithm) -> Option<&AlgorithmSummary> {
        self.summaries.iter().find(|s| s.algorithm == kind)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every algorithm on one shared trajectory per instance, over
/// `spec.instances` fresh instances. Per-instance failures are recorded, not
/// fatal.
pub fn benchmark(spec: &ExperimentSpec, hypers: &BTreeMap<Algorithm, Hyper>) -> Result<BenchResult> {
    spec.validate()?;
    let algorithms = spec.algorithms.clone();
    for a in &algorithms {
        hypers.get(a).copied().unwrap_or_default().validate()?;
    }
    let n = spec.bench_steps;
    let stride = spec.curve_stride;
    let curve_steps: Vec<usize> = (1..=n).filter(|i| i % stride == 0 || *i == n).collect();

    // Instances are run in bounded chunks so that only a few trajectories
    // are alive at once; each chunk is reduced in instance order.
    let chunk = std::thread::available_parallelism().map_or(1, |c| c.get()).max(1);
    let mut per_instance: Vec<Vec<RunResult>> = Vec::with_capacity(spec.instances);
    let ids: Vec<usize> = (0..spec.instances).collect();
    for block in ids.chunks(chunk) {
        let results = par_map(block, |&k| -> Result<Vec<RunResult>> {
            let inst = instance(spec, k)?;
            let v_true = mdp::exact_value(&inst.mdp, &inst.target)?;
            let tr = instance_trajectory(spec, &inst, 0, n)?;
            Ok(algorithms
                .iter()
                .map(|&a| {
                    let h = hypers.get(&a).copied().unwrap_or_default();
                    let mut r = run_learner(a, &h, &tr.transitions, tr.gamma, &inst.features, &v_true, true);
                    r.curve = curve_steps.iter().map(|&i| r.curve[i - 1]).collect();
                    r
                })
                .collect())
        });
        for r in results {
            per_instance.push(r?);
        }
    }

    let mut mean = Vec::new();
    let mut std = Vec::new();
    let mut summaries = Vec::new();
    let mut finals = Vec::new();
    for (j, &a) in algorithms.iter().enumerate() {
        let runs: Vec<&RunResult> = per_instance.iter().map(|rs| &rs[j]).collect();
        let ok: Vec<&RunResult> = runs.iter().copied().filter(|r| !r.diverged).collect();
        let (m, s): (Vec<f64>, Vec<f64>) = (0..curve_steps.len())
            .map(|c| mean_std(&ok.iter().map(|r| r.curve[c]).collect::<Vec<_>>()))
            .unzip();
        mean.push(m);
        std.push(s);
        let (mean_final, std_final) = mean_std(&ok.iter().map(|r| r.final_error).collect::<Vec<_>>());
        let (mean_err, _) = mean_std(&ok.iter().map(|r| r.err).collect::<Vec<_>>());
        summaries.push(AlgorithmSummary {
            algorithm: a,
            hyper: hypers.get(&a).copied().unwrap_or_default(),
            instances: runs.len(),
            diverged: runs.len() - ok.len(),
            mean_final,
            std_final,
            mean_err,
            failures: runs
                .iter()
                .enumerate()
                .filter_map(|(k, r)| r.failure.clone().map(|f| (k, f)))
                .collect(),
        });
        finals.push(runs.iter().map(|r| r.final_error).collect());
    }

    Ok(BenchResult {
        steps: n,
        stride,
        algorithms,
        curve_steps,
        mean,
        std,
        summaries,
        finals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garnet::GarnetSpec;

    fn spec() -> ExperimentSpec {
        ExperimentSpec {
            garnet: GarnetSpec::new(10, 3, 2, 5, 0),
            instances: 3,
            bench_steps: 250,
            curve_stride: 100,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn shapes_and_strided_rows() {
        let s = spec();
        let r = benchmark(&s, &s.resolved_hypers()).unwrap();
        assert_eq!(r.curve_steps, vec![100, 200, 250]);
        assert_eq!(r.mean.len(), 8);
        assert!(r.mean.iter().all(|m| m.len() == 3));
        assert!(r.finals.iter().all(|f| f.len() == 3));
        for (j, sm) in r.summaries.iter().enumerate() {
            if sm.diverged == 0 {
                let last = *r.mean[j].last().unwrap();
                assert!((last - sm.mean_final).abs() <= 1e-12 * sm.mean_final.max(1.0));
            }
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let s = spec();
        let h = s.resolved_hypers();
        let a = benchmark(&s, &h).unwrap();
        let b = benchmark(&s, &h).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn algorithms_share_the_trajectory() {
        // TD(1) and TDC(1) see the same stream, so their curves coincide.
        let mut s = spec();
        s.algorithms = vec![Algorithm::Td, Algorithm::Tdc];
        let h = Hyper::gradient(1.0, 0.1, 1e2);
        let hypers = BTreeMap::from([(Algorithm::Td, h), (Algorithm::Tdc, h)]);
        let r = benchmark(&s, &hypers).unwrap();
        assert_eq!(r.finals[0], r.finals[1]);
    }
}
