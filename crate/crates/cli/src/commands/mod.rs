pub mod oracle;
pub mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::bail;
use offtrace::experiments::{self, output, ExperimentSpec};
use offtrace::garnet::mixed_policy;
use offtrace::problem::Problem;
use offtrace::rng::{derive_seed, Stream};
use offtrace::{Algorithm, Hyper};
use serde::Serialize;

use crate::opts::{ExperimentOpts, GarnetOpts};

/// Seeds an experiment will use, logged next to its outputs.
#[derive(Serialize)]
struct DerivedSeeds {
    instance_seeds: Vec<u64>,
    /// Trajectory seeds of instance 0 (grid-search trajectories; the
    /// benchmark uses trajectory 0 of every instance).
    trajectory_seeds: Vec<u64>,
}

fn derived_seeds(spec: &ExperimentSpec, instances: usize, trajectories: usize) -> DerivedSeeds {
    let instance_seeds: Vec<u64> = (0..instances as u64)
        .map(|k| derive_seed(spec.master_seed, Stream::Instance, k))
        .collect();
    let first = instance_seeds[0];
    DerivedSeeds {
        trajectory_seeds: (0..trajectories as u64)
            .map(|d| derive_seed(first, Stream::Trajectory, d))
            .collect(),
        instance_seeds,
    }
}

#[derive(Serialize)]
struct ExperimentLog<'a> {
    command: &'static str,
    version: &'static str,
    spec_hash: String,
    spec: &'a ExperimentSpec,
    seeds: DerivedSeeds,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypers: Option<&'a BTreeMap<Algorithm, Hyper>>,
}

pub fn made_dir(root: &Path, name: String) -> anyhow::Result<PathBuf> {
    let dir = root.join(name);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct GarnetLog {
    command: &'static str,
    version: &'static str,
    spec: offtrace::GarnetSpec,
    off_policy: bool,
    behavior_mix: Option<f64>,
    master_seed: u64,
    instance_seed: u64,
}

pub fn garnet_gen(out: &Path, seed: Option<u64>, opts: &GarnetOpts, mix: Option<f64>) -> anyhow::Result<ExitCode> {
    let base = ExperimentSpec::default();
    let spec = ExperimentSpec {
        garnet: opts.apply(base.garnet),
        off_policy: opts.off_policy || mix.is_some(),
        master_seed: seed.unwrap_or(0),
        ..base
    };
    spec.garnet.validate()?;
    let inst = experiments::instance(&spec, 0)?;
    let mut problem = Problem::from_instance(&inst);
    if let Some(eps) = mix {
        problem.behavior = mixed_policy(&inst.target, eps)?;
        problem.provenance.note = Some(format!("behavior = {eps}·uniform + {}·target", 1.0 - eps));
    }
    let log = GarnetLog {
        command: "garnet-gen",
        version: env!("CARGO_PKG_VERSION"),
        spec: spec.garnet,
        off_policy: spec.off_policy,
        behavior_mix: mix,
        master_seed: spec.master_seed,
        instance_seed: inst.spec.seed,
    };
    let dir = made_dir(out, format!("garnet-{}", output::short_hash(&log)))?;
    let path = dir.join("problem.json");
    problem.save(&path)?;
    output::write_json(&dir.join("garnet-gen.config.json"), &log)?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn show(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        "diverged".into()
    }
}

pub fn grid(out: &Path, seed: Option<u64>, opts: &ExperimentOpts) -> anyhow::Result<ExitCode> {
    let spec = opts.resolve(seed)?;
    let dir = output::result_dir(out, &spec)?;
    eprintln!("grid search on {} instance(s) -> {}", spec.sweep_instances, dir.display());
    let study = experiments::grid_study(&spec)?;
    output::write_grid_best(&dir, &study.best)?;
    output::write_grid_points(&dir, &study.points)?;
    output::write_sensitivity(&dir, &study.sensitivity)?;
    let log = ExperimentLog {
        command: "grid",
        version: env!("CARGO_PKG_VERSION"),
        spec_hash: spec.hash(),
        spec: &spec,
        seeds: derived_seeds(&spec, spec.sweep_instances, spec.trajectories),
        hypers: None,
    };
    output::write_json(&dir.join("grid.config.json"), &log)?;
    for b in &study.best {
        println!("{:<5} lambda={:<4} err={}", b.algorithm.name(), b.hyper.lambda, show(b.err));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn bench(out: &Path, seed: Option<u64>, opts: &ExperimentOpts, from_grid: bool) -> anyhow::Result<ExitCode> {
    let mut spec = opts.resolve(seed)?;
    if from_grid {
        eprintln!("selecting meta-parameters by grid search");
        let best = experiments::grid_search(&spec)?;
        if let Some(b) = best.iter().find(|b| b.all_diverged) {
            bail!("every grid point diverged for {}", b.algorithm);
        }
        spec.hypers = best.iter().map(|b| (b.algorithm, b.hyper)).collect();
    }
    let hypers = spec.resolved_hypers();
    let dir = output::result_dir(out, &spec)?;
    eprintln!("benchmark over {} instance(s) -> {}", spec.instances, dir.display());
    let r = experiments::benchmark(&spec, &hypers)?;
    output::write_curves(&dir, &r)?;
    output::write_bench_summary(&dir, &r)?;
    output::write_finals(&dir, &r)?;
    let log = ExperimentLog {
        command: "bench",
        version: env!("CARGO_PKG_VERSION"),
        spec_hash: spec.hash(),
        spec: &spec,
        seeds: derived_seeds(&spec, spec.instances, 1),
        hypers: Some(&hypers),
    };
    output::write_json(&dir.join("bench.config.json"), &log)?;
    for s in &r.summaries {
        println!(
            "{:<5} final={} ± {} diverged={}/{}",
            s.algorithm.name(),
            show(s.mean_final),
            show(s.std_final),
            s.diverged,
            s.instances
        );
    }
    Ok(ExitCode::SUCCESS)
}
