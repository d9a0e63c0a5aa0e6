use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Args;
use offtrace::experiments::{self, output, run_learner, ExperimentSpec};
use offtrace::mdp::exact_value;
use offtrace::problem::Problem;
use offtrace::rng::{derive_seed, Stream};
use offtrace::sampling::{read_trajectory, sample_trajectory, write_trajectory};
use offtrace::{Algorithm, GarnetSpec, Hyper, StartState};
use serde::{Deserialize, Serialize};

use super::made_dir;
use crate::opts::{parse_count, GarnetOpts, HyperOpts};

pub const DEFAULT_RUN_STEPS: usize = 10_000;

/// A single run, as read from `--config` and then overridden by flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Problem document; when absent a Garnet instance is generated.
    pub problem: Option<PathBuf>,
    /// Binary trajectory dump to replay instead of sampling.
    pub trajectory: Option<PathBuf>,
    pub garnet: GarnetSpec,
    pub off_policy: bool,
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    /// Defaults to 10⁴, or the dump length when replaying.
    pub steps: Option<usize>,
    pub start: StartState,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: None,
            trajectory: None,
            garnet: GarnetSpec::small(0),
            off_policy: false,
            algorithm: Algorithm::Lstd,
            hyper: Hyper::default(),
            steps: None,
            start: StartState::Stationary,
            seed: 0,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Run description (JSON). Flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem document written by `garnet-gen`.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Replay a binary trajectory dump instead of sampling.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// One of lstd, lspe, fpkf, brm, td, tdc, gtd2, gbrm.
    #[arg(long)]
    pub algo: Option<Algorithm>,
    #[command(flatten)]
    pub hyper: HyperOpts,
    #[arg(long, value_parser = parse_count)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub garnet: GarnetOpts,
    /// Also write the sampled trajectory as `trajectory.otrj`.
    #[arg(long)]
    pub dump_trajectory: bool,
}

impl RunArgs {
    pub fn resolve(&self, seed: Option<u64>) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                if !path.exists() {
                    bail!("config file {} does not exist", path.display());
                }
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if self.problem.is_some() {
            cfg.problem = self.problem.clone();
        }
        if self.trajectory.is_some() {
            cfg.trajectory = self.trajectory.clone();
        }
        if let Some(a) = self.algo {
            cfg.algorithm = a;
        }
        cfg.hyper = self.hyper.apply(cfg.hyper);
        if self.steps.is_some() {
            cfg.steps = self.steps;
        }
        cfg.garnet = self.garnet.apply(cfg.garnet);
        cfg.off_policy |= self.garnet.off_policy;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.hyper.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct RunLog<'a> {
    command: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    instance_seed: u64,
    trajectory_seed: Option<u64>,
    steps: usize,
}

#[derive(Serialize)]
struct RunSummary {
    algorithm: Algorithm,
    steps: usize,
    err: f64,
    final_error: f64,
    diverged: bool,
    failure: Option<String>,
}

pub fn run(out: &Path, seed: Option<u64>, args: &RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.resolve(seed)?;
    let instance_seed = derive_seed(cfg.seed, Stream::Instance, 0);

    let problem = match &cfg.problem {
        Some(path) => Problem::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => {
            let spec = ExperimentSpec {
                garnet: cfg.garnet,
                off_policy: cfg.off_policy,
                master_seed: cfg.seed,
                ..ExperimentSpec::default()
            };
            Problem::from_instance(&experiments::instance(&spec, 0)?)
        }
    };

    let (traj, trajectory_seed) = match &cfg.trajectory {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let t = read_trajectory(BufReader::new(file))?;
            if t.n_features() != problem.features.n_features() {
                bail!(
                    "trajectory has {} features but the problem has {}",
                    t.n_features(),
                    problem.features.n_features()
                );
            }
            let n = cfg.steps.unwrap_or(t.len());
            if n > t.len() {
                bail!("asked for {n} steps but the trajectory has {}", t.len());
            }
            (t.prefix(n), None)
        }
        None => {
            let s = derive_seed(instance_seed, Stream::Trajectory, 0);
            let t = sample_trajectory(
                &problem.mdp,
                &problem.behavior,
                &problem.target,
                &problem.features,
                cfg.steps.unwrap_or(DEFAULT_RUN_STEPS),
                s,
                cfg.start,
            )?;
            (t, Some(s))
        }
    };

    let v_true = exact_value(&problem.mdp, &problem.target)?;
    let r = run_learner(
        cfg.algorithm,
        &cfg.hyper,
        &traj.transitions,
        traj.gamma,
        &problem.features,
        &v_true,
        true,
    );

    let log = RunLog {
        command: "run",
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        instance_seed,
        trajectory_seed,
        steps: traj.len(),
    };
    let dir = made_dir(out, format!("run-{}", output::short_hash(&log)))?;
    output::write_json(&dir.join("run.config.json"), &log)?;
    output::write_error_curve(&dir.join("curve.csv"), &r.curve)?;
    let summary = RunSummary {
        algorithm: cfg.algorithm,
        steps: traj.len(),
        err: r.err,
        final_error: r.final_error,
        diverged: r.diverged,
        failure: r.failure.clone(),
    };
    output::write_json(&dir.join("summary.json"), &summary)?;
    if args.dump_trajectory {
        let file = File::create(dir.join("trajectory.otrj"))?;
        write_trajectory(&traj, BufWriter::new(file))?;
    }
    println!(
        "{} steps={} err={} final={} -> {}",
        cfg.algorithm,
        traj.len(),
        r.err,
        r.final_error,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}
