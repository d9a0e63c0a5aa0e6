use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Args;
use offtrace::experiments::output;
use offtrace::oracles::suite::{faulty_factory, standard_factory};
use offtrace::oracles::{run_suite, SuiteConfig, Verdict};

use super::made_dir;
use crate::opts::{parse_count, GarnetOpts};

#[derive(Args, Debug, Clone, Default)]
pub struct OracleArgs {
    /// Suite description (JSON). Flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub garnet: GarnetOpts,
    /// Behavior = mix·uniform + (1−mix)·target when off-policy.
    #[arg(long)]
    pub behavior_mix: Option<f64>,
    /// Comma-separated λ values for the recursive-vs-batch checks.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Length of the fixed-point and limit runs.
    #[arg(long, value_parser = parse_count)]
    pub long_steps: Option<usize>,
    /// Length of the expectation-identity run.
    #[arg(long, value_parser = parse_count)]
    pub identity_steps: Option<usize>,
    /// λ of the fixed-point check.
    #[arg(long)]
    pub fixed_point_lambda: Option<f64>,
    /// Swap in a learner that silently drops transitions (negative control).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

impl OracleArgs {
    pub fn resolve(&self, seed: Option<u64>) -> anyhow::Result<SuiteConfig> {
        let mut cfg: SuiteConfig = match &self.config {
            Some(path) => {
                if !path.exists() {
                    bail!("config file {} does not exist", path.display());
                }
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SuiteConfig::default(),
        };
        cfg.garnet = self.garnet.apply(cfg.garnet);
        cfg.off_policy |= self.garnet.off_policy || self.behavior_mix.is_some();
        if let Some(m) = self.behavior_mix {
            cfg.behavior_mix = m;
        }
        if let Some(l) = &self.lambdas {
            cfg.lambdas = l.clone();
        }
        if let Some(n) = self.long_steps {
            cfg.long_steps = n;
        }
        if let Some(n) = self.identity_steps {
            cfg.identity_steps = n;
        }
        if let Some(l) = self.fixed_point_lambda {
            cfg.fixed_point_lambda = l;
        }
        if let Some(s) = seed {
            cfg.garnet.seed = s;
        }
        Ok(cfg)
    }
}

pub fn oracle_check(out: &Path, seed: Option<u64>, args: &OracleArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.resolve(seed)?;
    let factory = if args.inject_fault {
        faulty_factory()
    } else {
        standard_factory()
    };
    let report = run_suite(&cfg, &*factory)?;
    let tag = if args.inject_fault { "oracle-fault" } else { "oracle" };
    let dir = made_dir(out, format!("{tag}-{}", output::short_hash(&cfg)))?;
    output::write_json(&dir.join("oracle-check.config.json"), &cfg)?;
    output::write_json(&dir.join("report.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    for p in &report.properties {
        let v = match p.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::HypothesisUnmet => "SKIP",
        };
        eprintln!("{v} {} (value {:.3e}, tolerance {:.1e})", p.name, p.value, p.tolerance);
    }
    eprintln!(
        "{} passed, {} failed, {} skipped (hypothesis unmet)",
        report.passed, report.failed, report.skipped
    );
    Ok(if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
