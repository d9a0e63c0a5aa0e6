mod commands;
mod opts;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use opts::{ExperimentOpts, GarnetOpts};

/// Off-policy eligibility-trace policy evaluation: problem generation,
/// single runs, grid search, benchmarks and oracle checks.
#[derive(Parser, Debug)]
#[command(name = "offtrace", version)]
struct Cli {
    /// Root directory for all outputs.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,

    /// Master seed; every instance and trajectory seed derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Garnet problem and save it as a JSON problem document.
    GarnetGen {
        #[command(flatten)]
        garnet: GarnetOpts,
        /// Mix the target policy with uniform by this weight for the
        /// behavior policy (implies off-policy).
        #[arg(long)]
        behavior_mix: Option<f64>,
    },
    /// Run one algorithm on one trajectory and write its error curve.
    Run(commands::run::RunArgs),
    /// Grid search over meta-parameters plus the λ-sensitivity sweep.
    Grid {
        #[command(flatten)]
        exp: ExperimentOpts,
    },
    /// Multi-instance benchmark with mean/std learning curves.
    Bench {
        #[command(flatten)]
        exp: ExperimentOpts,
        /// Pick meta-parameters by grid search first instead of presets.
        #[arg(long)]
        from_grid: bool,
    },
    /// Run the oracle suite and report a verdict per property.
    OracleCheck(commands::oracle::OracleArgs),
}

fn init_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("OFFTRACE_WORKERS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("OFFTRACE_WORKERS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("OFFTRACE_WORKERS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    init_workers()?;
    let seed = cli.seed;
    match cli.command {
        Command::GarnetGen { garnet, behavior_mix } => commands::garnet_gen(&cli.out, seed, &garnet, behavior_mix),
        Command::Run(args) => commands::run::run(&cli.out, seed, &args),
        Command::Grid { exp } => commands::grid(&cli.out, seed, &exp),
        Command::Bench { exp, from_grid } => commands::bench(&cli.out, seed, &exp, from_grid),
        Command::OracleCheck(args) => commands::oracle::oracle_check(&cli.out, seed, &args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
