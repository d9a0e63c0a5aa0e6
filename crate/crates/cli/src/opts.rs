//! Shared flag groups and their application onto config structs.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use offtrace::experiments::ExperimentSpec;
use offtrace::{Algorithm, GarnetSpec, Hyper};

/// Parses a non-negative integer count, accepting scientific notation
/// (`1e5`, `2.5e3`).
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15) {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(x as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Size {
    Small,
    Big,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GarnetOpts {
    /// Standard problem shape: small = (30,4,2,8), big = (100,10,3,20).
    #[arg(long, value_enum)]
    pub size: Option<Size>,
    #[arg(long, value_parser = parse_count)]
    pub states: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub actions: Option<usize>,
    /// Successor states per state-action pair.
    #[arg(long, value_parser = parse_count)]
    pub branching: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub features: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Sample with a uniform behavior policy instead of the target.
    #[arg(long)]
    pub off_policy: bool,
}

impl GarnetOpts {
    pub fn apply(&self, base: GarnetSpec) -> GarnetSpec {
        let mut g = match self.size {
            Some(Size::Small) => GarnetSpec::small(base.seed),
            Some(Size::Big) => GarnetSpec::big(base.seed),
            None => base,
        };
        if self.size.is_some() {
            g.gamma = base.gamma;
        }
        if let Some(v) = self.states {
            g.n_states = v;
        }
        if let Some(v) = self.actions {
            g.n_actions = v;
        }
        if let Some(v) = self.branching {
            g.branching = v;
        }
        if let Some(v) = self.features {
            g.n_features = v;
        }
        if let Some(v) = self.gamma {
            g.gamma = v;
        }
        g
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct HyperOpts {
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Step size `α_i = α₀·α_c / (α_c + i)`.
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub alphac: Option<f64>,
    /// Auxiliary step size `β_i = β₀·β_c / (β_c + i^{2/3})` (TDC, GTD2).
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub betac: Option<f64>,
    /// Initial scale of the inverse matrices of least-squares learners.
    #[arg(long)]
    pub init_scale: Option<f64>,
}

impl HyperOpts {
    pub fn apply(&self, mut h: Hyper) -> Hyper {
        if let Some(v) = self.lambda {
            h.lambda = v;
        }
        if let Some(v) = self.alpha0 {
            h.alpha.a0 = v;
        }
        if let Some(v) = self.alphac {
            h.alpha.ac = v;
        }
        if let Some(v) = self.beta0 {
            h.beta.a0 = v;
        }
        if let Some(v) = self.betac {
            h.beta.ac = v;
        }
        if let Some(v) = self.init_scale {
            h.init_scale = v;
        }
        h
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct ExperimentOpts {
    /// Experiment description (JSON, or TOML by extension). Flags override
    /// its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub garnet: GarnetOpts,
    /// Comma-separated algorithm names.
    #[arg(long = "algos", value_delimiter = ',')]
    pub algorithms: Option<Vec<Algorithm>>,
    /// Trajectories per grid point.
    #[arg(long, value_parser = parse_count)]
    pub trajectories: Option<usize>,
    /// Grid-search trajectory length.
    #[arg(long, value_parser = parse_count)]
    pub steps: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub instances: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub bench_steps: Option<usize>,
    /// Instances averaged by the λ-sensitivity sweep.
    #[arg(long, value_parser = parse_count)]
    pub sweep_instances: Option<usize>,
    /// Keep one learning-curve row every this many steps.
    #[arg(long, value_parser = parse_count)]
    pub stride: Option<usize>,
}

impl ExperimentOpts {
    pub fn resolve(&self, seed: Option<u64>) -> anyhow::Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                if !path.exists() {
                    bail!("config file {} does not exist", path.display());
                }
                ExperimentSpec::load(path).with_context(|| format!("reading {}", path.display()))?
            }
            None => ExperimentSpec::default(),
        };
        spec.garnet = self.garnet.apply(spec.garnet);
        spec.off_policy |= self.garnet.off_policy;
        if let Some(a) = &self.algorithms {
            spec.algorithms = a.clone();
        }
        for (dst, src) in [
            (&mut spec.trajectories, self.trajectories),
            (&mut spec.steps, self.steps),
            (&mut spec.instances, self.instances),
            (&mut spec.bench_steps, self.bench_steps),
            (&mut spec.sweep_instances, self.sweep_instances),
            (&mut spec.curve_stride, self.stride),
        ] {
            if let Some(v) = src {
                *dst = v;
            }
        }
        if let Some(s) = seed {
            spec.master_seed = s;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e5"), Ok(100_000));
        assert_eq!(parse_count("2.5e3"), Ok(2500));
        assert_eq!(parse_count("42"), Ok(42));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("ten").is_err());
    }

    #[test]
    fn size_then_overrides() {
        let o = GarnetOpts {
            size: Some(Size::Big),
            features: Some(7),
            ..GarnetOpts::default()
        };
        let g = o.apply(GarnetSpec::small(3));
        assert_eq!((g.n_states, g.n_actions, g.branching, g.n_features, g.seed), (100, 10, 3, 7, 3));
    }

    #[test]
    fn missing_config_is_an_error() {
        let o = ExperimentOpts {
            config: Some("/nonexistent/spec.json".into()),
            ..ExperimentOpts::default()
        };
        assert!(o.resolve(None).is_err());
    }

    #[test]
    fn seed_flag_sets_master_seed() {
        let spec = ExperimentOpts::default().resolve(Some(9)).unwrap();
        assert_eq!(spec.master_seed, 9);
    }
}
