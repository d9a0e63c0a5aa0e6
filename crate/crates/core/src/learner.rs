//! Uniform interface over the eight learners.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{Gbrm, Gtd2, Td, Tdc};
use crate::ls::{Brm, Fpkf, Lspe, Lstd};
use crate::sampling::Transition;
use crate::traces::RateSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lstd,
    Lspe,
    Fpkf,
    Brm,
    Td,
    Tdc,
    Gtd2,
    Gbrm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Lstd,
        Algorithm::Lspe,
        Algorithm::Fpkf,
        Algorithm::Brm,
        Algorithm::Td,
        Algorithm::Tdc,
        Algorithm::Gtd2,
        Algorithm::Gbrm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lstd => "lstd",
            Algorithm::Lspe => "lspe",
            Algorithm::Fpkf => "fpkf",
            Algorithm::Brm => "brm",
            Algorithm::Td => "td",
            Algorithm::Tdc => "tdc",
            Algorithm::Gtd2 => "gtd2",
            Algorithm::Gbrm => "gbrm",
        }
    }

    pub fn is_least_squares(self) -> bool {
        matches!(
            self,
            Algorithm::Lstd | Algorithm::Lspe | Algorithm::Fpkf | Algorithm::Brm
        )
    }

    /// Whether the learner keeps auxiliary weights with their own step size.
    pub fn uses_beta(self) -> bool {
        matches!(self, Algorithm::Tdc | Algorithm::Gtd2)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Meta-parameters shared by all learners. Least-squares learners only read
/// `lambda` and `init_scale`; `beta` is only read by TDC and GTD2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lambda: f64,
    pub alpha: RateSchedule,
    pub beta: RateSchedule,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

fn default_init_scale() -> f64 {
    crate::DEFAULT_INIT_SCALE
}

impl Hyper {
    pub fn least_squares(lambda: f64) -> Self {
        Hyper {
            lambda,
            ..Hyper::default()
        }
    }

    pub fn gradient(lambda: f64, a0: f64, ac: f64) -> Self {
        Hyper {
            lambda,
            alpha: RateSchedule::linear(a0, ac),
            ..Hyper::default()
        }
    }

    pub fn with_beta(self, b0: f64, bc: f64) -> Self {
        Hyper {
            beta: RateSchedule::two_thirds(b0, bc),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid("lambda", format!("{} not in [0, 1]", self.lambda)));
        }
        for (what, s) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if !(s.a0 > 0.0 && s.ac > 0.0 && s.a0.is_finite() && s.ac.is_finite()) {
                return Err(Error::invalid(what, format!("a0={} ac={}", s.a0, s.ac)));
            }
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::invalid("init_scale", self.init_scale.to_string()));
        }
        Ok(())
    }
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lambda: 0.0,
            alpha: RateSchedule::linear(0.1, 1e3),
            beta: RateSchedule::two_thirds(0.1, 1e3),
            init_scale: crate::DEFAULT_INIT_SCALE,
        }
    }
}

/// A policy-evaluation learner fed one transition at a time.
pub trait Learner: Send {
    fn kind(&self) -> Algorithm;

    /// Consumes transition `i` and returns `θ_i`.
    fn step(&mut self, t: &Transition) -> Result<&DVector<f64>>;

    fn theta(&self) -> &DVector<f64>;

    fn snapshot(&self) -> DVector<f64> {
        self.theta().clone()
    }

    /// Number of transitions consumed so far.
    fn steps(&self) -> usize;
}

/// Builds a fresh learner with `θ₀ = 0` over `p` features.
pub fn create(kind: Algorithm, hyper: &Hyper, p: usize, gamma: f64) -> Result<Box<dyn Learner>> {
    hyper.validate()?;
    if p == 0 {
        return Err(Error::invalid("feature count", "p must be positive"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("{gamma} not in [0, 1)")));
    }
    let lambda = hyper.lambda;
    let s = hyper.init_scale;
    Ok(match kind {
        Algorithm::Lstd => Box::new(Lstd::new(p, lambda, gamma, s)),
        Algorithm::Lspe => Box::new(Lspe::new(p, lambda, gamma, s)),
        Algorithm::Fpkf => Box::new(Fpkf::new(p, lambda, gamma, s)),
        Algorithm::Brm => Box::new(Brm::new(p, lambda, gamma, s)),
        Algorithm::Td => Box::new(Td::new(p, lambda, gamma, hyper.alpha)),
        Algorithm::Tdc => Box::new(Tdc::new(p, lambda, gamma, hyper.alpha, hyper.beta)),
        Algorithm::Gtd2 => Box::new(Gtd2::new(p, lambda, gamma, hyper.alpha, hyper.beta)),
        Algorithm::Gbrm => Box::new(Gbrm::new(p, lambda, gamma, hyper.alpha)),
    })
}

/// Runs a learner over a whole trajectory, collecting `θ_1 … θ_n`.
pub fn run_all(learner: &mut dyn Learner, transitions: &[Transition]) -> Result<Vec<DVector<f64>>> {
    transitions
        .iter()
        .map(|t| learner.step(t).cloned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.name()));
        }
        assert_eq!("GTD2".parse::<Algorithm>().unwrap(), Algorithm::Gtd2);
    }

    #[test]
    fn unknown_name_lists_all_eight() {
        let msg = "sarsa".parse::<Algorithm>().unwrap_err().to_string();
        for a in Algorithm::ALL {
            assert!(msg.contains(a.name()), "{msg}");
        }
    }

    #[test]
    fn factory_rejects_bad_hyper() {
        let h = Hyper::least_squares(1.5);
        assert!(create(Algorithm::Lstd, &h, 3, 0.9).is_err());
        assert!(create(Algorithm::Td, &Hyper::default(), 3, 1.0).is_err());
        assert!(create(Algorithm::Td, &Hyper::default(), 0, 0.9).is_err());
    }

    #[test]
    fn factory_starts_at_zero() {
        for a in Algorithm::ALL {
            let l = create(a, &Hyper::gradient(0.4, 0.1, 100.0), 4, 0.95).unwrap();
            assert_eq!(l.kind(), a);
            assert_eq!(l.theta(), &DVector::zeros(4));
            assert_eq!(l.steps(), 0);
        }
    }
}
