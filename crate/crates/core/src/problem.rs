//! Versioned JSON document holding a complete evaluation problem.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garnet::{FeatureMap, GarnetInstance, GarnetSpec};
use crate::mdp::{Mdp, Policy};

pub const FORMAT: &str = "offtrace-problem";
pub const VERSION: u32 = 1;

/// All arrays are flattened row-major: transitions as `[s][a][s']`,
/// rewards and policies as `[s][a]`, features as `[s][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub format: String,
    pub version: u32,
    pub n_states: usize,
    pub n_actions: usize,
    pub n_features: usize,
    pub gamma: f64,
    pub transition: Vec<f64>,
    pub reward: Vec<f64>,
    pub features: Vec<f64>,
    pub target: Vec<f64>,
    pub behavior: Vec<f64>,
    #[serde(default)]
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub garnet: Option<GarnetSpec>,
    #[serde(default)]
    pub off_policy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Validated in-memory form of a [`ProblemDoc`].
#[derive(Debug, Clone)]
pub struct Problem {
    pub mdp: Mdp,
    pub features: FeatureMap,
    pub target: Policy,
    pub behavior: Policy,
    pub provenance: Provenance,
}

impl Problem {
    pub fn from_instance(inst: &GarnetInstance) -> Self {
        Problem {
            mdp: inst.mdp.clone(),
            features: inst.features.clone(),
            target: inst.target.clone(),
            behavior: inst.behavior.clone(),
            provenance: Provenance {
                garnet: Some(inst.spec),
                off_policy: !inst.is_on_policy(),
                note: None,
            },
        }
    }

    pub fn to_doc(&self) -> ProblemDoc {
        let phi = self.features.matrix();
        let features = (0..phi.nrows())
            .flat_map(|s| (0..phi.ncols()).map(move |k| phi[(s, k)]))
            .collect();
        ProblemDoc {
            format: FORMAT.into(),
            version: VERSION,
            n_states: self.mdp.n_states(),
            n_actions: self.mdp.n_actions(),
            n_features: phi.ncols(),
            gamma: self.mdp.gamma(),
            transition: self.mdp.transition_flat().to_vec(),
            reward: self.mdp.reward_flat().to_vec(),
            features,
            target: self.target.probs_flat().to_vec(),
            behavior: self.behavior.probs_flat().to_vec(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn from_doc(doc: ProblemDoc) -> Result<Self> {
        if doc.format != FORMAT {
            return Err(Error::Format(format!("expected format `{FORMAT}`, got `{}`", doc.format)));
        }
        if doc.version != VERSION {
            return Err(Error::Format(format!("unsupported problem version {}", doc.version)));
        }
        let (n, m, p) = (doc.n_states, doc.n_actions, doc.n_features);
        if doc.features.len() != n * p {
            return Err(Error::Dimension(format!(
                "features hold {} values, expected {n}×{p}",
                doc.features.len()
            )));
        }
        let mdp = Mdp::new(n, m, doc.transition, doc.reward, doc.gamma)?;
        let features = FeatureMap::new(DMatrix::from_row_slice(n, p, &doc.features))?;
        let target = Policy::new(n, m, doc.target)?;
        let behavior = Policy::new(n, m, doc.behavior)?;
        Ok(Problem {
            mdp,
            features,
            target,
            behavior,
            provenance: doc.provenance,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Problem::from_doc(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Problem::from_json(&std::fs::read_to_string(path)?)
    }
}
