//! The canonical JSON model document.
//!
//! Probabilities and rewards serialize as decimal strings with 17
//! significant digits, which round-trip `f64` bit-exactly; loading re-runs
//! the full model validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{Component, Lmdp};

pub const SCHEMA_VERSION: &str = "lmdp-lab/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub nu: Vec<String>,
    /// `T[s][a][s']`.
    #[serde(rename = "T")]
    pub trans: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: String,
    #[serde(rename = "S")]
    pub n_states: usize,
    #[serde(rename = "A")]
    pub n_actions: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    #[serde(rename = "L")]
    pub n_components: usize,
    pub rho: Vec<String>,
    pub components: Vec<ComponentDoc>,
    /// `reward[h][s][a]`.
    pub reward: Vec<Vec<Vec<String>>>,
    /// Free-form provenance (generator name, certified δ, …).
    #[serde(default)]
    pub metadata: Value,
}

/// 17 significant digits: enough to reproduce any `f64` bit-exactly.
fn encode_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_real(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::InvalidModel(format!("bad real literal {s:?}: {e}")))
}

fn encode_vec(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| encode_real(x)).collect()
}

fn parse_vec(xs: &[String]) -> Result<Vec<f64>> {
    xs.iter().map(|s| parse_real(s)).collect()
}

impl ModelDocument {
    pub fn from_model(model: &Lmdp, metadata: Value) -> Self {
        ModelDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            n_states: model.n_states(),
            n_actions: model.n_actions(),
            horizon: model.horizon(),
            n_components: model.n_components(),
            rho: encode_vec(model.mixing().as_slice()),
            components: model
                .components()
                .iter()
                .map(|c| ComponentDoc {
                    nu: encode_vec(c.init.as_slice()),
                    trans: c
                        .trans
                        .iter()
                        .map(|row| row.iter().map(|d| encode_vec(d.as_slice())).collect())
                        .collect(),
                })
                .collect(),
            reward: model
                .reward_tables()
                .iter()
                .map(|t| t.iter().map(|row| encode_vec(row)).collect())
                .collect(),
            metadata,
        }
    }

    pub fn into_model(&self) -> Result<Lmdp> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported schema version {:?}, expected {SCHEMA_VERSION:?}",
                self.schema_version
            )));
        }
        if self.components.len() != self.n_components {
            return Err(Error::InvalidModel(format!(
                "document declares L = {}, holds {} components",
                self.n_components,
                self.components.len()
            )));
        }
        let mixing = Dist::new(parse_vec(&self.rho)?)?;
        let components = self
            .components
            .iter()
            .map(|c| {
                let init = Dist::new(parse_vec(&c.nu)?)?;
                let trans = c
                    .trans
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|d| Dist::new(parse_vec(d)?))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Component { init, trans })
            })
            .collect::<Result<Vec<_>>>()?;
        let reward = self
            .reward
            .iter()
            .map(|t| t.iter().map(|row| parse_vec(row)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Lmdp::new(
            self.n_states,
            self.n_actions,
            self.horizon,
            mixing,
            components,
            reward,
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidModel(format!("JSON parse: {e}")))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())
            .map_err(|e| Error::InvalidModel(format!("write {}: {e}", path.display())))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidModel(format!("read {}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }
}

/// Convenience: write a model straight to a document file.
pub fn save_model(model: &Lmdp, metadata: Value, path: &std::path::Path) -> Result<()> {
    ModelDocument::from_model(model, metadata).save(path)
}

/// Convenience: load and validate a model from a document file.
pub fn load_model(path: &std::path::Path) -> Result<Lmdp> {
    ModelDocument::load(path)?.into_model()
}
