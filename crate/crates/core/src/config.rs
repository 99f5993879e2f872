//! Effective configuration and partial overrides.
//!
//! Configuration is layered: built-in defaults, then a JSON config file, then
//! command-line flags (or, over HTTP, the request's `config` object). Every
//! layer is a [`ConfigPatch`] in which absent fields leave the layer below
//! untouched.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::functional::ScoreTable;
use crate::qos::{AttributeSpec, Direction, QosConfig};

/// Environment variable consulted when no `--config` flag is given.
pub const CONFIG_ENV: &str = "PROCSEL_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {origin} is malformed at line {line}, column {column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Everything that influences scores. Echoed verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub qos: QosConfig,
    /// Share of the functional score in the global score.
    pub functional_weight: f64,
    pub score_table: ScoreTable,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            qos: QosConfig::default(),
            functional_weight: 0.5,
            score_table: ScoreTable::default(),
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.qos
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.score_table.validate().map_err(ConfigError::Invalid)?;
        if !(0.0..=1.0).contains(&self.functional_weight) {
            return Err(ConfigError::Invalid(format!(
                "functional_weight must lie in [0, 1], got {}",
                self.functional_weight
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AppConfig {
    pub selection: SelectionConfig,
    pub lexicon: Option<PathBuf>,
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributePatch {
    pub name: String,
    #[serde(default)]
    pub direction: Option<Direction>,
    #[serde(default)]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosPatch {
    pub attributes: Option<Vec<AttributePatch>>,
    pub n_gaps: Option<usize>,
    pub stability_weight: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreTablePatch {
    pub nb_equal: Option<u32>,
    pub nb_favorable: Option<u32>,
    pub nb_unfavorable: Option<u32>,
    pub string_same: Option<u32>,
    pub string_different: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigPatch {
    pub qos: Option<QosPatch>,
    pub functional_weight: Option<f64>,
    pub score_table: Option<ScoreTablePatch>,
    pub lexicon: Option<PathBuf>,
    pub registry: Option<PathBuf>,
}

fn default_direction(name: &str) -> Option<Direction> {
    match name {
        "availability" | "totalCalls" => Some(Direction::Maximize),
        "executionTimeMs" => Some(Direction::Minimize),
        _ => None,
    }
}

fn resolve_attributes(patches: &[AttributePatch]) -> Result<Vec<AttributeSpec>, ConfigError> {
    let weighted = patches.iter().filter(|a| a.weight.is_some()).count();
    if weighted != 0 && weighted != patches.len() {
        return Err(ConfigError::Invalid(
            "either every QoS attribute declares a weight or none does".into(),
        ));
    }
    let equal = 1.0 / patches.len() as f64;
    patches
        .iter()
        .map(|a| {
            let direction = a.direction.or_else(|| default_direction(&a.name)).ok_or_else(|| {
                ConfigError::Invalid(format!("attribute `{}` needs a direction", a.name))
            })?;
            Ok(AttributeSpec {
                name: a.name.clone(),
                direction,
                weight: a.weight.unwrap_or(equal),
            })
        })
        .collect()
}

impl ConfigPatch {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_owned(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Applies this patch on top of `base` and validates the result.
    pub fn apply(&self, base: &AppConfig) -> Result<AppConfig, ConfigError> {
        let mut out = base.clone();
        let sel = &mut out.selection;
        if let Some(q) = &self.qos {
            if let Some(attrs) = &q.attributes {
                sel.qos.attributes = resolve_attributes(attrs)?;
            }
            if let Some(n) = q.n_gaps {
                sel.qos.n_gaps = n;
            }
            if let Some(w) = q.stability_weight {
                sel.qos.stability_weight = w;
            }
            if let Some(e) = q.epsilon {
                sel.qos.epsilon = e;
            }
        }
        if let Some(w) = self.functional_weight {
            sel.functional_weight = w;
        }
        if let Some(t) = &self.score_table {
            let st = &mut sel.score_table;
            st.nb_equal = t.nb_equal.unwrap_or(st.nb_equal);
            st.nb_favorable = t.nb_favorable.unwrap_or(st.nb_favorable);
            st.nb_unfavorable = t.nb_unfavorable.unwrap_or(st.nb_unfavorable);
            st.string_same = t.string_same.unwrap_or(st.string_same);
            st.string_different = t.string_different.unwrap_or(st.string_different);
        }
        if self.lexicon.is_some() {
            out.lexicon.clone_from(&self.lexicon);
        }
        if self.registry.is_some() {
            out.registry.clone_from(&self.registry);
        }
        out.selection.validate()?;
        Ok(out)
    }
}
