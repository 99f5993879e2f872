//! Service registry: categories, services, operations, typed parameters and
//! time-stamped QoS snapshots, persisted as JSON.

mod wsdl;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize};

use crate::lexicon::{keyword_set, NormalizedTerm};

pub use wsdl::{import_wsdl, WsdlError};

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot access registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("registry {path} is malformed at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate serviceKey `{key}` at {second} (first defined at {first})")]
    DuplicateServiceKey {
        key: String,
        first: String,
        second: String,
    },
    #[error("invalid registry entry at {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("no operation `{operation}` on service `{service_key}`")]
    UnknownTarget {
        service_key: String,
        operation: String,
    },
    #[error("snapshot at {timestamp} is not later than the last snapshot ({last}) of {service_key}/{operation}")]
    NonMonotonic {
        service_key: String,
        operation: String,
        timestamp: DateTime<Utc>,
        last: DateTime<Utc>,
    },
}

/// Maps a raw datatype onto the canonical alias table. Namespace prefixes are
/// stripped and unknown types pass through lowercased.
pub fn normalize_datatype(raw: &str) -> String {
    let trimmed = raw.trim();
    let local = trimmed.rsplit(':').next().unwrap_or(trimmed).to_lowercase();
    match local.as_str() {
        "string" | "str" => "string",
        "int" | "integer" | "long" => "integer",
        "boolean" | "bool" => "boolean",
        "double" | "float" | "decimal" => "double",
        other => other,
    }
    .to_owned()
}

fn de_datatype<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    Ok(normalize_datatype(&String::deserialize(d)?))
}

fn de_keywords<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeSet<NormalizedTerm>, D::Error> {
    let raw = Vec::<String>::deserialize(d)?;
    Ok(keyword_set(raw.iter().map(String::as_str)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(deserialize_with = "de_datatype")]
    pub datatype: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, datatype: &str) -> Self {
        Self {
            name: name.into(),
            datatype: normalize_datatype(datatype),
        }
    }
}

/// One measurement of an operation's quality at a point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QosSnapshot {
    pub timestamp: DateTime<Utc>,
    pub availability: f64,
    pub execution_time_ms: f64,
    pub total_calls: u64,
    /// Additional named numeric attributes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl QosSnapshot {
    pub fn new(
        timestamp: DateTime<Utc>,
        availability: f64,
        execution_time_ms: f64,
        total_calls: u64,
    ) -> Self {
        Self {
            timestamp,
            availability,
            execution_time_ms,
            total_calls,
            extra: BTreeMap::new(),
        }
    }

    /// Value of a named attribute; the three built-ins use their file names.
    pub fn attribute(&self, name: &str) -> Option<f64> {
        match name {
            "availability" => Some(self.availability),
            "executionTimeMs" => Some(self.execution_time_ms),
            "totalCalls" => Some(self.total_calls as f64),
            other => self.extra.get(other).copied(),
        }
    }

    fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.availability) {
            return Err(format!("availability {} outside [0, 1]", self.availability));
        }
        if !(self.execution_time_ms.is_finite() && self.execution_time_ms > 0.0) {
            return Err(format!("executionTimeMs {} must be positive", self.execution_time_ms));
        }
        if let Some((name, v)) = self.extra.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("extra attribute `{name}` is not finite ({v})"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub name: String,
    #[serde(default)]
    pub inputs: Vec<Parameter>,
    #[serde(default)]
    pub outputs: Vec<Parameter>,
    /// Chronological; empty until the operation has been executed.
    #[serde(rename = "qos", default)]
    pub qos_history: Vec<QosSnapshot>,
}

impl Operation {
    pub fn is_rated(&self) -> bool {
        !self.qos_history.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WebService {
    pub name: String,
    #[serde(default)]
    pub business_name: String,
    #[serde(default)]
    pub business_key: String,
    pub service_key: String,
    #[serde(default)]
    pub url: String,
    #[serde(default)]
    pub version: String,
    pub operations: Vec<Operation>,
    /// Stored as given; never scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub security_note: Option<String>,
}

impl WebService {
    pub fn operation(&self, name: &str) -> Option<&Operation> {
        self.operations.iter().find(|op| op.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCategory {
    pub name: String,
    #[serde(deserialize_with = "de_keywords")]
    pub keywords: BTreeSet<NormalizedTerm>,
    #[serde(default)]
    pub services: Vec<WebService>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServiceRegistry {
    #[serde(default)]
    pub categories: Vec<ServiceCategory>,
}

impl ServiceRegistry {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, RegistryError> {
        let registry: Self = serde_json::from_str(text).map_err(|e| RegistryError::Parse {
            path: origin.to_owned(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("registry serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<(), RegistryError> {
        std::fs::write(path, self.to_json()).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Checks every structural invariant, reporting the first violation with
    /// its JSON path.
    pub fn validate(&self) -> Result<(), RegistryError> {
        let invalid = |path: String, message: String| RegistryError::Invalid { path, message };
        let mut keys: HashMap<&str, String> = HashMap::new();

        for (ci, cat) in self.categories.iter().enumerate() {
            let cpath = format!("categories[{ci}]");
            if cat.keywords.is_empty() {
                return Err(invalid(format!("{cpath}.keywords"), "category has no keywords".into()));
            }
            for (si, svc) in cat.services.iter().enumerate() {
                let spath = format!("{cpath}.services[{si}]");
                if svc.service_key.trim().is_empty() {
                    return Err(invalid(format!("{spath}.serviceKey"), "serviceKey is empty".into()));
                }
                if let Some(first) = keys.insert(&svc.service_key, spath.clone()) {
                    return Err(RegistryError::DuplicateServiceKey {
                        key: svc.service_key.clone(),
                        first,
                        second: spath,
                    });
                }
                if svc.operations.is_empty() {
                    return Err(invalid(format!("{spath}.operations"), "service has no operations".into()));
                }
                let mut op_names = BTreeSet::new();
                for (oi, op) in svc.operations.iter().enumerate() {
                    let opath = format!("{spath}.operations[{oi}]");
                    if !op_names.insert(op.name.as_str()) {
                        return Err(invalid(opath, format!("duplicate operation name `{}`", op.name)));
                    }
                    for (kind, params) in [("inputs", &op.inputs), ("outputs", &op.outputs)] {
                        for (pi, p) in params.iter().enumerate() {
                            if p.name.trim().is_empty() || p.datatype.is_empty() {
                                return Err(invalid(
                                    format!("{opath}.{kind}[{pi}]"),
                                    "parameter needs a name and a datatype".into(),
                                ));
                            }
                        }
                    }
                    for (qi, snap) in op.qos_history.iter().enumerate() {
                        let qpath = format!("{opath}.qos[{qi}]");
                        snap.check().map_err(|m| invalid(qpath.clone(), m))?;
                        if qi > 0 && snap.timestamp <= op.qos_history[qi - 1].timestamp {
                            return Err(invalid(qpath, "timestamps must be strictly increasing".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn services(&self) -> impl Iterator<Item = (&ServiceCategory, &WebService)> {
        self.categories
            .iter()
            .flat_map(|c| c.services.iter().map(move |s| (c, s)))
    }

    pub fn service(&self, service_key: &str) -> Option<(&ServiceCategory, &WebService)> {
        self.services().find(|(_, s)| s.service_key == service_key)
    }

    pub fn operation_count(&self) -> usize {
        self.services().map(|(_, s)| s.operations.len()).sum()
    }

    /// Appends a snapshot, keeping the history strictly chronological.
    pub fn append_snapshot(
        &mut self,
        service_key: &str,
        operation: &str,
        snap: QosSnapshot,
    ) -> Result<(), RegistryError> {
        let unknown = || RegistryError::UnknownTarget {
            service_key: service_key.to_owned(),
            operation: operation.to_owned(),
        };
        let op = self
            .categories
            .iter_mut()
            .flat_map(|c| c.services.iter_mut())
            .find(|s| s.service_key == service_key)
            .and_then(|s| s.operations.iter_mut().find(|o| o.name == operation))
            .ok_or_else(unknown)?;

        snap.check().map_err(|message| RegistryError::Invalid {
            path: format!("{service_key}/{operation}"),
            message,
        })?;
        if let Some(last) = op.qos_history.last() {
            if snap.timestamp <= last.timestamp {
                return Err(RegistryError::NonMonotonic {
                    service_key: service_key.to_owned(),
                    operation: operation.to_owned(),
                    timestamp: snap.timestamp,
                    last: last.timestamp,
                });
            }
        }
        op.qos_history.push(snap);
        Ok(())
    }

    /// Adds a service to the named category, creating the category with the
    /// given keywords when absent.
    pub fn add_service(
        &mut self,
        category: &str,
        keywords: BTreeSet<NormalizedTerm>,
        service: WebService,
    ) -> Result<(), RegistryError> {
        if self.service(&service.service_key).is_some() {
            return Err(RegistryError::DuplicateServiceKey {
                key: service.service_key.clone(),
                first: "existing registry".into(),
                second: format!("imported service `{}`", service.name),
            });
        }
        match self.categories.iter_mut().find(|c| c.name == category) {
            Some(cat) => {
                cat.keywords.extend(keywords);
                cat.services.push(service);
            }
            None => self.categories.push(ServiceCategory {
                name: category.to_owned(),
                keywords,
                services: vec![service],
            }),
        }
        self.validate()
    }
}
