//! Service selection for BPMN business processes.
//!
//! For every service task of a process, candidate operations from a
//! [`ServiceRegistry`] are filtered by context keywords, scored on their
//! functional fit, scored on the level and trend of their QoS history, and
//! ranked by a weighted global score.
//!
//! ```no_run
//! use procsel::{config::SelectionConfig, lexicon::SynonymLexicon, registry::ServiceRegistry};
//!
//! let registry = ServiceRegistry::load("registry.json".as_ref())?;
//! let bpmn = std::fs::read_to_string("process.bpmn")?;
//! let report = procsel::select(&bpmn, &registry, &SynonymLexicon::empty(), &SelectionConfig::default())?;
//! print!("{}", report.to_json());
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bpmn;
pub mod cli;
pub mod config;
pub mod functional;
pub mod lexicon;
pub mod qos;
pub mod ranking;
pub mod registry;
pub mod report;
pub mod serve;

use config::{ConfigError, SelectionConfig};
use lexicon::SynonymLexicon;
use registry::ServiceRegistry;
use report::SelectionReport;

pub use ranking::select_for_process;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Lexicon(#[from] lexicon::LexiconError),
    #[error(transparent)]
    Registry(#[from] registry::RegistryError),
    #[error(transparent)]
    Wsdl(#[from] registry::WsdlError),
    #[error(transparent)]
    Bpmn(#[from] bpmn::BpmnError),
    #[error(transparent)]
    Bind(#[from] bpmn::BindError),
    #[error(transparent)]
    Selection(#[from] ranking::SelectionError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Explain(#[from] report::ExplainError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parses a BPMN document and ranks candidates for each of its service tasks.
pub fn select(
    bpmn_xml: &str,
    registry: &ServiceRegistry,
    lex: &SynonymLexicon,
    config: &SelectionConfig,
) -> Result<SelectionReport, Error> {
    let process = bpmn::parse_bpmn(bpmn_xml)?;
    Ok(select_for_process(&process, registry, lex, config)?)
}
