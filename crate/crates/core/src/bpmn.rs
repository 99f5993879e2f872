//! BPMN 2.0 ingestion.
//!
//! Only service tasks, text annotations, associations and sequence flows are
//! read. Each service task is bound, through an association, to one text
//! annotation carrying its requirement in a line-oriented grammar:
//!
//! ```text
//! input: username=string, password=string
//! output: authentication=boolean
//! context: authentication, login
//! ```
//!
//! Keys are case-insensitive, `input:` is optional and repeated keys merge.

use std::collections::{BTreeSet, HashMap, HashSet};

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use crate::lexicon::{extract_keywords, NormalizedTerm};
use crate::registry::Parameter;

pub const BPMN_MODEL_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

#[derive(Debug, thiserror::Error)]
pub enum BpmnError {
    #[error("malformed BPMN XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("root element `{0}` is not in the BPMN 2.0 model namespace")]
    NotBpmn(String),
    #[error("{element} at line {line} has no id")]
    MissingId { element: String, line: u32 },
    #[error("duplicate id `{id}` at line {line}")]
    DuplicateId { id: String, line: u32 },
    #[error("association `{association}` at line {line} references unknown id `{missing}`")]
    DanglingAssociation {
        association: String,
        missing: String,
        line: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("annotation has no `output:` entries")]
    MissingOutput,
    #[error("annotation has no `context:` keywords")]
    MissingContext,
}

#[derive(Debug, thiserror::Error)]
pub enum BindError {
    #[error("service tasks without an associated annotation: {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("service task `{task}` is associated with several annotations: {}", .annotations.join(", "))]
    Ambiguous {
        task: String,
        annotations: Vec<String>,
    },
    #[error("annotation `{annotation}` of task `{task}`: {source}")]
    Annotation {
        task: String,
        annotation: String,
        #[source]
        source: AnnotationError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceTaskNode {
    pub id: String,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextAnnotationNode {
    pub id: String,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationEdge {
    pub id: String,
    pub source_id: String,
    pub target_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusinessProcess {
    pub id: String,
    pub tasks: Vec<ServiceTaskNode>,
    pub annotations: Vec<TextAnnotationNode>,
    pub associations: Vec<AssociationEdge>,
    /// `(source, target)` pairs of sequence flows; not interpreted.
    pub flows: Vec<(String, String)>,
}

/// What one business task asks of a service operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskRequirement {
    pub task_id: String,
    pub task_name: String,
    pub inputs: Vec<Parameter>,
    pub outputs: Vec<Parameter>,
    pub context_keywords: BTreeSet<NormalizedTerm>,
}

fn line_of(doc: &Document, node: &Node) -> u32 {
    doc.text_pos_at(node.range().start).row
}

fn is_bpmn(node: &Node, name: &str) -> bool {
    node.is_element()
        && node.tag_name().name() == name
        && node.tag_name().namespace() == Some(BPMN_MODEL_NS)
}

pub fn parse_bpmn(xml: &str) -> Result<BusinessProcess, BpmnError> {
    let doc = Document::parse(xml)?;
    let root = doc.root_element();
    if root.tag_name().namespace() != Some(BPMN_MODEL_NS) {
        return Err(BpmnError::NotBpmn(root.tag_name().name().to_owned()));
    }

    let mut ids: HashSet<&str> = HashSet::new();
    for node in doc.descendants().filter(Node::is_element) {
        if let Some(id) = node.attribute("id") {
            if !ids.insert(id) {
                return Err(BpmnError::DuplicateId {
                    id: id.to_owned(),
                    line: line_of(&doc, &node),
                });
            }
        }
    }

    let require_id = |node: &Node| -> Result<String, BpmnError> {
        match node.attribute("id") {
            Some(id) if !id.trim().is_empty() => Ok(id.to_owned()),
            _ => Err(BpmnError::MissingId {
                element: node.tag_name().name().to_owned(),
                line: line_of(&doc, node),
            }),
        }
    };

    let mut process = BusinessProcess {
        id: doc
            .descendants()
            .find(|n| is_bpmn(n, "process"))
            .and_then(|n| n.attribute("id"))
            .unwrap_or_default()
            .to_owned(),
        tasks: Vec::new(),
        annotations: Vec::new(),
        associations: Vec::new(),
        flows: Vec::new(),
    };

    for node in doc.descendants().filter(Node::is_element) {
        if node.tag_name().namespace() != Some(BPMN_MODEL_NS) {
            continue;
        }
        match node.tag_name().name() {
            "serviceTask" => process.tasks.push(ServiceTaskNode {
                id: require_id(&node)?,
                display_name: node.attribute("name").unwrap_or_default().to_owned(),
            }),
            "textAnnotation" => {
                let raw_text = node
                    .children()
                    .filter(|n| is_bpmn(n, "text"))
                    .flat_map(|n| n.descendants().filter(Node::is_text))
                    .filter_map(|n| n.text())
                    .collect::<String>();
                process.annotations.push(TextAnnotationNode {
                    id: require_id(&node)?,
                    raw_text,
                });
            }
            "association" => {
                let id = require_id(&node)?;
                let source_id = node.attribute("sourceRef").unwrap_or_default().to_owned();
                let target_id = node.attribute("targetRef").unwrap_or_default().to_owned();
                for endpoint in [&source_id, &target_id] {
                    if !ids.contains(endpoint.as_str()) {
                        return Err(BpmnError::DanglingAssociation {
                            association: id,
                            missing: endpoint.clone(),
                            line: line_of(&doc, &node),
                        });
                    }
                }
                process.associations.push(AssociationEdge {
                    id,
                    source_id,
                    target_id,
                });
            }
            "sequenceFlow" => process.flows.push((
                node.attribute("sourceRef").unwrap_or_default().to_owned(),
                node.attribute("targetRef").unwrap_or_default().to_owned(),
            )),
            _ => {}
        }
    }
    Ok(process)
}

fn parse_parameters(
    items: &str,
    base: usize,
    into: &mut Vec<Parameter>,
) -> Result<(), AnnotationError> {
    let mut offset = base;
    for item in items.split(',') {
        let here = offset + (item.len() - item.trim_start().len());
        offset += item.len() + 1;
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let Some((name, datatype)) = item.split_once('=') else {
            return Err(AnnotationError::Syntax {
                offset: here,
                message: format!("expected name=datatype, found `{item}`"),
            });
        };
        let (name, datatype) = (name.trim(), datatype.trim());
        if name.is_empty() || datatype.is_empty() {
            return Err(AnnotationError::Syntax {
                offset: here,
                message: format!("empty name or datatype in `{item}`"),
            });
        }
        into.push(Parameter::new(name, datatype));
    }
    Ok(())
}

/// `(inputs, outputs, context keywords)` read from one annotation.
pub type AnnotationParts = (Vec<Parameter>, Vec<Parameter>, BTreeSet<NormalizedTerm>);

/// Parses one annotation body into `(inputs, outputs, context)`.
pub fn parse_annotation(raw: &str) -> Result<AnnotationParts, AnnotationError> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut context = BTreeSet::new();
    let mut saw_context = false;

    let mut line_start = 0;
    for line in raw.split('\n') {
        let start = line_start;
        line_start += line.len() + 1;
        if line.trim().is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let Some((key, rest)) = line.split_once(':') else {
            return Err(AnnotationError::Syntax {
                offset: start + indent,
                message: format!("expected `key: items`, found `{}`", line.trim()),
            });
        };
        let rest_offset = start + key.len() + 1;
        match key.trim().to_ascii_lowercase().as_str() {
            "input" => parse_parameters(rest, rest_offset, &mut inputs)?,
            "output" => parse_parameters(rest, rest_offset, &mut outputs)?,
            "context" => {
                saw_context = true;
                context.extend(rest.split(',').flat_map(extract_keywords));
            }
            other => {
                return Err(AnnotationError::Syntax {
                    offset: start + indent,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    if outputs.is_empty() {
        return Err(AnnotationError::MissingOutput);
    }
    if !saw_context || context.is_empty() {
        return Err(AnnotationError::MissingContext);
    }
    Ok((inputs, outputs, context))
}

/// Binds every service task to its annotation, in document order.
pub fn bind_requirements(process: &BusinessProcess) -> Result<Vec<TaskRequirement>, BindError> {
    let annotations: HashMap<&str, &TextAnnotationNode> = process
        .annotations
        .iter()
        .map(|a| (a.id.as_str(), a))
        .collect();

    let mut unbound = Vec::new();
    let mut requirements = Vec::new();
    for task in &process.tasks {
        let mut linked: Vec<&TextAnnotationNode> = Vec::new();
        for edge in &process.associations {
            let other = if edge.source_id == task.id {
                &edge.target_id
            } else if edge.target_id == task.id {
                &edge.source_id
            } else {
                continue;
            };
            if let Some(a) = annotations.get(other.as_str()) {
                if !linked.iter().any(|l| l.id == a.id) {
                    linked.push(a);
                }
            }
        }
        match linked.as_slice() {
            [] => unbound.push(task.id.clone()),
            [annotation] => {
                let (inputs, outputs, context_keywords) = parse_annotation(&annotation.raw_text)
                    .map_err(|source| BindError::Annotation {
                        task: task.id.clone(),
                        annotation: annotation.id.clone(),
                        source,
                    })?;
                requirements.push(TaskRequirement {
                    task_id: task.id.clone(),
                    task_name: task.display_name.clone(),
                    inputs,
                    outputs,
                    context_keywords,
                });
            }
            many => {
                return Err(BindError::Ambiguous {
                    task: task.id.clone(),
                    annotations: many.iter().map(|a| a.id.clone()).collect(),
                })
            }
        }
    }
    if !unbound.is_empty() {
        return Err(BindError::Unbound(unbound));
    }
    Ok(requirements)
}
