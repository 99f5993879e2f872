//! WSDL 1.1 import: port-type operations and their message parts become
//! registry operations with normalized parameter types.

use std::collections::HashMap;

use chrono::{DateTime, SecondsFormat, Utc};
use roxmltree::{Document, Node};

use super::{normalize_datatype, Operation, Parameter, WebService};

const WSDL_NS: &str = "http://schemas.xmlsoap.org/wsdl/";

#[derive(Debug, thiserror::Error)]
pub enum WsdlError {
    #[error("malformed WSDL: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("WSDL document has no portType")]
    MissingPortType,
    #[error("portType `{0}` declares no operations")]
    NoOperations(String),
    #[error("operation `{operation}` references unknown message `{message}`")]
    UnresolvedMessage { operation: String, message: String },
}

fn local(qname: &str) -> &str {
    qname.rsplit(':').next().unwrap_or(qname)
}

fn is_wsdl(node: &Node, name: &str) -> bool {
    node.is_element()
        && node.tag_name().name() == name
        && node.tag_name().namespace().is_none_or(|ns| ns == WSDL_NS)
}

/// Parses a WSDL 1.1 document into a service without QoS history.
///
/// The service key is `ws.<loaded_at in ISO-8601>`. Parts typed by
/// `element` resolve through the embedded schema when the element declares a
/// `type`; otherwise the element name stands in for the type.
pub fn import_wsdl(xml: &str, loaded_at: DateTime<Utc>) -> Result<WebService, WsdlError> {
    let doc = Document::parse(xml)?;
    let root = doc.root_element();

    let element_types: HashMap<&str, &str> = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "element")
        .filter_map(|n| Some((n.attribute("name")?, n.attribute("type")?)))
        .collect();

    let messages: HashMap<&str, Vec<Parameter>> = root
        .children()
        .filter(|n| is_wsdl(n, "message"))
        .filter_map(|msg| {
            let parts = msg
                .children()
                .filter(|n| is_wsdl(n, "part"))
                .map(|part| {
                    let name = part.attribute("name").unwrap_or_default();
                    let datatype = match (part.attribute("type"), part.attribute("element")) {
                        (Some(t), _) => t.to_owned(),
                        (None, Some(el)) => element_types
                            .get(local(el))
                            .map(|t| (*t).to_owned())
                            .unwrap_or_else(|| local(el).to_owned()),
                        (None, None) => "anyType".to_owned(),
                    };
                    Parameter {
                        name: name.to_owned(),
                        datatype: normalize_datatype(&datatype),
                    }
                })
                .collect();
            Some((msg.attribute("name")?, parts))
        })
        .collect();

    let port_type = root
        .children()
        .find(|n| is_wsdl(n, "portType"))
        .ok_or(WsdlError::MissingPortType)?;
    let port_type_name = port_type.attribute("name").unwrap_or_default();

    let mut operations = Vec::new();
    for op in port_type.children().filter(|n| is_wsdl(n, "operation")) {
        let op_name = op.attribute("name").unwrap_or_default().to_owned();
        let resolve = |dir: &str| -> Result<Vec<Parameter>, WsdlError> {
            let Some(msg) = op
                .children()
                .find(|n| is_wsdl(n, dir))
                .and_then(|n| n.attribute("message"))
            else {
                return Ok(Vec::new());
            };
            messages
                .get(local(msg))
                .cloned()
                .ok_or_else(|| WsdlError::UnresolvedMessage {
                    operation: op_name.clone(),
                    message: msg.to_owned(),
                })
        };
        let inputs = resolve("input")?;
        let outputs = resolve("output")?;
        operations.push(Operation {
            name: op_name,
            inputs,
            outputs,
            qos_history: Vec::new(),
        });
    }
    if operations.is_empty() {
        return Err(WsdlError::NoOperations(port_type_name.to_owned()));
    }

    let service = root.children().find(|n| is_wsdl(n, "service"));
    let name = service
        .and_then(|s| s.attribute("name"))
        .or_else(|| root.attribute("name"))
        .unwrap_or(port_type_name)
        .to_owned();
    let url = service
        .into_iter()
        .flat_map(|s| s.descendants())
        .find(|n| n.is_element() && n.tag_name().name() == "address")
        .and_then(|n| n.attribute("location"))
        .unwrap_or_default()
        .to_owned();

    Ok(WebService {
        name,
        business_name: String::new(),
        business_key: String::new(),
        service_key: format!("ws.{}", loaded_at.to_rfc3339_opts(SecondsFormat::Secs, true)),
        url,
        version: String::new(),
        operations,
        security_note: None,
    })
}
