//! JSON network and evidence documents.
//!
//! ```json
//! {
//!   "comment": "optional",
//!   "variables": [ { "name": "A", "states": ["false", "true"] } ],
//!   "cpts": [ { "node": "A", "parents": [], "rows": [[0.1, 0.9]] } ]
//! }
//! ```
//!
//! Rows are ordered over parent configurations with the last listed parent
//! varying fastest. Unknown fields are rejected. An evidence document is a
//! flat `{ "variable": "state" }` object.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::network::{BeliefNetwork, Evidence, NetworkBuilder, NetworkError, Variable};
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub variables: Vec<VariableDocument>,
    pub cpts: Vec<CptDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDocument {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptDocument {
    pub node: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_error(err: serde_json::Error) -> NetworkError {
    NetworkError::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

impl NetworkDocument {
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        serde_json::from_str(text).map_err(parse_error)
    }

    pub fn to_network<T: Probability>(&self) -> Result<BeliefNetwork<T>, NetworkError> {
        let mut builder = NetworkBuilder::new();
        for v in &self.variables {
            builder.add_variable(Variable::new(v.name.clone(), v.states.clone())?)?;
        }
        for c in &self.cpts {
            let node = builder
                .node_id(&c.node)
                .ok_or_else(|| NetworkError::UnknownVariable(c.node.clone()))?;
            let parents = c
                .parents
                .iter()
                .map(|p| {
                    builder
                        .node_id(p)
                        .ok_or_else(|| NetworkError::UnknownVariable(p.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rows = c
                .rows
                .iter()
                .map(|r| r.iter().map(|&p| T::from_f64_lossy(p)).collect())
                .collect();
            builder.set_cpt(node, parents, rows)?;
        }
        builder.build()
    }

    /// Canonical document: variables and CPTs in node-id order.
    pub fn from_network<T: Probability>(net: &BeliefNetwork<T>, comment: Option<String>) -> Self {
        let variables = net
            .variables()
            .iter()
            .map(|v| VariableDocument {
                name: v.name().to_owned(),
                states: v.states().to_vec(),
            })
            .collect();
        let cpts = (0..net.len())
            .map(|j| {
                let cpt = net.cpt(j);
                CptDocument {
                    node: net.variable(j).name().to_owned(),
                    parents: cpt
                        .parents()
                        .iter()
                        .map(|&p| net.variable(p).name().to_owned())
                        .collect(),
                    rows: cpt
                        .rows()
                        .map(|r| r.iter().map(|p| p.to_f64_lossless()).collect())
                        .collect(),
                }
            })
            .collect();
        Self {
            comment,
            variables,
            cpts,
        }
    }
}

/// Parses and validates a network document.
pub fn load_network<T: Probability>(text: &str) -> Result<BeliefNetwork<T>, NetworkError> {
    NetworkDocument::parse(text)?.to_network()
}

/// Pretty-printed canonical document for `net`.
pub fn serialize_network<T: Probability>(net: &BeliefNetwork<T>) -> String {
    serde_json::to_string_pretty(&NetworkDocument::from_network(net, None))
        .expect("network document serializes")
}

/// Parses an evidence document against `net`.
pub fn load_evidence<T: Probability>(
    net: &BeliefNetwork<T>,
    text: &str,
) -> Result<Evidence, NetworkError> {
    let map: BTreeMap<String, String> = serde_json::from_str(text).map_err(parse_error)?;
    Evidence::from_names(net, map.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

pub fn serialize_evidence<T: Probability>(net: &BeliefNetwork<T>, ev: &Evidence) -> String {
    serde_json::to_string_pretty(&ev.to_names(net)).expect("evidence serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"{"variables":[{"name":"X","states":["a","b"]}],
        "cpts":[{"node":"X","parents":[],"rows":[[0.5,0.5]]}]}"#;

    #[test]
    fn single_root() {
        let net: BeliefNetwork<f64> = load_network(SINGLE).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.cpt(0).row(0), &[0.5, 0.5]);
    }

    #[test]
    fn bad_row_sum() {
        let text = SINGLE.replace("[0.5,0.5]", "[0.5,0.6]");
        assert!(matches!(
            load_network::<f64>(&text),
            Err(NetworkError::RowSum { node, row: 0, .. }) if node == "X"
        ));
    }

    #[test]
    fn syntax_error_has_position() {
        let text = "{\n  \"variables\": [\n    oops\n";
        match load_network::<f64>(text) {
            Err(NetworkError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = SINGLE.replacen("\"parents\":[]", "\"parents\":[],\"weight\":2", 1);
        assert!(matches!(load_network::<f64>(&text), Err(NetworkError::Parse { .. })));
        let text = SINGLE.replacen("{\"variables\"", "{\"extra\":1,\"variables\"", 1);
        assert!(matches!(load_network::<f64>(&text), Err(NetworkError::Parse { .. })));
    }

    #[test]
    fn unknown_parent_rejected() {
        let text = SINGLE.replace("\"parents\":[]", "\"parents\":[\"Q\"]");
        assert_eq!(
            load_network::<f64>(&text).unwrap_err(),
            NetworkError::UnknownVariable("Q".into())
        );
    }

    #[test]
    fn evidence_document() {
        let net: BeliefNetwork<f64> = load_network(SINGLE).unwrap();
        let ev = load_evidence(&net, r#"{"X": "b"}"#).unwrap();
        assert_eq!(ev.get(0), Some(1));
        assert!(load_evidence(&net, r#"{"X": "c"}"#).is_err());
        assert!(load_evidence(&net, r#"{"Y": "a"}"#).is_err());
        let back = load_evidence(&net, &serialize_evidence(&net, &ev)).unwrap();
        assert_eq!(back, ev);
    }

    #[test]
    fn f32_loading() {
        let net: BeliefNetwork<f32> = load_network(SINGLE).unwrap();
        assert_eq!(net.cpt(0).row(0), &[0.5f32, 0.5]);
    }
}
