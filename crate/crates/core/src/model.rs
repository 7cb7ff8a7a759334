//! JSON model documents.
//!
//! ```json
//! {
//!   "kind": "flowgraph",
//!   "states": ["0", "1", "2"],
//!   "branches": [
//!     {"from": "0", "to": "1", "prob": 1, "waiting": {"type": "exponential", "rate": 2}},
//!     {"from": "1", "to": "2", "prob": 1, "waiting": {"type": "exponential", "rate": 3}}
//!   ],
//!   "query": {"source": "0", "target": "2"}
//! }
//! ```
//!
//! Waiting types are `exponential` (`rate`), `erlang` (`shape`, `rate`) and
//! `rational_mgf` (`numerator`, `denominator`, ascending coefficients).
//! A Markov jump process document has `"kind": "mjp"`, `states` and a
//! row-major rate matrix `q`. Unknown keys are rejected. All rates share
//! one implicit time unit.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::WaitingTime;
use crate::error::{Error, Result};
use crate::flowgraph::{Branch, Flowgraph};
use crate::mjp::{embed_flowgraph, embed_generator, mjp_to_flowgraph, Embedding, GeneratorMatrix};
use crate::ratfun::RationalFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelDocument {
    Flowgraph(FlowgraphDoc),
    Mjp(MjpDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowgraphDoc {
    pub states: Vec<String>,
    pub branches: Vec<BranchDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<Query>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub from: String,
    pub to: String,
    pub prob: f64,
    pub waiting: WaitingDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaitingDoc {
    Exponential { rate: f64 },
    Erlang { shape: u32, rate: f64 },
    RationalMgf { numerator: Vec<f64>, denominator: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MjpDoc {
    pub states: Vec<String>,
    pub q: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<Query>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    pub source: String,
    pub target: String,
}

/// A syntax or schema error. Syntax errors carry their position; schema
/// errors inside a tagged object report line 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

impl ModelDocument {
    pub fn parse(text: &str) -> std::result::Result<Self, ParseError> {
        serde_json::from_str(text).map_err(|e| ParseError { line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ParseError> {
        let text = std::fs::read_to_string(path).map_err(|e| ParseError {
            line: 0,
            column: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn query(&self) -> Option<&Query> {
        match self {
            ModelDocument::Flowgraph(d) => d.query.as_ref(),
            ModelDocument::Mjp(d) => d.query.as_ref(),
        }
    }

    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            ModelDocument::Flowgraph(d) => {
                let branches = d.branches.iter().map(BranchDoc::build).collect::<Result<Vec<_>>>()?;
                Model::Flowgraph(Flowgraph::new(d.states.clone(), branches)?)
            }
            ModelDocument::Mjp(d) => Model::Mjp(GeneratorMatrix::new(d.states.clone(), &d.q)?),
        })
    }
}

impl BranchDoc {
    fn build(&self) -> Result<Branch> {
        let waiting = match &self.waiting {
            WaitingDoc::Exponential { rate } => WaitingTime::exponential(*rate)?,
            WaitingDoc::Erlang { shape, rate } => WaitingTime::erlang(*shape, *rate)?,
            WaitingDoc::RationalMgf { numerator, denominator } => {
                WaitingTime::rational_mgf(RationalFunction::from_coeffs(numerator.clone(), denominator.clone())?)?
            }
        };
        Branch::new(self.from.clone(), self.to.clone(), self.prob, waiting)
    }
}

/// A parsed and constructed model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Flowgraph(Flowgraph),
    Mjp(GeneratorMatrix),
}

impl Model {
    /// The flowgraph itself, or the embedded flowgraph of a generator.
    pub fn flowgraph(&self) -> Result<Flowgraph> {
        match self {
            Model::Flowgraph(g) => Ok(g.clone()),
            Model::Mjp(q) => mjp_to_flowgraph(q),
        }
    }

    /// The Markov jump process used by the ODE and simulation oracles.
    pub fn embedding(&self, source: &str, target: &str) -> Result<Embedding> {
        match self {
            Model::Flowgraph(g) => embed_flowgraph(g, source, target),
            Model::Mjp(q) => embed_generator(q, source, target),
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Model::Flowgraph(g) => g.states(),
            Model::Mjp(q) => q.labels(),
        }
    }
}

/// Resolves `(source, target)` from explicit overrides or the document defaults.
pub fn resolve_query(doc: &ModelDocument, from: Option<&str>, to: Option<&str>) -> Result<(String, String)> {
    let default = doc.query();
    let source = from.map(str::to_string).or_else(|| default.map(|q| q.source.clone()));
    let target = to.map(str::to_string).or_else(|| default.map(|q| q.target.clone()));
    match (source, target) {
        (Some(s), Some(t)) => Ok((s, t)),
        _ => Err(Error::InvalidParameter(
            "no source/target: pass --from and --to or add a \"query\" to the model".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KIDNEY: &str = r#"{
        "kind": "flowgraph",
        "states": ["0", "1", "2"],
        "branches": [
            {"from": "0", "to": "1", "prob": 1, "waiting": {"type": "exponential", "rate": 2}},
            {"from": "1", "to": "2", "prob": 1, "waiting": {"type": "exponential", "rate": 3}}
        ],
        "query": {"source": "0", "target": "2"}
    }"#;

    #[test]
    fn parses_flowgraph() {
        let doc = ModelDocument::parse(KIDNEY).unwrap();
        let model = doc.build().unwrap();
        assert_eq!(model.flowgraph().unwrap().branches().len(), 2);
        assert_eq!(resolve_query(&doc, None, None).unwrap(), ("0".into(), "2".into()));
        assert_eq!(resolve_query(&doc, Some("1"), None).unwrap(), ("1".into(), "2".into()));
    }

    #[test]
    fn parses_mjp() {
        let doc = ModelDocument::parse(
            r#"{"kind": "mjp", "states": ["a", "b"], "q": [[-1, 1], [0, 0]]}"#,
        )
        .unwrap();
        let Model::Mjp(q) = doc.build().unwrap() else { panic!() };
        assert_eq!(q.rate(0, 1), 1.0);
        assert!(resolve_query(&doc, None, None).is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let typo = KIDNEY.replace("\"rate\": 3", "\"rat\": 3");
        let err = ModelDocument::parse(&typo).unwrap_err();
        assert!(err.message.contains("`rat`"), "{err}");
        let broken = KIDNEY.replace("\"prob\": 1,", "\"prob\": 1");
        assert!(ModelDocument::parse(&broken).unwrap_err().line > 1);
        let extra = KIDNEY.replace("\"states\"", "\"colour\": 1, \"states\"");
        assert!(ModelDocument::parse(&extra).is_err());
        let extra_branch = KIDNEY.replace("\"prob\": 1,", "\"prob\": 1, \"label\": \"x\",");
        assert!(ModelDocument::parse(&extra_branch).is_err());
        assert!(ModelDocument::parse(r#"{"kind": "petri", "states": []}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let doc = ModelDocument::parse(KIDNEY).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(ModelDocument::parse(&text).unwrap(), doc);
    }
}
