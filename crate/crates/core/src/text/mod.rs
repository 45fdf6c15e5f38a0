//! The plain-text document format, its canonical writer, and DOT export.
//!
//! ```text
//! schema pipeline : port {
//!   kind node automaton/finite_automaton;
//!   note "two stages";
//!   node a : const automaton/finite_automaton;
//!   node b : var A range {automaton/finite_automaton};
//!   port a_out out internal of a;
//!   port b_in in internal of {a|b};
//!   port x in external of a;
//!   link l : info from a_out to b_in;
//! }
//! ```

mod dot;
mod lexer;
mod parser;
mod writer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dot::{export_dot, DotOptions};
pub use parser::{
    parse_abstraction_item, parse_binding_entry, parse_determination_entry, parse_morphism, parse_range,
    parse_schema_text,
};
pub use writer::{write_morphism, write_schema};

use crate::automaton::{BasicGridAutomaton, GridAutomaton};
use crate::id::Id;
use crate::morphism::SchemaMorphism;
use crate::schema::{Schema, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{}{message}", .id.as_ref().map(|i| format!("`{i}`: ")).unwrap_or_default())]
    Semantic { id: Option<Id>, message: String },
}

impl ParseError {
    pub(crate) fn from_violation(v: &Violation) -> Self {
        let id = match v {
            Violation::DirectionViolation { link, .. }
            | Violation::ExternalPortInLink { link, .. }
            | Violation::UnattachedLink { link } => Some(link.clone()),
            Violation::DanglingPort { port }
            | Violation::AssignmentOnExternalPort { port }
            | Violation::ExternalAssignmentOnInternalPort { port }
            | Violation::PortsInBasicSchema { port }
            | Violation::UnknownTarget { port, .. } => Some(port.clone()),
            Violation::UnknownNode { referrer, .. }
            | Violation::UnknownPort { referrer, .. }
            | Violation::UnknownLink { referrer } => Some(referrer.clone()),
            Violation::EmptyChoice { slot } | Violation::RangeSortMismatch { slot, .. } => Some(slot.clone()),
            Violation::DuplicateId { id } => Some(id.clone()),
            Violation::EmptyRange { .. } | Violation::RangeConflict { .. } => None,
        };
        ParseError::Semantic { id, message: v.to_string() }
    }
}

/// A parsed document. Variable-free documents with single-valued clauses
/// load as automata.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Schema(Schema),
    Automaton(GridAutomaton),
    BasicAutomaton(BasicGridAutomaton),
}

impl Model {
    pub fn from_schema(s: Schema) -> Model {
        if let Some(ga) = s.to_automaton() {
            Model::Automaton(ga)
        } else if let Some(ba) = s.to_basic_automaton() {
            Model::BasicAutomaton(ba)
        } else {
            Model::Schema(s)
        }
    }

    pub fn to_schema(&self) -> Schema {
        match self {
            Model::Schema(s) => s.clone(),
            Model::Automaton(ga) => Schema::from_automaton(ga),
            Model::BasicAutomaton(ba) => Schema::from_basic_automaton(ba),
        }
    }

    pub fn into_schema(self) -> Schema {
        match self {
            Model::Schema(s) => s,
            other => other.to_schema(),
        }
    }
}

/// Parses and validates one schema document.
pub fn parse(text: &str) -> Result<Model, ParseError> {
    let s = parse_schema_text(text)?;
    if let Some(v) = s.validate().first() {
        return Err(ParseError::from_violation(v));
    }
    Ok(Model::from_schema(s))
}

/// Canonical text of a model.
pub fn serialize(model: &Model) -> String {
    write_schema(&model.to_schema())
}

/// A morphism document with the names of the schemas it relates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismDocument {
    pub name: String,
    pub domain: String,
    pub codomain: String,
    pub morphism: SchemaMorphism,
}
