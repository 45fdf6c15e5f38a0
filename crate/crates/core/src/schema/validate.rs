use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Form, Schema};
use crate::automaton::{Direction, ExternalTarget, Locus};
use crate::element::{Position, Range};
use crate::id::Id;
use crate::multigraph::Attachment;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Error, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    #[error("link `{link}` attaches to port `{port}` with the wrong direction")]
    DirectionViolation { link: Id, port: Id },
    #[error("internal port `{port}` has no owner")]
    DanglingPort { port: Id },
    #[error("`{referrer}` refers to unknown node `{node}`")]
    UnknownNode { referrer: Id, node: Id },
    #[error("`{referrer}` refers to unknown port `{port}`")]
    UnknownPort { referrer: Id, port: Id },
    #[error("link `{referrer}` is not declared")]
    UnknownLink { referrer: Id },
    #[error("external port `{port}` targets unknown slot `{target}`")]
    UnknownTarget { port: Id, target: Id },
    #[error("link `{link}` attaches to external port `{port}`")]
    ExternalPortInLink { link: Id, port: Id },
    #[error("external port `{port}` has a node owner")]
    AssignmentOnExternalPort { port: Id },
    #[error("internal port `{port}` has an external target")]
    ExternalAssignmentOnInternalPort { port: Id },
    #[error("link `{link}` has no attachment")]
    UnattachedLink { link: Id },
    #[error("`{slot}` has no admissible option")]
    EmptyChoice { slot: Id },
    #[error("variable `{variable}` has an empty range")]
    EmptyRange { variable: String },
    #[error("variable `{variable}` occurs with different ranges")]
    RangeConflict { variable: String },
    #[error("variable `{variable}` at `{slot}` has a range of the wrong kind")]
    RangeSortMismatch { variable: String, slot: Id },
    #[error("basic schema declares port `{port}`")]
    PortsInBasicSchema { port: Id },
    #[error("identifier `{id}` names more than one slot")]
    DuplicateId { id: Id },
}

impl Schema {
    /// Every broken invariant in a deterministic order; empty when valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        self.check_ids(&mut out);
        match self.form {
            Form::Basic => self.check_basic(&mut out),
            Form::Port => self.check_ports(&mut out),
        }
        self.check_variables(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn check_ids(&self, out: &mut Vec<Violation>) {
        for id in self.ports.keys().chain(self.links.keys()) {
            if self.nodes.contains_key(id) {
                out.push(Violation::DuplicateId { id: id.clone() });
            }
        }
        for id in self.links.keys() {
            if self.ports.contains_key(id) {
                out.push(Violation::DuplicateId { id: id.clone() });
            }
        }
    }

    fn check_links_exist(&self, out: &mut Vec<Violation>) {
        for l in self.links.keys() {
            match self.adjacency.get(l) {
                None => out.push(Violation::UnattachedLink { link: l.clone() }),
                Some(c) if c.is_empty() => out.push(Violation::EmptyChoice { slot: l.clone() }),
                Some(_) => {}
            }
        }
        for l in self.adjacency.keys() {
            if !self.links.contains_key(l) {
                out.push(Violation::UnknownLink { referrer: l.clone() });
            }
        }
    }

    fn check_basic(&self, out: &mut Vec<Violation>) {
        for p in self.ports.keys() {
            out.push(Violation::PortsInBasicSchema { port: p.clone() });
        }
        for p in self.internal_assignment.keys().chain(self.external_assignment.keys()) {
            out.push(Violation::PortsInBasicSchema { port: p.clone() });
        }
        self.check_links_exist(out);
        for (l, options) in &self.adjacency {
            for n in options.iter().flat_map(Attachment::endpoints) {
                if !self.nodes.contains_key(n) {
                    out.push(Violation::UnknownNode { referrer: l.clone(), node: n.clone() });
                }
            }
        }
    }

    fn check_ports(&self, out: &mut Vec<Violation>) {
        for (p, slot) in &self.ports {
            match slot.locus {
                Locus::Internal => match self.internal_assignment.get(p) {
                    None => out.push(Violation::DanglingPort { port: p.clone() }),
                    Some(c) if c.is_empty() => out.push(Violation::EmptyChoice { slot: p.clone() }),
                    Some(_) => {}
                },
                Locus::External => {
                    if self.external_assignment.get(p).is_some_and(|c| c.is_empty()) {
                        out.push(Violation::EmptyChoice { slot: p.clone() });
                    }
                }
            }
        }
        for (p, owners) in &self.internal_assignment {
            match self.ports.get(p) {
                None => out.push(Violation::UnknownPort { referrer: p.clone(), port: p.clone() }),
                Some(s) if s.locus == Locus::External => {
                    out.push(Violation::AssignmentOnExternalPort { port: p.clone() })
                }
                Some(_) => {}
            }
            for n in owners.iter() {
                if !self.nodes.contains_key(n) {
                    out.push(Violation::UnknownNode { referrer: p.clone(), node: n.clone() });
                }
            }
        }
        for (p, targets) in &self.external_assignment {
            match self.ports.get(p) {
                None => out.push(Violation::UnknownPort { referrer: p.clone(), port: p.clone() }),
                Some(s) if s.locus == Locus::Internal => {
                    out.push(Violation::ExternalAssignmentOnInternalPort { port: p.clone() })
                }
                Some(_) => {}
            }
            for t in targets.iter() {
                let known = match t {
                    ExternalTarget::Node(i) => self.nodes.contains_key(i),
                    ExternalTarget::Port(i) => self.ports.contains_key(i),
                    ExternalTarget::Link(i) => self.links.contains_key(i),
                };
                if !known {
                    out.push(Violation::UnknownTarget { port: p.clone(), target: t.id().clone() });
                }
            }
        }
        self.check_links_exist(out);
        for (l, options) in &self.adjacency {
            for a in options.iter() {
                let ends = a
                    .begin()
                    .map(|p| (p, Direction::Outlet))
                    .into_iter()
                    .chain(a.end().map(|p| (p, Direction::Inlet)));
                for (p, wanted) in ends {
                    match self.ports.get(p) {
                        None => out.push(Violation::UnknownPort { referrer: l.clone(), port: p.clone() }),
                        Some(s) if s.locus == Locus::External => {
                            out.push(Violation::ExternalPortInLink { link: l.clone(), port: p.clone() })
                        }
                        Some(s) if s.direction != wanted => {
                            out.push(Violation::DirectionViolation { link: l.clone(), port: p.clone() })
                        }
                        Some(_) => {}
                    }
                }
            }
        }
    }

    fn check_variables(&self, out: &mut Vec<Violation>) {
        let mut seen: BTreeMap<&str, &Range> = BTreeMap::new();
        for (_, slot, element) in self.slots() {
            for (position, var) in element.variables() {
                if var.range.is_empty() {
                    out.push(Violation::EmptyRange { variable: var.name.clone() });
                }
                let param_position = matches!(position, Position::Param(_));
                if param_position != var.range.is_param_range() {
                    out.push(Violation::RangeSortMismatch { variable: var.name.clone(), slot: slot.clone() });
                }
                match seen.get(var.name.as_str()) {
                    Some(r) if **r != var.range => {
                        out.push(Violation::RangeConflict { variable: var.name.clone() })
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(&var.name, &var.range);
                    }
                }
            }
        }
    }
}
