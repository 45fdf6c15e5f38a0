//! Views derived from a schema: its variable multiset, grids, basic form,
//! and classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Form, PortSlot, Schema, SchemaError};
use crate::automaton::{role_from, Direction, LinkClass, Locus, Role};
use crate::element::{Choice, Element, Position, Range};
use crate::id::{fresh_id, Id};
use crate::kind::Sort;
use crate::multigraph::{Attachment, AttachmentShape, VariableMultigraph};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Occurrence {
    pub slot: Id,
    pub sort: Sort,
    pub position: Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// A single occurrence.
    Individual,
    /// Several occurrences, but not every slot of its sorts.
    Local,
    /// Every slot of each sort it occurs in.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicClass {
    System,
    Function,
    Process,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableEntry {
    pub range: Range,
    pub occurrences: Vec<Occurrence>,
    pub scope: Scope,
    pub dynamic_class: DynamicClass,
}

impl VariableEntry {
    pub fn multiplicity(&self) -> usize {
        self.occurrences.len()
    }
}

/// Variable names with their occurrences. Each occurrence counts once
/// towards multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMultiset {
    pub entries: BTreeMap<String, VariableEntry>,
}

impl VariableMultiset {
    pub fn total(&self) -> usize {
        self.entries.values().map(VariableEntry::multiplicity).sum()
    }

    pub fn multiplicity(&self, name: &str) -> usize {
        self.entries.get(name).map_or(0, VariableEntry::multiplicity)
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }
}

/// The set of roles a schema's realizations can take, and whether any port
/// may be left free.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaClassification {
    pub roles: BTreeSet<Role>,
    pub potentially_open: bool,
}

impl Schema {
    pub fn variable_multiset(&self) -> VariableMultiset {
        let mut raw: BTreeMap<String, (Range, Vec<Occurrence>)> = BTreeMap::new();
        for (sort, slot, element) in self.slots() {
            for (position, var) in element.variables() {
                raw.entry(var.name.clone())
                    .or_insert_with(|| (var.range.clone(), Vec::new()))
                    .1
                    .push(Occurrence { slot: slot.clone(), sort, position });
            }
        }
        let sort_size = |sort: Sort| match sort {
            Sort::Node => self.nodes.len(),
            Sort::Port => self.ports.len(),
            Sort::Link => self.links.len(),
        };
        let entries = raw
            .into_iter()
            .map(|(name, (range, occurrences))| {
                let scope = if occurrences.len() == 1 {
                    Scope::Individual
                } else {
                    let sorts: BTreeSet<Sort> = occurrences.iter().map(|o| o.sort).collect();
                    let covers = sorts.iter().all(|&s| {
                        let slots: BTreeSet<&Id> =
                            occurrences.iter().filter(|o| o.sort == s).map(|o| &o.slot).collect();
                        slots.len() == sort_size(s)
                    });
                    if covers {
                        Scope::Global
                    } else {
                        Scope::Local
                    }
                };
                let on_process = occurrences.iter().any(|o| {
                    o.sort == Sort::Link && self.links[&o.slot].class == LinkClass::Process
                });
                let functional = match &range {
                    Range::Kinds(ks) => ks.iter().any(|k| k.tags().first().is_some_and(|t| t == "function")),
                    _ => false,
                };
                let dynamic_class = if on_process {
                    DynamicClass::Process
                } else if functional {
                    DynamicClass::Function
                } else {
                    DynamicClass::System
                };
                (name, VariableEntry { range, occurrences, scope, dynamic_class })
            })
            .collect();
        VariableMultiset { entries }
    }

    /// Owners a port may have, as a choice of nodes.
    fn owners(&self, port: &Id) -> BTreeSet<Id> {
        self.internal_assignment.get(port).map(|c| c.options().clone()).unwrap_or_default()
    }

    /// Every node attachment the port attachment `a` can lift to.
    fn lift(&self, a: &Attachment<Id>) -> BTreeSet<Attachment<Id>> {
        match a {
            Attachment::Closed { begin, end } => {
                let ends = self.owners(end);
                self.owners(begin)
                    .into_iter()
                    .flat_map(|b| ends.iter().map(move |e| Attachment::closed(b.clone(), e.clone())))
                    .collect()
            }
            Attachment::BeginOnly(p) => self.owners(p).into_iter().map(Attachment::BeginOnly).collect(),
            Attachment::EndOnly(p) => self.owners(p).into_iter().map(Attachment::EndOnly).collect(),
        }
    }

    fn lifted_adjacency(&self) -> BTreeMap<Id, Choice<Attachment<Id>>> {
        match self.form {
            Form::Basic => self.adjacency.clone(),
            Form::Port => self
                .adjacency
                .iter()
                .map(|(l, c)| (l.clone(), c.iter().flat_map(|a| self.lift(a)).collect()))
                .collect(),
        }
    }

    /// The grid: nodes and links, with port attachments lifted pointwise to
    /// every possible owner.
    pub fn grid(&self) -> Result<VariableMultigraph, SchemaError> {
        self.ensure_valid()?;
        Ok(VariableMultigraph {
            vertices: self.nodes.keys().cloned().collect(),
            edges: self
                .lifted_adjacency()
                .into_iter()
                .map(|(l, c)| (l, c.into_options()))
                .collect(),
        })
    }

    /// The connection grid: internal ports as vertices, links attached to
    /// ports.
    pub fn connection_grid(&self) -> Result<VariableMultigraph, SchemaError> {
        if self.form != Form::Port {
            return Err(SchemaError::NotAPortSchema);
        }
        self.ensure_valid()?;
        Ok(VariableMultigraph {
            vertices: self.internal_ports().map(|(p, _)| p.clone()).collect(),
            edges: self.adjacency.iter().map(|(l, c)| (l.clone(), c.options().clone())).collect(),
        })
    }

    /// Forgets the ports: every link attaches to nodes through the lifted
    /// adjacency. A basic schema is returned unchanged.
    pub fn to_basic(&self) -> Result<Schema, SchemaError> {
        self.ensure_valid()?;
        Ok(Schema {
            header: self.header.clone(),
            form: Form::Basic,
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            adjacency: self.lifted_adjacency(),
            ..Default::default()
        })
    }

    /// Gives every node of a basic schema one inlet and one outlet and
    /// reattaches the links through them.
    pub fn to_port_form(&self) -> Result<Schema, SchemaError> {
        self.ensure_valid()?;
        if self.form == Form::Port {
            return Ok(self.clone());
        }
        let mut out = Schema {
            header: self.header.clone(),
            form: Form::Port,
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            ..Default::default()
        };
        let mut inlet = BTreeMap::new();
        let mut outlet = BTreeMap::new();
        for n in self.nodes.keys() {
            for (suffix, direction, table) in
                [("in", Direction::Inlet, &mut inlet), ("out", Direction::Outlet, &mut outlet)]
            {
                let p = fresh_id(&format!("{n}_{suffix}"), |c| self.has_slot(c) || out.ports.contains_key(c));
                out.ports.insert(
                    p.clone(),
                    PortSlot { direction, locus: Locus::Internal, element: Element::constant("port") },
                );
                out.internal_assignment.insert(p.clone(), Choice::single(n.clone()));
                table.insert(n.clone(), p);
            }
        }
        for (l, c) in &self.adjacency {
            let options = c
                .iter()
                .map(|a| match a {
                    Attachment::Closed { begin, end } => {
                        Attachment::closed(outlet[begin].clone(), inlet[end].clone())
                    }
                    Attachment::BeginOnly(b) => Attachment::BeginOnly(outlet[b].clone()),
                    Attachment::EndOnly(e) => Attachment::EndOnly(inlet[e].clone()),
                })
                .collect();
            out.adjacency.insert(l.clone(), options);
        }
        Ok(out)
    }

    /// Every role some resolution of the schema's choices can take.
    pub fn classify(&self) -> Result<SchemaClassification, SchemaError> {
        let grid = self.grid()?;
        let ext_in = self.external_ports().any(|(_, p)| p.direction == Direction::Inlet);
        let ext_out = self.external_ports().any(|(_, p)| p.direction == Direction::Outlet);
        // Reachable (begin-open seen, end-open seen) pairs over all links.
        let mut reachable = BTreeSet::from([(false, false)]);
        for shapes in grid.edge_shapes().values() {
            let mut next = BTreeSet::new();
            for &(b, e) in &reachable {
                for shape in shapes {
                    next.insert(match shape {
                        AttachmentShape::Closed => (b, e),
                        AttachmentShape::BeginOnly => (true, e),
                        AttachmentShape::EndOnly => (b, true),
                    });
                }
            }
            reachable = next;
        }
        Ok(SchemaClassification {
            roles: reachable.into_iter().map(|(b, e)| role_from(ext_in, ext_out, b, e)).collect(),
            potentially_open: !self.free_ports().is_empty(),
        })
    }
}
