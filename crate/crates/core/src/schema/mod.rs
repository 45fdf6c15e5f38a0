//! Schemas: grid automata whose elements may be variables and whose
//! assignments and adjacency may offer several alternatives.

mod derive;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use derive::{
    DynamicClass, Occurrence, SchemaClassification, Scope, VariableEntry, VariableMultiset,
};
pub use validate::Violation;

use crate::automaton::{
    BasicGridAutomaton, Channel, Direction, ExternalTarget, GridAutomaton, Header, Link, LinkClass,
    Locus, Port,
};
use crate::element::{Choice, Element};
use crate::id::Id;
use crate::kind::{Constant, Sort};
use crate::multigraph::Attachment;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("invalid schema: {}", crate::automaton::join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("operation needs a schema with ports")]
    NotAPortSchema,
    #[error("unknown slot `{0}`")]
    UnknownSlot(Id),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// Links attach directly to nodes.
    #[default]
    Basic,
    /// Links attach to ports owned by nodes.
    Port,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSlot {
    pub direction: Direction,
    pub locus: Locus,
    pub element: Element,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSlot {
    pub class: LinkClass,
    pub channel: Channel,
    pub element: Element,
}

/// A schema in either form.
///
/// In basic form `adjacency` ranges over nodes and there are no ports; in
/// port form it ranges over internal ports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub header: Header,
    pub form: Form,
    pub nodes: BTreeMap<Id, Element>,
    pub ports: BTreeMap<Id, PortSlot>,
    pub links: BTreeMap<Id, LinkSlot>,
    pub internal_assignment: BTreeMap<Id, Choice<Id>>,
    pub adjacency: BTreeMap<Id, Choice<Attachment<Id>>>,
    pub external_assignment: BTreeMap<Id, Choice<ExternalTarget>>,
}

/// A set of slot identifiers, one set per sort.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSelection {
    pub nodes: BTreeSet<Id>,
    pub ports: BTreeSet<Id>,
    pub links: BTreeSet<Id>,
}

impl SlotSelection {
    pub fn of(s: &Schema) -> Self {
        SlotSelection {
            nodes: s.nodes.keys().cloned().collect(),
            ports: s.ports.keys().cloned().collect(),
            links: s.links.keys().cloned().collect(),
        }
    }
}

impl Schema {
    pub fn new(name: &str, form: Form) -> Self {
        Schema { header: Header::named(name), form, ..Default::default() }
    }

    pub fn with_node(mut self, id: &str, element: Element) -> Self {
        self.nodes.insert(Id::new(id), element);
        self
    }

    /// Adds an internal port owned by one of `owners`.
    pub fn with_port(mut self, id: &str, direction: Direction, owners: &[&str]) -> Self {
        let id = Id::new(id);
        self.ports.insert(
            id.clone(),
            PortSlot { direction, locus: Locus::Internal, element: Element::constant("port") },
        );
        self.internal_assignment.insert(id, owners.iter().map(|o| Id::new(*o)).collect());
        self
    }

    pub fn with_external_port(
        mut self,
        id: &str,
        direction: Direction,
        target: Option<ExternalTarget>,
    ) -> Self {
        let id = Id::new(id);
        self.ports.insert(
            id.clone(),
            PortSlot { direction, locus: Locus::External, element: Element::constant("port") },
        );
        if let Some(t) = target {
            self.external_assignment.insert(id, Choice::single(t));
        }
        self
    }

    pub fn with_link(mut self, id: &str, class: LinkClass, options: &[Attachment<&str>]) -> Self {
        let id = Id::new(id);
        self.links.insert(
            id.clone(),
            LinkSlot { class, channel: Channel::Simple, element: Element::constant("link") },
        );
        self.adjacency.insert(id, options.iter().map(|a| a.map(|e| Id::new(*e))).collect());
        self
    }

    pub fn name(&self) -> &str {
        &self.header.name
    }

    /// Equality ignoring the header.
    pub fn content_eq(&self, other: &Schema) -> bool {
        self.form == other.form
            && self.nodes == other.nodes
            && self.ports == other.ports
            && self.links == other.links
            && self.internal_assignment == other.internal_assignment
            && self.adjacency == other.adjacency
            && self.external_assignment == other.external_assignment
    }

    pub fn slot_count(&self) -> usize {
        self.nodes.len() + self.ports.len() + self.links.len()
    }

    /// The sort of the slot named `id` together with its element.
    pub fn slot(&self, id: &Id) -> Option<(Sort, &Element)> {
        if let Some(e) = self.nodes.get(id) {
            Some((Sort::Node, e))
        } else if let Some(p) = self.ports.get(id) {
            Some((Sort::Port, &p.element))
        } else {
            self.links.get(id).map(|l| (Sort::Link, &l.element))
        }
    }

    pub fn slot_mut(&mut self, id: &Id) -> Option<&mut Element> {
        if let Some(e) = self.nodes.get_mut(id) {
            Some(e)
        } else if let Some(p) = self.ports.get_mut(id) {
            Some(&mut p.element)
        } else {
            self.links.get_mut(id).map(|l| &mut l.element)
        }
    }

    /// Every slot in sort order: nodes, ports, links.
    pub fn slots(&self) -> impl Iterator<Item = (Sort, &Id, &Element)> {
        self.nodes
            .iter()
            .map(|(i, e)| (Sort::Node, i, e))
            .chain(self.ports.iter().map(|(i, p)| (Sort::Port, i, &p.element)))
            .chain(self.links.iter().map(|(i, l)| (Sort::Link, i, &l.element)))
    }

    pub fn slots_mut(&mut self) -> impl Iterator<Item = (Sort, &Id, &mut Element)> {
        self.nodes
            .iter_mut()
            .map(|(i, e)| (Sort::Node, i, e))
            .chain(self.ports.iter_mut().map(|(i, p)| (Sort::Port, i, &mut p.element)))
            .chain(self.links.iter_mut().map(|(i, l)| (Sort::Link, i, &mut l.element)))
    }

    pub fn has_slot(&self, id: &Id) -> bool {
        self.slot(id).is_some()
    }

    pub fn is_zero_variable(&self) -> bool {
        self.slots().all(|(_, _, e)| e.is_constant())
    }

    /// Every assignment and adjacency entry has exactly one option.
    pub fn is_deterministic(&self) -> bool {
        self.internal_assignment.values().all(|c| c.len() == 1)
            && self.adjacency.values().all(|c| c.len() == 1)
            && self.external_assignment.values().all(|c| c.len() == 1)
    }

    pub fn internal_ports(&self) -> impl Iterator<Item = (&Id, &PortSlot)> {
        self.ports.iter().filter(|(_, p)| p.locus == Locus::Internal)
    }

    pub fn external_ports(&self) -> impl Iterator<Item = (&Id, &PortSlot)> {
        self.ports.iter().filter(|(_, p)| p.locus == Locus::External)
    }

    pub fn ensure_valid(&self) -> Result<(), SchemaError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SchemaError::Invalid(v))
        }
    }

    /// Ports that no link option attaches to and, for external ports, that
    /// have no assignment.
    pub fn free_ports(&self) -> BTreeSet<Id> {
        let attached: BTreeSet<&Id> =
            self.adjacency.values().flat_map(|c| c.iter().flat_map(|a| a.endpoints())).collect();
        self.ports
            .iter()
            .filter(|(id, p)| match p.locus {
                Locus::Internal => !attached.contains(id),
                Locus::External => !self.external_assignment.contains_key(*id),
            })
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn from_automaton(ga: &GridAutomaton) -> Schema {
        Schema {
            header: ga.header.clone(),
            form: Form::Port,
            nodes: ga.nodes.iter().map(|(i, c)| (i.clone(), Element::Constant(c.clone()))).collect(),
            ports: ga
                .ports
                .iter()
                .map(|(i, p)| {
                    (
                        i.clone(),
                        PortSlot {
                            direction: p.direction,
                            locus: p.locus,
                            element: Element::Constant(p.kind.clone()),
                        },
                    )
                })
                .collect(),
            links: ga
                .links
                .iter()
                .map(|(i, l)| {
                    (
                        i.clone(),
                        LinkSlot { class: l.class, channel: l.channel, element: Element::Constant(l.kind.clone()) },
                    )
                })
                .collect(),
            internal_assignment: ga
                .internal_assignment
                .iter()
                .map(|(p, n)| (p.clone(), Choice::single(n.clone())))
                .collect(),
            adjacency: ga.adjacency.iter().map(|(l, a)| (l.clone(), Choice::single(a.clone()))).collect(),
            external_assignment: ga
                .external_assignment
                .iter()
                .map(|(p, t)| (p.clone(), Choice::single(t.clone())))
                .collect(),
        }
    }

    pub fn from_basic_automaton(ba: &BasicGridAutomaton) -> Schema {
        Schema {
            header: ba.header.clone(),
            form: Form::Basic,
            nodes: ba.nodes.iter().map(|(i, c)| (i.clone(), Element::Constant(c.clone()))).collect(),
            links: ba
                .links
                .iter()
                .map(|(i, l)| {
                    (
                        i.clone(),
                        LinkSlot { class: l.class, channel: l.channel, element: Element::Constant(l.kind.clone()) },
                    )
                })
                .collect(),
            adjacency: ba
                .node_adjacency
                .iter()
                .map(|(l, a)| (l.clone(), Choice::single(a.clone())))
                .collect(),
            ..Default::default()
        }
    }

    fn constants(&self) -> Option<(BTreeMap<Id, Constant>, BTreeMap<Id, Link>)> {
        let nodes = self
            .nodes
            .iter()
            .map(|(i, e)| e.as_constant().map(|c| (i.clone(), c.clone())))
            .collect::<Option<_>>()?;
        let links = self
            .links
            .iter()
            .map(|(i, l)| {
                l.element
                    .as_constant()
                    .map(|c| (i.clone(), Link { class: l.class, channel: l.channel, kind: c.clone() }))
            })
            .collect::<Option<_>>()?;
        Some((nodes, links))
    }

    /// The automaton this schema denotes when it is variable-free and
    /// deterministic in port form.
    pub fn to_automaton(&self) -> Option<GridAutomaton> {
        if self.form != Form::Port || !self.is_zero_variable() || !self.is_deterministic() {
            return None;
        }
        let (nodes, links) = self.constants()?;
        Some(GridAutomaton {
            header: self.header.clone(),
            nodes,
            links,
            ports: self
                .ports
                .iter()
                .map(|(i, p)| {
                    p.element.as_constant().map(|c| {
                        (i.clone(), Port { direction: p.direction, locus: p.locus, kind: c.clone() })
                    })
                })
                .collect::<Option<_>>()?,
            internal_assignment: single_valued(&self.internal_assignment),
            adjacency: single_valued(&self.adjacency),
            external_assignment: single_valued(&self.external_assignment),
        })
    }

    pub fn to_basic_automaton(&self) -> Option<BasicGridAutomaton> {
        if self.form != Form::Basic || !self.is_zero_variable() || !self.is_deterministic() {
            return None;
        }
        let (nodes, links) = self.constants()?;
        Some(BasicGridAutomaton {
            header: self.header.clone(),
            nodes,
            links,
            node_adjacency: single_valued(&self.adjacency),
        })
    }

    /// Keeps only the selected slots. Options that mention a dropped slot
    /// are removed; a link with no option left is dropped, as is an
    /// external assignment with no target left.
    pub fn restrict(&self, keep: &SlotSelection) -> Schema {
        let attach_keep: &BTreeSet<Id> = match self.form {
            Form::Basic => &keep.nodes,
            Form::Port => &keep.ports,
        };
        let mut out = Schema {
            header: self.header.clone(),
            form: self.form,
            nodes: filter_keys(&self.nodes, &keep.nodes),
            ports: filter_keys(&self.ports, &keep.ports),
            ..Default::default()
        };
        for (p, owners) in &self.internal_assignment {
            if keep.ports.contains(p) {
                let kept: Choice<Id> = owners.iter().filter(|n| keep.nodes.contains(*n)).cloned().collect();
                if !kept.is_empty() {
                    out.internal_assignment.insert(p.clone(), kept);
                }
            }
        }
        for (l, options) in &self.adjacency {
            if !keep.links.contains(l) {
                continue;
            }
            let kept: Choice<Attachment<Id>> = options
                .iter()
                .filter_map(|a| a.restrict(|e| attach_keep.contains(e)))
                .collect();
            if !kept.is_empty() {
                out.links.insert(l.clone(), self.links[l].clone());
                out.adjacency.insert(l.clone(), kept);
            }
        }
        for (p, targets) in &self.external_assignment {
            if !keep.ports.contains(p) {
                continue;
            }
            let kept: Choice<ExternalTarget> = targets
                .iter()
                .filter(|t| match t {
                    ExternalTarget::Node(i) => out.nodes.contains_key(i),
                    ExternalTarget::Port(i) => out.ports.contains_key(i),
                    ExternalTarget::Link(i) => out.links.contains_key(i),
                })
                .cloned()
                .collect();
            if !kept.is_empty() {
                out.external_assignment.insert(p.clone(), kept);
            }
        }
        out
    }
}

fn single_valued<K: Ord + Clone, T: Ord + Clone>(m: &BTreeMap<K, Choice<T>>) -> BTreeMap<K, T> {
    m.iter()
        .map(|(k, c)| (k.clone(), c.as_single().expect("deterministic").clone()))
        .collect()
}

fn filter_keys<T: Clone>(m: &BTreeMap<Id, T>, keep: &BTreeSet<Id>) -> BTreeMap<Id, T> {
    m.iter().filter(|(k, _)| keep.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}
