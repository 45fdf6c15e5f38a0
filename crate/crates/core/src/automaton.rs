//! Variable-free grid automata: nodes, directed ports, classed links, and
//! the grids derived from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::id::Id;
use crate::kind::{Constant, KindUniverse};
use crate::multigraph::{Attachment, GeneralizedMultigraph, GraphMorphism};
use crate::schema::{Schema, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("invalid automaton: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

pub(crate) fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Inlet,
    Outlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locus {
    Internal,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    /// Carries data.
    Information,
    /// Carries instructions.
    Control,
    /// Transfers control by initiating another node.
    Process,
}

impl LinkClass {
    pub fn keyword(self) -> &'static str {
        match self {
            LinkClass::Information => "info",
            LinkClass::Control => "control",
            LinkClass::Process => "process",
        }
    }
}

impl FromStr for LinkClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "info" => Ok(LinkClass::Information),
            "control" => Ok(LinkClass::Control),
            "process" => Ok(LinkClass::Process),
            other => Err(format!("unknown link class `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    #[default]
    Simple,
    Filtering,
    Correcting,
}

impl Channel {
    pub fn keyword(self) -> &'static str {
        match self {
            Channel::Simple => "simple",
            Channel::Filtering => "filter",
            Channel::Correcting => "correct",
        }
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(Channel::Simple),
            "filter" => Ok(Channel::Filtering),
            "correct" => Ok(Channel::Correcting),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

/// What an external port is assigned to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalTarget {
    Node(Id),
    Port(Id),
    Link(Id),
}

impl ExternalTarget {
    pub fn id(&self) -> &Id {
        match self {
            ExternalTarget::Node(i) | ExternalTarget::Port(i) | ExternalTarget::Link(i) => i,
        }
    }
}

impl fmt::Display for ExternalTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id().as_str())
    }
}

/// Document-level metadata shared by automata and schemas.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub name: String,
    /// Kinds registered by the document itself.
    pub universe: KindUniverse,
    /// Free-text annotations. They carry no semantics.
    pub notes: Vec<String>,
}

impl Header {
    pub fn named(name: &str) -> Self {
        Header { name: name.to_string(), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub direction: Direction,
    pub locus: Locus,
    pub kind: Constant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub class: LinkClass,
    pub channel: Channel,
    pub kind: Constant,
}

/// A grid automaton with ports.
///
/// `adjacency` attaches links to ports: a link begins at an outlet and ends
/// at an inlet. Internal ports are owned by nodes through
/// `internal_assignment`; external ports may point at a node, port, or link.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridAutomaton {
    pub header: Header,
    pub nodes: BTreeMap<Id, Constant>,
    pub ports: BTreeMap<Id, Port>,
    pub links: BTreeMap<Id, Link>,
    pub internal_assignment: BTreeMap<Id, Id>,
    pub adjacency: BTreeMap<Id, Attachment<Id>>,
    pub external_assignment: BTreeMap<Id, ExternalTarget>,
}

/// A grid automaton without ports: links attach to nodes directly.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicGridAutomaton {
    pub header: Header,
    pub nodes: BTreeMap<Id, Constant>,
    pub links: BTreeMap<Id, Link>,
    pub node_adjacency: BTreeMap<Id, Attachment<Id>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Closed,
    Acceptor,
    Transmitter,
    Transducer,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Closed => "closed",
            Role::Acceptor => "acceptor",
            Role::Transmitter => "transmitter",
            Role::Transducer => "transducer",
        })
    }
}

/// Role from the four grid-side conditions: external inlets, external
/// outlets, begin-open edges, end-open edges.
pub fn role_from(ext_in: bool, ext_out: bool, begin_open: bool, end_open: bool) -> Role {
    let receives = ext_in || end_open;
    let sends = ext_out || begin_open;
    match (receives, sends) {
        (false, false) => Role::Closed,
        (true, false) => Role::Acceptor,
        (false, true) => Role::Transmitter,
        (true, true) => Role::Transducer,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub role: Role,
    pub potentially_open: bool,
}

impl GridAutomaton {
    pub fn internal_ports(&self) -> impl Iterator<Item = (&Id, &Port)> {
        self.ports.iter().filter(|(_, p)| p.locus == Locus::Internal)
    }

    pub fn external_ports(&self) -> impl Iterator<Item = (&Id, &Port)> {
        self.ports.iter().filter(|(_, p)| p.locus == Locus::External)
    }

    pub fn owner(&self, port: &Id) -> Option<&Id> {
        self.internal_assignment.get(port)
    }

    /// Ports no link is attached to.
    pub fn free_ports(&self) -> BTreeSet<Id> {
        Schema::from_automaton(self).free_ports()
    }

    fn ensure_valid(&self) -> Result<(), AutomatonError> {
        let violations = validate_grid_automaton(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(AutomatonError::Invalid(violations))
        }
    }
}

/// Every broken invariant, or nothing when the automaton is well formed.
pub fn validate_grid_automaton(ga: &GridAutomaton) -> Vec<Violation> {
    Schema::from_automaton(ga).validate()
}

/// The grid: nodes as vertices, links as edges, each port attachment lifted
/// to the owning node.
pub fn derive_grid(ga: &GridAutomaton) -> Result<GeneralizedMultigraph, AutomatonError> {
    ga.ensure_valid()?;
    Ok(lift_grid(ga))
}

fn lift_grid(ga: &GridAutomaton) -> GeneralizedMultigraph {
    GeneralizedMultigraph::new(
        ga.nodes.keys().cloned(),
        ga.adjacency
            .iter()
            .map(|(l, a)| (l.clone(), a.map(|p| ga.internal_assignment[p].clone()))),
    )
    .expect("validated automaton lifts to a well-formed grid")
}

/// The connection grid: internal ports as vertices, links with their port
/// attachments unchanged.
pub fn derive_connection_grid(ga: &GridAutomaton) -> Result<GeneralizedMultigraph, AutomatonError> {
    ga.ensure_valid()?;
    Ok(GeneralizedMultigraph::new(
        ga.internal_ports().map(|(p, _)| p.clone()),
        ga.adjacency.iter().map(|(l, a)| (l.clone(), a.clone())),
    )
    .expect("validated automaton has a well-formed connection grid"))
}

/// The map from the connection grid onto the grid sending each port to its
/// owner and each link to itself.
pub fn owner_morphism(ga: &GridAutomaton) -> GraphMorphism {
    GraphMorphism {
        vertex_map: ga.internal_assignment.clone(),
        edge_map: ga.links.keys().map(|l| (l.clone(), l.clone())).collect(),
    }
}

pub fn classify_automaton(ga: &GridAutomaton) -> Result<Classification, AutomatonError> {
    let grid = derive_grid(ga)?;
    let (begin_open, end_open) = grid.open_edges();
    let ext_in = ga.external_ports().any(|(_, p)| p.direction == Direction::Inlet);
    let ext_out = ga.external_ports().any(|(_, p)| p.direction == Direction::Outlet);
    Ok(Classification {
        role: role_from(ext_in, ext_out, !begin_open.is_empty(), !end_open.is_empty()),
        potentially_open: !ga.free_ports().is_empty(),
    })
}

/// Drops the ports, attaching every link directly to nodes.
pub fn to_basic(ga: &GridAutomaton) -> Result<BasicGridAutomaton, AutomatonError> {
    let grid = derive_grid(ga)?;
    Ok(BasicGridAutomaton {
        header: ga.header.clone(),
        nodes: ga.nodes.clone(),
        links: ga.links.clone(),
        node_adjacency: grid.edges().clone(),
    })
}

impl BasicGridAutomaton {
    pub fn validate(&self) -> Vec<Violation> {
        Schema::from_basic_automaton(self).validate()
    }

    pub fn grid(&self) -> Result<GeneralizedMultigraph, AutomatonError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(AutomatonError::Invalid(violations));
        }
        Ok(GeneralizedMultigraph::new(
            self.nodes.keys().cloned(),
            self.node_adjacency.iter().map(|(l, a)| (l.clone(), a.clone())),
        )
        .expect("validated"))
    }
}
