//! Grid automata, their schemas, and the operations relating them:
//! concretization and abstraction, morphisms, a discrete-time simulator,
//! and a plain-text format.

pub mod automaton;
pub mod element;
pub mod engine;
pub mod id;
pub mod kind;
pub mod morphism;
pub mod multigraph;
pub mod schema;
pub mod text;
pub mod transform;

pub use automaton::{
    BasicGridAutomaton, Channel, Classification, Direction, ExternalTarget, GridAutomaton, Header,
    Link, LinkClass, Locus, Port, Role,
};
pub use element::{Choice, Element, ParamValue, Position, Range, Value, Variable};
pub use id::Id;
pub use kind::{Constant, KindPath, KindUniverse, Sort};
pub use multigraph::{Attachment, GeneralizedMultigraph, GraphMorphism, VariableMultigraph};
pub use schema::{Form, LinkSlot, PortSlot, Schema, SchemaError, SlotSelection, Violation};
