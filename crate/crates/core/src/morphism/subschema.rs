//! Subschemas, completeness, and closing a schema inside an environment.

use serde::{Deserialize, Serialize};

use super::{find_homomorphisms, MorphismError, MorphismLevel, SchemaMorphism, SearchConstraints};
use crate::automaton::{Direction, Locus};
use crate::element::{Choice, Element};
use crate::id::{fresh_id, Id};
use crate::multigraph::{Attachment, AttachmentShape};
use crate::schema::{Form, PortSlot, Schema, SlotSelection};

/// `p` is `r` restricted to `p`'s slots.
pub fn is_subschema(p: &Schema, r: &Schema) -> bool {
    if p.form != r.form {
        return false;
    }
    let same = p.nodes.iter().all(|(i, e)| r.nodes.get(i) == Some(e))
        && p.ports.iter().all(|(i, s)| r.ports.get(i) == Some(s))
        && p.links.iter().all(|(i, s)| r.links.get(i) == Some(s));
    same && r.restrict(&SlotSelection::of(p)).content_eq(p)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubschemaReport {
    pub subschema: bool,
    pub structural: bool,
    pub strong_structural: bool,
    /// An injective node-level embedding of `p` into `r`.
    pub witness: Option<SchemaMorphism>,
    /// An injective port-level embedding of `p` into `r`.
    pub strong_witness: Option<SchemaMorphism>,
}

pub fn subschema_check(p: &Schema, r: &Schema) -> Result<SubschemaReport, MorphismError> {
    let first = |level| {
        find_homomorphisms(p, r, SearchConstraints { level, mono: true, limit: Some(1), ..Default::default() })
            .map(|v| v.into_iter().next())
    };
    let witness = first(MorphismLevel::Weak)?;
    let strong_witness = match (p.form, r.form) {
        (Form::Port, Form::Port) => first(MorphismLevel::Structural)?,
        (Form::Basic, Form::Basic) => witness.clone(),
        _ => None,
    };
    Ok(SubschemaReport {
        subschema: is_subschema(p, r),
        structural: witness.is_some(),
        strong_structural: strong_witness.is_some(),
        witness,
        strong_witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completeness {
    /// Every node of the superschema is kept.
    pub v_complete: bool,
    /// Every link touching a kept node is kept.
    pub e_complete: bool,
    /// Every port is kept.
    pub p_complete: bool,
}

pub fn completeness_flags(q: &Schema, r: &Schema) -> Result<Completeness, MorphismError> {
    if !is_subschema(q, r) {
        return Err(MorphismError::NotASubschema);
    }
    let grid = r.grid()?;
    let e_complete = grid.edges.iter().all(|(l, options)| {
        q.links.contains_key(l) || !options.iter().flat_map(|a| a.endpoints()).any(|n| q.nodes.contains_key(n))
    });
    Ok(Completeness {
        v_complete: r.nodes.keys().all(|n| q.nodes.contains_key(n)),
        e_complete,
        p_complete: r.ports.keys().all(|p| q.ports.contains_key(p)),
    })
}

/// A closed schema containing the original, and the part of it the
/// original restricts to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedSchema {
    pub schema: Schema,
    /// The original without its external ports; a subschema of `schema`.
    pub core: Schema,
    pub embedding: SchemaMorphism,
}

const STUB_KIND: &str = "environment/stub";

/// Attaches a fresh stub node to the loose side of every open link, and
/// turns every external port into an internal port of its own stub.
pub fn close_schema(s: &Schema) -> Result<ClosedSchema, MorphismError> {
    s.ensure_valid()?;
    let mut out = s.clone();
    out.header.name = format!("{}_closed", s.header.name);
    let taken = |out: &Schema, c: &Id| out.has_slot(c) || s.has_slot(c);

    let add_stub = |out: &mut Schema, base: &str| -> Id {
        let n = fresh_id(&format!("env_{base}"), |c| taken(out, c));
        out.nodes.insert(n.clone(), Element::constant(STUB_KIND));
        n
    };
    let add_port = |out: &mut Schema, owner: &Id, direction: Direction, suffix: &str| -> Id {
        let p = fresh_id(&format!("{owner}_{suffix}"), |c| taken(out, c));
        out.ports.insert(
            p.clone(),
            PortSlot { direction, locus: Locus::Internal, element: Element::constant("port") },
        );
        out.internal_assignment.insert(p.clone(), Choice::single(owner.clone()));
        p
    };

    for (l, options) in &s.adjacency {
        if options.iter().all(Attachment::is_closed) {
            continue;
        }
        let stub = add_stub(&mut out, l.as_str());
        let needs = |shape| options.iter().any(|a| a.shape() == shape);
        let mut side = |direction: Direction, suffix: &str, wanted: bool| match s.form {
            Form::Basic => stub.clone(),
            Form::Port if wanted => add_port(&mut out, &stub, direction, suffix),
            Form::Port => Id::new(""),
        };
        let inlet = side(Direction::Inlet, "in", needs(AttachmentShape::BeginOnly));
        let outlet = side(Direction::Outlet, "out", needs(AttachmentShape::EndOnly));
        let closed = options
            .iter()
            .map(|a| match a {
                Attachment::BeginOnly(b) => Attachment::closed(b.clone(), inlet.clone()),
                Attachment::EndOnly(e) => Attachment::closed(outlet.clone(), e.clone()),
                closed => closed.clone(),
            })
            .collect();
        out.adjacency.insert(l.clone(), closed);
    }

    for (p, slot) in s.external_ports() {
        let stub = add_stub(&mut out, p.as_str());
        out.ports.insert(p.clone(), PortSlot { locus: Locus::Internal, ..slot.clone() });
        out.internal_assignment.insert(p.clone(), Choice::single(stub));
        out.external_assignment.remove(p);
    }

    let mut keep = SlotSelection::of(s);
    for (p, _) in s.external_ports() {
        keep.ports.remove(p);
    }
    let mut core = out.restrict(&keep);
    core.header = s.header.clone();
    let embedding = SchemaMorphism::inclusion(&core);
    Ok(ClosedSchema { schema: out, core, embedding })
}
