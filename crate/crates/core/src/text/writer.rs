use std::fmt::Write;

use super::lexer::quote;
use super::MorphismDocument;
use crate::automaton::{Channel, Direction, ExternalTarget, Locus};
use crate::element::{Choice, Element};
use crate::multigraph::Attachment;
use crate::schema::{Form, Schema};

fn choice<T: Ord>(c: &Choice<T>, show: impl Fn(&T) -> String) -> String {
    match c.as_single() {
        Some(v) => show(v),
        None => {
            let parts: Vec<String> = c.iter().map(show).collect();
            format!("{{{}}}", parts.join("|"))
        }
    }
}

fn attachment(a: &Attachment<crate::id::Id>) -> String {
    match a {
        Attachment::Closed { begin, end } => format!("from {begin} to {end}"),
        Attachment::BeginOnly(b) => format!("from {b}"),
        Attachment::EndOnly(e) => format!("to {e}"),
    }
}

fn element_suffix(e: &Element, default: &str) -> String {
    if *e == Element::constant(default) {
        String::new()
    } else {
        format!(" as {e}")
    }
}

/// Canonical text: kinds sorted, notes in order, then nodes, ports and links
/// sorted by id. Parsing the output gives back an equal schema.
pub fn write_schema(s: &Schema) -> String {
    let mut out = String::new();
    let name = if s.header.name.is_empty() { String::new() } else { format!("{} ", s.header.name) };
    let form = match s.form {
        Form::Basic => "basic",
        Form::Port => "port",
    };
    writeln!(out, "schema {name}: {form} {{").unwrap();
    for (sort, kind) in s.header.universe.entries() {
        writeln!(out, "  kind {sort} {kind};").unwrap();
    }
    for note in &s.header.notes {
        writeln!(out, "  note {};", quote(note)).unwrap();
    }
    for (id, e) in &s.nodes {
        writeln!(out, "  node {id} : {e};").unwrap();
    }
    for (id, p) in &s.ports {
        let dir = match p.direction {
            Direction::Inlet => "in",
            Direction::Outlet => "out",
        };
        let (locus, target) = match p.locus {
            Locus::Internal => ("internal", s.internal_assignment.get(id).map(|c| choice(c, ToString::to_string))),
            Locus::External => (
                "external",
                s.external_assignment.get(id).map(|c| choice(c, |t: &ExternalTarget| t.id().to_string())),
            ),
        };
        let of = target.map(|t| format!(" of {t}")).unwrap_or_default();
        writeln!(out, "  port {id} {dir} {locus}{of}{};", element_suffix(&p.element, "port")).unwrap();
    }
    for (id, l) in &s.links {
        let channel = match l.channel {
            Channel::Simple => String::new(),
            c => format!(" {}", c.keyword()),
        };
        let att = s.adjacency.get(id).map(|c| choice(c, attachment)).unwrap_or_default();
        writeln!(
            out,
            "  link {id} : {}{channel} {att}{};",
            l.class.keyword(),
            element_suffix(&l.element, "link")
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn write_morphism(doc: &MorphismDocument) -> String {
    let mut out = String::new();
    writeln!(out, "morphism {} : {} -> {} {{", doc.name, doc.domain, doc.codomain).unwrap();
    for (sort, map) in [("node", &doc.morphism.node_map), ("port", &doc.morphism.port_map), ("link", &doc.morphism.link_map)] {
        for (a, b) in map {
            writeln!(out, "  {sort} {a} -> {b};").unwrap();
        }
    }
    out.push_str("}\n");
    out
}
