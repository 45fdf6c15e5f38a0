use std::fmt::Write;

use crate::automaton::LinkClass;
use crate::element::Element;
use crate::id::Id;
use crate::multigraph::Attachment;
use crate::schema::{Form, Schema};

#[derive(Clone, Debug, Default)]
pub struct DotOptions {
    /// Draw ports as their own small nodes instead of folding them into
    /// their owners.
    pub show_ports: bool,
}

fn label(e: &Element) -> String {
    match e {
        Element::Variable(v) => format!("{}: {}", v.name, v.range),
        other => other.kind().map(ToString::to_string).unwrap_or_default(),
    }
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering of the node-level grid. Each link is drawn from its
/// first attachment option; links with several options are labelled `?`.
/// Open ends go to point-shaped phantom nodes.
pub fn export_dot(s: &Schema, opts: &DotOptions) -> String {
    let mut out = String::new();
    let name = if s.header.name.is_empty() { "schema" } else { s.header.name.as_str() };
    writeln!(out, "digraph \"{}\" {{", esc(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    for (id, e) in &s.nodes {
        writeln!(out, "  \"{}\" [shape=box, label=\"{}\\n{}\"];", esc(id.as_str()), esc(id.as_str()), esc(&label(e)))
            .unwrap();
    }
    let ports_drawn = opts.show_ports && s.form == Form::Port;
    if ports_drawn {
        for (id, p) in &s.ports {
            writeln!(out, "  \"{}\" [shape=circle, width=0.2, label=\"{}\"];", esc(id.as_str()), esc(id.as_str()))
                .unwrap();
            if let Some(owners) = s.internal_assignment.get(id) {
                for o in owners.iter() {
                    let (a, b) = match p.direction {
                        crate::automaton::Direction::Inlet => (id, o),
                        crate::automaton::Direction::Outlet => (o, id),
                    };
                    writeln!(out, "  \"{}\" -> \"{}\" [arrowhead=none, style=dotted];", esc(a.as_str()), esc(b.as_str()))
                        .unwrap();
                }
            }
        }
    }
    // Port form without drawn ports: fold each port into its first owner.
    let endpoint = |p: &Id| -> Option<Id> {
        if s.form == Form::Basic || ports_drawn {
            Some(p.clone())
        } else {
            s.internal_assignment.get(p).and_then(|c| c.iter().next().cloned())
        }
    };
    for (id, l) in &s.links {
        let Some(options) = s.adjacency.get(id) else { continue };
        let Some(first) = options.iter().next() else { continue };
        let mut phantom = |side: &str| {
            let p = format!("{id}__{side}");
            writeln!(out, "  \"{}\" [shape=point];", esc(&p)).unwrap();
            Id::new(p)
        };
        let (begin, end) = match first {
            Attachment::Closed { begin, end } => (endpoint(begin), endpoint(end)),
            Attachment::BeginOnly(b) => (endpoint(b), None),
            Attachment::EndOnly(e) => (None, endpoint(e)),
        };
        let begin = begin.unwrap_or_else(|| phantom("begin"));
        let end = end.unwrap_or_else(|| phantom("end"));
        let style = if l.class == LinkClass::Information { "solid" } else { "dashed" };
        let mark = if options.len() > 1 { "?" } else { "" };
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}{}\", style={}];",
            esc(begin.as_str()),
            esc(end.as_str()),
            esc(id.as_str()),
            mark,
            style
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
