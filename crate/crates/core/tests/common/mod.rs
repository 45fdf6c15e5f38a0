//! Fixture loading and seeded generators shared by the integration tests.
#![allow(dead_code)]

pub mod laws;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use gridschema::element::{ParamValue, Value};
use gridschema::morphism::SchemaMorphism;
use gridschema::text;
use gridschema::transform::{AbstractionSpec, Binding};
use gridschema::{
    Attachment, Choice, Direction, Element, ExternalTarget, Form, Id, KindUniverse, LinkClass, LinkSlot, Locus,
    PortSlot, Range, Role, Schema, SlotSelection, Sort, Variable,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: [&str; 6] =
    ["internet", "internet_schema", "reach_grasp", "reach_grasp_tail", "machine_pattern", "property_reduction"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.gs"))
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture(name: &str) -> Schema {
    text::parse(&fixture_text(name)).unwrap_or_else(|e| panic!("{name}: {e}")).into_schema()
}

pub fn all_fixtures() -> Vec<(&'static str, Schema)> {
    FIXTURES.iter().map(|n| (*n, fixture(n))).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const NODE_KINDS: [&str; 3] = ["automaton/turing_machine", "automaton/finite_automaton", "automaton/neural_network"];

/// The three node kinds plus one link and one port kind.
pub fn universe() -> KindUniverse {
    KindUniverse::new().with(Sort::Node, &NODE_KINDS).with(Sort::Link, &["link"]).with(Sort::Port, &["port"])
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_nodes: usize,
    pub max_links: usize,
    pub form: Form,
    pub var_prob: f64,
    pub param_prob: f64,
    pub nondet_prob: f64,
    pub open_prob: f64,
    pub max_external: usize,
    pub link_vars: bool,
}

impl GenConfig {
    pub fn basic() -> Self {
        GenConfig {
            max_nodes: 4,
            max_links: 5,
            form: Form::Basic,
            var_prob: 0.4,
            param_prob: 0.1,
            nondet_prob: 0.15,
            open_prob: 0.15,
            max_external: 0,
            link_vars: true,
        }
    }

    pub fn port() -> Self {
        GenConfig { form: Form::Port, max_external: 2, ..Self::basic() }
    }

    pub fn deterministic(mut self) -> Self {
        self.nondet_prob = 0.0;
        self
    }

    pub fn constant(mut self) -> Self {
        self.var_prob = 0.0;
        self.param_prob = 0.0;
        self.link_vars = false;
        self
    }
}

/// Node variables have a fixed range per name so that repeated names stay
/// consistent.
const NODE_VARS: [(&str, &[&str]); 3] = [
    ("X", &["automaton/turing_machine"]),
    ("Y", &["automaton/finite_automaton", "automaton/neural_network"]),
    ("Z", &["automaton"]),
];

fn node_element(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Element {
    let roll: f64 = rng.gen();
    if roll < cfg.var_prob {
        let (name, kinds) = NODE_VARS.choose(rng).unwrap();
        Element::variable(name, Range::kinds(kinds.iter().copied()))
    } else if roll < cfg.var_prob + cfg.param_prob {
        Element::Parameterized {
            kind: "automaton/turing_machine".parse().unwrap(),
            params: [("tapes".to_string(), ParamValue::Var(Variable::new("K", Range::values(["1", "2"]))))].into(),
        }
    } else {
        Element::constant(NODE_KINDS.choose(rng).unwrap())
    }
}

fn link_element(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Element {
    if cfg.link_vars && rng.gen_bool(cfg.var_prob / 2.0) {
        Element::variable("L", Range::Universal(Sort::Link))
    } else {
        Element::constant("link")
    }
}

fn class(rng: &mut ChaCha8Rng) -> LinkClass {
    *[LinkClass::Information, LinkClass::Information, LinkClass::Control, LinkClass::Process].choose(rng).unwrap()
}

fn attachment(rng: &mut ChaCha8Rng, cfg: &GenConfig, begins: &[Id], ends: &[Id]) -> Option<Attachment<Id>> {
    let b = begins.choose(rng).cloned();
    let e = ends.choose(rng).cloned();
    let open = rng.gen_bool(cfg.open_prob);
    match (b, e) {
        (Some(b), Some(e)) if !open => Some(Attachment::closed(b, e)),
        (Some(b), Some(e)) => Some(if rng.gen() { Attachment::BeginOnly(b) } else { Attachment::EndOnly(e) }),
        (Some(b), None) if cfg.open_prob > 0.0 => Some(Attachment::BeginOnly(b)),
        (None, Some(e)) if cfg.open_prob > 0.0 => Some(Attachment::EndOnly(e)),
        _ => None,
    }
}

/// A random valid schema in the configured form.
pub fn gen_schema(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Schema {
    let mut s = Schema::new("generated", cfg.form);
    let n = rng.gen_range(1..=cfg.max_nodes);
    let nodes: Vec<Id> = (0..n).map(|i| Id::new(format!("n{i}"))).collect();
    for id in &nodes {
        s.nodes.insert(id.clone(), node_element(rng, cfg));
    }
    let (begins, ends) = match cfg.form {
        Form::Basic => (nodes.clone(), nodes.clone()),
        Form::Port => {
            let (mut outs, mut ins) = (Vec::new(), Vec::new());
            for (i, node) in nodes.iter().enumerate() {
                for (dir, count, list, tag) in [
                    (Direction::Outlet, rng.gen_range(0..=2), &mut outs, "o"),
                    (Direction::Inlet, rng.gen_range(0..=2), &mut ins, "i"),
                ] {
                    for k in 0..count {
                        let p = Id::new(format!("{tag}{i}_{k}"));
                        let mut owners = vec![node.clone()];
                        if rng.gen_bool(cfg.nondet_prob) {
                            owners.push(nodes.choose(rng).unwrap().clone());
                        }
                        s.ports.insert(p.clone(), PortSlot { direction: dir, locus: Locus::Internal, element: Element::constant("port") });
                        s.internal_assignment.insert(p.clone(), owners.into_iter().collect());
                        list.push(p);
                    }
                }
            }
            (outs, ins)
        }
    };
    let m = rng.gen_range(0..=cfg.max_links);
    for j in 0..m {
        let Some(first) = attachment(rng, cfg, &begins, &ends) else { break };
        let mut options = vec![first];
        if rng.gen_bool(cfg.nondet_prob) {
            if let Some(second) = attachment(rng, cfg, &begins, &ends) {
                options.push(second);
            }
        }
        let id = Id::new(format!("l{j}"));
        s.links.insert(id.clone(), LinkSlot { class: class(rng), channel: Default::default(), element: link_element(rng, cfg) });
        s.adjacency.insert(id, options.into_iter().collect());
    }
    if cfg.form == Form::Port && cfg.max_external > 0 {
        let internal: Vec<Id> = s.ports.keys().cloned().collect();
        let links: Vec<Id> = s.links.keys().cloned().collect();
        for k in 0..rng.gen_range(0..=cfg.max_external) {
            let id = Id::new(format!("x{k}"));
            let direction = if rng.gen() { Direction::Inlet } else { Direction::Outlet };
            s.ports.insert(id.clone(), PortSlot { direction, locus: Locus::External, element: Element::constant("port") });
            let target = match rng.gen_range(0..4) {
                0 => Some(ExternalTarget::Node(nodes.choose(rng).unwrap().clone())),
                1 => internal.choose(rng).map(|p| ExternalTarget::Port(p.clone())),
                2 => links.choose(rng).map(|l| ExternalTarget::Link(l.clone())),
                _ => None,
            };
            if let Some(t) = target {
                s.external_assignment.insert(id, Choice::single(t));
            }
        }
    }
    let v = s.validate();
    assert!(v.is_empty(), "generator produced an invalid schema: {v:?}\n{}", text::write_schema(&s));
    s
}

/// A binding that gives some or all variables an in-range value.
pub fn gen_binding(rng: &mut ChaCha8Rng, s: &Schema, universe: &KindUniverse, full: bool) -> Binding {
    let mut b = Binding::new();
    for (name, entry) in s.variable_multiset().entries {
        if !full && rng.gen_bool(0.4) {
            continue;
        }
        let sort = entry.occurrences[0].sort;
        let members: Vec<Value> = entry.range.members(universe, sort).into_iter().collect();
        if let Some(v) = members.choose(rng) {
            b = b.bind(&name, v.clone());
        }
    }
    b
}

/// Merges random nodes of `r`. The result is onto on nodes and bijective on
/// links and ports. With `typed`, only nodes with equal elements merge.
pub fn merge_nodes(rng: &mut ChaCha8Rng, r: &Schema, typed: bool) -> (Schema, SchemaMorphism) {
    let mut leaders: Vec<Id> = Vec::new();
    let mut pi: BTreeMap<Id, Id> = BTreeMap::new();
    for (n, e) in &r.nodes {
        let fits: Vec<&Id> = leaders.iter().filter(|l| !typed || r.nodes[*l] == *e).collect();
        let target = match fits.choose(rng) {
            Some(l) if rng.gen_bool(0.4) => (*l).clone(),
            _ => {
                leaders.push(n.clone());
                n.clone()
            }
        };
        pi.insert(n.clone(), target);
    }
    let mut p = r.clone();
    p.header.name = format!("{}_merged", r.header.name);
    p.nodes.retain(|n, _| leaders.contains(n));
    for owners in p.internal_assignment.values_mut() {
        *owners = owners.iter().map(|n| pi[n].clone()).collect();
    }
    if r.form == Form::Basic {
        for options in p.adjacency.values_mut() {
            *options = options.iter().map(|a| a.map(|n| pi[n].clone())).collect();
        }
    }
    for targets in p.external_assignment.values_mut() {
        *targets = targets
            .iter()
            .map(|t| match t {
                ExternalTarget::Node(n) => ExternalTarget::Node(pi[n].clone()),
                other => other.clone(),
            })
            .collect();
    }
    let mut f = SchemaMorphism::identity(r);
    f.node_map = pi;
    if r.form == Form::Basic {
        f.port_map.clear();
    }
    (p, f)
}

/// Adds parallel copies of random links of `p` and maps each copy onto its
/// original. The result is bijective on nodes and onto on links.
pub fn duplicate_links(rng: &mut ChaCha8Rng, p: &Schema) -> (Schema, SchemaMorphism) {
    let mut r = p.clone();
    r.header.name = format!("{}_doubled", p.header.name);
    let mut f = SchemaMorphism::identity(p);
    for (k, l) in p.links.keys().enumerate() {
        if rng.gen_bool(0.5) {
            let copy = Id::new(format!("{l}_dup{k}"));
            r.links.insert(copy.clone(), p.links[l].clone());
            r.adjacency.insert(copy.clone(), p.adjacency[l].clone());
            f.link_map.insert(copy, l.clone());
        }
    }
    (r, f)
}

/// Adds a fresh node, and in port form an inlet on it, with one link into it
/// from an existing node or outlet when there is one. Returns the inclusion.
pub fn extend(rng: &mut ChaCha8Rng, r: &Schema) -> (Schema, SchemaMorphism) {
    let mut p = r.clone();
    p.header.name = format!("{}_extended", r.header.name);
    let node = Id::new(format!("ext{}", rng.gen_range(0..1000)));
    p.nodes.insert(node.clone(), Element::constant(NODE_KINDS.choose(rng).unwrap()));
    let end = match r.form {
        Form::Basic => node.clone(),
        Form::Port => {
            let port = Id::new(format!("{node}_in"));
            p.ports.insert(port.clone(), PortSlot { direction: Direction::Inlet, locus: Locus::Internal, element: Element::constant("port") });
            p.internal_assignment.insert(port.clone(), Choice::single(node.clone()));
            port
        }
    };
    let begins: Vec<Id> = match r.form {
        Form::Basic => r.nodes.keys().cloned().collect(),
        Form::Port => r.internal_ports().filter(|(_, s)| s.direction == Direction::Outlet).map(|(i, _)| i.clone()).collect(),
    };
    let link = Id::new(format!("{node}_link"));
    let att = match begins.choose(rng) {
        Some(b) => Attachment::closed(b.clone(), end),
        None => Attachment::EndOnly(end),
    };
    p.links.insert(link.clone(), LinkSlot { class: LinkClass::Information, channel: Default::default(), element: Element::constant("link") });
    p.adjacency.insert(link, Choice::single(att));
    let mut f = SchemaMorphism::identity(r);
    if r.form == Form::Basic {
        f.port_map.clear();
    }
    (p, f)
}

/// A random subschema of `r` that keeps every endpoint of the links it keeps,
/// so no attachment is cut open.
pub fn endpoint_closed_subschema(rng: &mut ChaCha8Rng, r: &Schema) -> Schema {
    let nodes: BTreeSet<Id> = r.nodes.keys().filter(|_| rng.gen_bool(0.7)).cloned().collect();
    let ports: BTreeSet<Id> = r
        .ports
        .keys()
        .filter(|p| {
            r.internal_assignment.get(*p).is_none_or(|o| o.iter().any(|n| nodes.contains(n))) && rng.gen_bool(0.8)
        })
        .cloned()
        .collect();
    let attach: &BTreeSet<Id> = if r.form == Form::Basic { &nodes } else { &ports };
    let links: BTreeSet<Id> = r
        .adjacency
        .iter()
        .filter(|(_, opts)| opts.iter().all(|a| a.endpoints().all(|e| attach.contains(e))))
        .filter(|_| rng.gen_bool(0.8))
        .map(|(l, _)| l.clone())
        .collect();
    let mut q = r.restrict(&SlotSelection { nodes, ports, links });
    q.header.name = format!("{}_part", r.header.name);
    q
}

/// Node-level adjacency of a deterministic schema.
pub fn det_grid(s: &Schema) -> gridschema::GeneralizedMultigraph {
    s.grid().unwrap().to_deterministic().expect("deterministic grid")
}

/// Roles of a deterministic schema from its grid and external ports.
pub fn direct_role(s: &Schema, resolution: &[(bool, bool)]) -> Role {
    let ext_in = s.external_ports().any(|(_, p)| p.direction == Direction::Inlet);
    let ext_out = s.external_ports().any(|(_, p)| p.direction == Direction::Outlet);
    let begin_open = resolution.iter().any(|(b, _)| *b);
    let end_open = resolution.iter().any(|(_, e)| *e);
    let receives = ext_in || end_open;
    let sends = ext_out || begin_open;
    match (receives, sends) {
        (false, false) => Role::Closed,
        (true, false) => Role::Acceptor,
        (false, true) => Role::Transmitter,
        (true, true) => Role::Transducer,
    }
}

/// Every role over every choice of one attachment per link.
pub fn role_oracle(s: &Schema) -> BTreeSet<Role> {
    let grid = s.grid().unwrap().edges;
    let per_link: Vec<Vec<(bool, bool)>> = grid
        .values()
        .map(|opts| opts.iter().map(|a| (a.end().is_none(), a.begin().is_none())).collect())
        .collect();
    let mut out = BTreeSet::new();
    let mut pick = vec![0usize; per_link.len()];
    loop {
        let resolution: Vec<(bool, bool)> = per_link.iter().zip(&pick).map(|(o, &i)| o[i]).collect();
        out.insert(direct_role(s, &resolution));
        let mut k = 0;
        loop {
            if k == pick.len() {
                return out;
            }
            pick[k] += 1;
            if pick[k] < per_link[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// Splits a binding by variable name into two disjoint halves.
pub fn split(rng: &mut ChaCha8Rng, b: &Binding) -> (Binding, Binding) {
    let (mut x, mut y) = (Binding::new(), Binding::new());
    for (n, v) in &b.by_name {
        if rng.gen() {
            x = x.bind(n, v.clone());
        } else {
            y = y.bind(n, v.clone());
        }
    }
    (x, y)
}

/// Replaces some constant node elements with fresh variables whose range
/// is the constant's own kind.
pub fn abstraction_spec(rng: &mut ChaCha8Rng, s: &Schema, prefix: &str) -> AbstractionSpec {
    let mut spec = AbstractionSpec::default();
    for (id, e) in &s.nodes {
        if let Element::Constant(c) = e {
            if rng.gen_bool(0.5) {
                let v = Variable::new(format!("{prefix}{id}"), Range::Kinds([c.kind.clone()].into()));
                spec = spec.element(id.as_str(), v);
            }
        }
    }
    spec
}

/// Node counts by leaf kind; every node must be constant.
pub fn kind_counts(s: &Schema) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for e in s.nodes.values() {
        *out.entry(e.kind().expect("constant node").leaf().to_string()).or_default() += 1;
    }
    out
}

/// Values that turn the internet schema fixture into the internet automaton.
pub fn internet_binding() -> Binding {
    Binding::new()
        .bind_const("T", "automaton/turing_machine")
        .bind_const("R", "automaton/random_access_machine")
        .bind_const("A", "automaton/finite_automaton")
        .bind_const("m", "device/modem")
        .bind_const("N", "automaton/neural_network")
        .bind_const("S", "device/server")
        .bind_const("C", "automaton/cellular_automaton")
        .bind_const("G", "automaton/grid_automaton")
}
