//! Morphism laws as seed-driven checks, shared by the morphism suite and
//! the acceptance run.

use std::collections::{BTreeMap, BTreeSet};

use gridschema::morphism::{
    check_morphism, completeness_flags, compose, image, is_subschema, preimage, restrict_morphism,
    subschema_check, MorphismFlags, SchemaMorphism,
};
use gridschema::transform::concretize;
use gridschema::{Form, Id, Role, Schema, SlotSelection};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::*;

/// `Err` describes the first counterexample.
pub type Outcome = Result<(), String>;

macro_rules! check {
    ($cond:expr) => {
        if !$cond {
            return Err(format!("failed: {}", stringify!($cond)));
        }
    };
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!("failed: {} ({})", stringify!($cond), format!($($msg)+)));
        }
    };
}

macro_rules! check_eq {
    ($a:expr, $b:expr $(,)?) => {
        if $a != $b {
            return Err(format!("failed: {} == {}: {:?} vs {:?}", stringify!($a), stringify!($b), $a, $b));
        }
    };
}

pub fn config(rng: &mut ChaCha8Rng) -> GenConfig {
    if rng.gen() {
        GenConfig::basic()
    } else {
        GenConfig::port()
    }
}

pub fn flags(s: &Schema, t: &Schema, m: &SchemaMorphism) -> MorphismFlags {
    check_morphism(s, t, m).unwrap()
}

pub fn weak_only(m: &SchemaMorphism) -> SchemaMorphism {
    SchemaMorphism { port_map: BTreeMap::new(), ..m.clone() }
}

#[derive(Clone, Copy, Debug)]
pub enum Law {
    Typed,
    Structural,
    Weak,
}

pub fn holds(law: Law, f: &MorphismFlags) -> bool {
    match law {
        Law::Typed => f.typed,
        Law::Structural => f.structural,
        Law::Weak => f.weak,
    }
}

/// Three composable morphisms a → b → c → d of the given kind.
pub fn chain(rng: &mut ChaCha8Rng, law: Law) -> (Vec<Schema>, Vec<SchemaMorphism>) {
    let cfg = config(rng).deterministic();
    let a = gen_schema(rng, &cfg);
    let typed = matches!(law, Law::Typed);
    let (b, f) = merge_nodes(rng, &a, typed);
    let (c, g) = extend(rng, &b);
    let (d, h) = merge_nodes(rng, &c, typed);
    let ms = [f, g, h].map(|m| if matches!(law, Law::Weak) { weak_only(&m) } else { m });
    (vec![a, b, c, d], ms.to_vec())
}

pub fn identity(s: &Schema, law: Law) -> SchemaMorphism {
    let id = SchemaMorphism::identity(s);
    match law {
        Law::Weak => weak_only(&id),
        _ => id,
    }
}

pub fn category_laws(seed: u64, law: Law) -> Outcome {
    let mut rng = rng(seed);
    let (s, m) = chain(&mut rng, law);
    for (i, f) in m.iter().enumerate() {
        let fl = flags(&s[i], &s[i + 1], f);
        check!(holds(law, &fl), "{law:?} step {i}");
        match law {
            Law::Typed => check!(fl.structural && fl.weak, "typed map not structural at step {i}"),
            Law::Structural => check!(fl.weak, "structural map not weak at step {i}"),
            Law::Weak => {}
        }
        let left = compose(&identity(&s[i], law), f).unwrap();
        let right = compose(f, &identity(&s[i + 1], law)).unwrap();
        check_eq!(&left, f);
        check_eq!(&right, f);
    }
    for x in &s {
        check!(holds(law, &flags(x, x, &identity(x, law))));
    }
    let fg = compose(&m[0], &m[1]).unwrap();
    let gh = compose(&m[1], &m[2]).unwrap();
    let left = compose(&fg, &m[2]).unwrap();
    let right = compose(&m[0], &gh).unwrap();
    check_eq!(left, right);
    check!(holds(law, &flags(&s[0], &s[2], &fg)));
    check!(holds(law, &flags(&s[0], &s[3], &left)));
    Ok(())
}

pub fn gen_closed(rng: &mut ChaCha8Rng) -> Schema {
    let mut cfg = config(rng).deterministic();
    cfg.open_prob = 0.0;
    cfg.max_external = 0;
    gen_schema(rng, &cfg)
}

pub fn components(s: &Schema) -> usize {
    det_grid(s).components().len()
}

pub fn is_full(s: &Schema) -> bool {
    let g = det_grid(s);
    let pairs: BTreeSet<(Id, Id)> = g
        .edges()
        .values()
        .filter_map(|a| Some((a.begin()?.clone(), a.end()?.clone())))
        .collect();
    g.vertices().iter().all(|a| g.vertices().iter().all(|b| a == b || pairs.contains(&(a.clone(), b.clone()))))
}

pub fn complete_basic(rng: &mut ChaCha8Rng) -> Schema {
    let n = rng.gen_range(1..=3);
    let mut s = Schema::new("full", Form::Basic);
    for i in 0..n {
        s = s.with_node(&format!("n{i}"), gridschema::Element::constant(NODE_KINDS[i % 3]));
    }
    let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    for a in &ids {
        for b in &ids {
            if a != b {
                s = s.with_link(&format!("{a}_{b}"), gridschema::LinkClass::Information, &[gridschema::Attachment::closed(a, b)]);
            }
        }
    }
    s
}

pub fn fan_ins(s: &Schema) -> BTreeMap<Id, usize> {
    let g = det_grid(s);
    g.vertices().iter().map(|v| (v.clone(), g.fan_degrees(v).unwrap().0)).collect()
}

pub fn fan_outs(s: &Schema) -> BTreeMap<Id, usize> {
    let g = det_grid(s);
    g.vertices().iter().map(|v| (v.clone(), g.fan_degrees(v).unwrap().1)).collect()
}

/// Renames every slot of `s` with a prefix.
pub fn relabel(s: &Schema, prefix: &str) -> (Schema, SchemaMorphism) {
    let r = |i: &Id| Id::new(format!("{prefix}{i}"));
    let mut out = Schema::new(&format!("{prefix}{}", s.name()), s.form);
    out.nodes = s.nodes.iter().map(|(k, v)| (r(k), v.clone())).collect();
    out.ports = s.ports.iter().map(|(k, v)| (r(k), v.clone())).collect();
    out.links = s.links.iter().map(|(k, v)| (r(k), v.clone())).collect();
    out.internal_assignment = s.internal_assignment.iter().map(|(k, v)| (r(k), v.iter().map(r).collect())).collect();
    out.adjacency = s.adjacency.iter().map(|(k, v)| (r(k), v.iter().map(|a| a.map(r)).collect())).collect();
    out.external_assignment = s
        .external_assignment
        .iter()
        .map(|(k, v)| {
            let t = v
                .iter()
                .map(|t| match t {
                    gridschema::ExternalTarget::Node(i) => gridschema::ExternalTarget::Node(r(i)),
                    gridschema::ExternalTarget::Port(i) => gridschema::ExternalTarget::Port(r(i)),
                    gridschema::ExternalTarget::Link(i) => gridschema::ExternalTarget::Link(r(i)),
                })
                .collect();
            (r(k), t)
        })
        .collect();
    let map = |ids: Vec<&Id>| ids.into_iter().map(|i| (i.clone(), r(i))).collect();
    let m = SchemaMorphism {
        node_map: map(s.nodes.keys().collect()),
        link_map: map(s.links.keys().collect()),
        port_map: if s.form == Form::Port { map(s.ports.keys().collect()) } else { BTreeMap::new() },
    };
    (out, m)
}

/// Brute force: is there a vertex-injective, edge-injective map of the
/// node-level grid of `p` into that of `r` preserving attachments?
pub fn structural_oracle(p: &Schema, r: &Schema) -> bool {
    let (gp, gr) = (p.grid().unwrap().edges, r.grid().unwrap().edges);
    let pn: Vec<&Id> = p.nodes.keys().collect();
    let rn: Vec<&Id> = r.nodes.keys().collect();
    let pl: Vec<&Id> = p.links.keys().collect();
    let rl: Vec<&Id> = r.links.keys().collect();
    fn injections(k: usize, n: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in injections(k - 1, n) {
            for x in 0..n {
                if !rest.contains(&x) {
                    let mut v = rest.clone();
                    v.push(x);
                    out.push(v);
                }
            }
        }
        out
    }
    for vmap in injections(pn.len(), rn.len()) {
        let nm: BTreeMap<&Id, &Id> = pn.iter().zip(&vmap).map(|(a, &i)| (*a, rn[i])).collect();
        for emap in injections(pl.len(), rl.len()) {
            let ok = pl.iter().zip(&emap).all(|(l, &j)| {
                gp[*l].iter().all(|a| gr[rl[j]].contains(&a.map(|n| nm[n].clone())))
            });
            if ok {
                return true;
            }
        }
    }
    false
}

pub fn typed_category_laws(seed: u64) -> Outcome {
    category_laws(seed, Law::Typed)
}

pub fn structural_category_laws(seed: u64) -> Outcome {
    category_laws(seed, Law::Structural)
}

pub fn weak_category_laws(seed: u64) -> Outcome {
    category_laws(seed, Law::Weak)
}

pub fn onto_links_and_nodes_keep_connectivity(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = { let cfg = config(&mut rng).deterministic(); gen_schema(&mut rng, &cfg) };
    let (p, f) = merge_nodes(&mut rng, &r, false);
    let fl = flags(&r, &p, &f);
    check!(fl.structural && fl.e_epi && fl.v_epi);
    if det_grid(&r).is_connected() {
        check!(det_grid(&p).is_connected());
    }
    if !det_grid(&p).is_connected() {
        check!(!det_grid(&r).is_connected());
    }
    check!(components(&r) >= components(&p));

    let (q, g) = duplicate_links(&mut rng, &p);
    let gl = flags(&q, &p, &g);
    check!(gl.structural && gl.e_epi && gl.v_epi);
    check!(components(&q) >= components(&p));
    Ok(())
}

pub fn onto_links_and_nodes_keep_fullness(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = complete_basic(&mut rng);
    check!(is_full(&r));
    let (p, f) = merge_nodes(&mut rng, &r, false);
    check!(flags(&r, &p, &f).e_epi);
    // Merging turns links between merged nodes into loops; fullness
    // only asks for links between distinct nodes.
    check!(is_full(&p));
    Ok(())
}

pub fn fan_bounds_transfer_along_injective_onto_maps(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let p = { let cfg = config(&mut rng).deterministic(); gen_schema(&mut rng, &cfg) };
    let (r, f) = duplicate_links(&mut rng, &p);
    let fl = flags(&r, &p, &f);
    check!(fl.structural && fl.v_mono && fl.e_epi);
    let (ri, pi, ro, po) = (fan_ins(&r), fan_ins(&p), fan_outs(&r), fan_outs(&p));
    // Larger than n in the codomain implies larger than n in the domain.
    let n_in = pi.values().min().copied().unwrap_or(0).saturating_sub(1);
    let n_out = po.values().min().copied().unwrap_or(0).saturating_sub(1);
    if pi.values().all(|&x| x > n_in) {
        check!(ri.values().all(|&x| x > n_in));
    }
    if po.values().all(|&x| x > n_out) {
        check!(ro.values().all(|&x| x > n_out));
    }
    // Smaller than n in the domain implies smaller than n in the codomain.
    let m_in = ri.values().max().copied().unwrap_or(0) + 1;
    let m_out = ro.values().max().copied().unwrap_or(0) + 1;
    check!(pi.values().all(|&x| x < m_in));
    check!(po.values().all(|&x| x < m_out));
    for (v, image) in &f.node_map {
        check!(ri[v] >= pi[image] && ro[v] >= po[image]);
    }
    Ok(())
}

pub fn image_is_the_largest_onto_part(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = { let cfg = config(&mut rng); gen_schema(&mut rng, &cfg) };
    let (b, f) = merge_nodes(&mut rng, &r, false);
    let (p, g) = extend(&mut rng, &b);
    let h = compose(&f, &g).unwrap();
    let im = image(&r, &p, &h).unwrap();
    check!(is_subschema(&im.schema, &p));
    let onto = flags(&r, &im.schema, &im.epi);
    check!(onto.structural && onto.ve_epi());
    check!(flags(&im.schema, &p, &im.inclusion).structural);
    let hit: BTreeSet<&Id> = h.node_map.values().chain(h.link_map.values()).collect();
    for id in p.nodes.keys().chain(p.links.keys()) {
        check_eq!(im.schema.has_slot(id), hit.contains(id));
    }
    Ok(())
}

pub fn restriction_keeps_morphism_kind(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = { let cfg = config(&mut rng); gen_schema(&mut rng, &cfg) };
    let typed = rng.gen();
    let (p, f) = if rng.gen() { extend(&mut rng, &r) } else { merge_nodes(&mut rng, &r, typed) };
    let fl = flags(&r, &p, &f);
    let q = endpoint_closed_subschema(&mut rng, &r);
    check!(is_subschema(&q, &r));
    let fq = restrict_morphism(&r, &f, &q).unwrap();
    let ql = flags(&q, &p, &fq);
    check!(ql.structural == fl.structural && ql.typed >= fl.typed);
    check!(ql.v_mono >= fl.v_mono && ql.e_mono >= fl.e_mono);
    check!(ql.ve_mono() >= fl.ve_mono());
    Ok(())
}

pub fn preimages_of_complete_parts_are_complete(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = { let cfg = config(&mut rng); gen_schema(&mut rng, &cfg) };
    let (p, f) = merge_nodes(&mut rng, &r, false);
    let fl = flags(&r, &p, &f);
    check!(fl.structural && fl.v_epi && fl.e_epi);

    let all_nodes = SlotSelection {
        nodes: p.nodes.keys().cloned().collect(),
        ports: p.ports.keys().filter(|_| rng.gen()).cloned().collect(),
        links: p.links.keys().filter(|_| rng.gen()).cloned().collect(),
    };
    let qv = p.restrict(&all_nodes);
    check!(completeness_flags(&qv, &p).unwrap().v_complete);
    let pre = preimage(&r, &p, &f, &qv).unwrap();
    check!(completeness_flags(&pre, &r).unwrap().v_complete);

    let grid = p.grid().unwrap().edges;
    let kept: BTreeSet<Id> = p.nodes.keys().filter(|_| rng.gen()).cloned().collect();
    let touching = grid
        .iter()
        .filter(|(_, opts)| opts.iter().flat_map(|a| a.endpoints()).any(|n| kept.contains(n)))
        .map(|(l, _)| l.clone())
        .collect();
    let qe = p.restrict(&SlotSelection { nodes: kept, ports: p.ports.keys().cloned().collect(), links: touching });
    check!(completeness_flags(&qe, &p).unwrap().e_complete);
    let pre = preimage(&r, &p, &f, &qe).unwrap();
    check!(completeness_flags(&pre, &r).unwrap().e_complete);
    Ok(())
}

pub fn images_of_closed_schemas_are_closed(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = gen_closed(&mut rng);
    check_eq!(r.classify().unwrap().roles, BTreeSet::from([Role::Closed]));
    let (b, f) = merge_nodes(&mut rng, &r, false);
    check_eq!(b.classify().unwrap().roles, BTreeSet::from([Role::Closed]));
    let (p, g) = extend(&mut rng, &b);
    let im = image(&r, &p, &compose(&f, &g).unwrap()).unwrap();
    check_eq!(im.schema.classify().unwrap().roles, BTreeSet::from([Role::Closed]));
    Ok(())
}

pub fn images_of_connected_schemas_are_connected(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = { let cfg = config(&mut rng).deterministic(); gen_schema(&mut rng, &cfg) };
    let (b, f) = merge_nodes(&mut rng, &r, false);
    let (p, g) = extend(&mut rng, &b);
    let im = image(&r, &p, &compose(&f, &g).unwrap()).unwrap();
    if det_grid(&r).is_connected() {
        check!(det_grid(&b).is_connected());
        check!(det_grid(&im.schema).is_connected());
    }
    Ok(())
}

pub fn strong_structural_implies_structural(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut cfg = GenConfig::port();
    cfg.max_nodes = 3;
    cfg.max_links = 3;
    let r = gen_schema(&mut rng, &cfg);
    let p = if rng.gen() {
        relabel(&endpoint_closed_subschema(&mut rng, &r), "q_").0
    } else {
        gen_schema(&mut rng, &cfg)
    };
    let rep = subschema_check(&p, &r).unwrap();
    if rep.strong_structural {
        check!(rep.structural);
    }
    Ok(())
}

pub fn structural_subschemas_have_injective_witnesses(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut cfg = config(&mut rng);
    cfg.max_nodes = 3;
    cfg.max_links = 3;
    let r = gen_schema(&mut rng, &cfg);
    let p = if rng.gen() {
        relabel(&endpoint_closed_subschema(&mut rng, &r), "q_").0
    } else {
        gen_schema(&mut rng, &cfg)
    };
    let rep = subschema_check(&p, &r).unwrap();
    check_eq!(rep.structural, structural_oracle(&p, &r));
    if rep.structural {
        let w = rep.witness.unwrap();
        let fl = flags(&p, &r, &w);
        check!(fl.weak && fl.ve_mono());
    }
    Ok(())
}

pub fn subschema_relations_are_transitive(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let q = { let cfg = config(&mut rng); gen_schema(&mut rng, &cfg) };
    let r = endpoint_closed_subschema(&mut rng, &q);
    let p = endpoint_closed_subschema(&mut rng, &r);
    check!(is_subschema(&p, &r) && is_subschema(&r, &q));
    check!(is_subschema(&p, &q));
    let pr = relabel(&p, "x_").0;
    let rr = relabel(&r, "y_").0;
    let a = subschema_check(&pr, &rr).unwrap();
    let b = subschema_check(&rr, &q).unwrap();
    check!(a.structural && b.structural);
    check!(subschema_check(&pr, &q).unwrap().structural);
    Ok(())
}

pub fn completeness_laws(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let r = gen_schema(&mut rng, &GenConfig::port());
    let whole = completeness_flags(&r, &r).unwrap();
    check!(whole.v_complete && whole.e_complete && whole.p_complete);
    let q = endpoint_closed_subschema(&mut rng, &r);
    let c = completeness_flags(&q, &r).unwrap();
    check_eq!(c.v_complete && c.e_complete && c.p_complete, q.content_eq(&r));

    let portless = r.nodes.keys().any(|n| !r.internal_assignment.values().any(|o| o.contains(n)));
    let all_ports = SlotSelection {
        nodes: r.nodes.keys().filter(|_| rng.gen()).cloned().collect(),
        ports: r.ports.keys().cloned().collect(),
        links: r.links.keys().cloned().collect(),
    };
    // Keep exactly the nodes owning a kept port, as a port-induced part.
    let owners: BTreeSet<Id> = r.internal_assignment.values().flat_map(|o| o.iter().cloned()).collect();
    let induced = SlotSelection { nodes: all_ports.nodes.union(&owners).cloned().collect(), ..all_ports };
    let qp = r.restrict(&induced);
    let c = completeness_flags(&qp, &r).unwrap();
    check!(c.p_complete);
    if !portless {
        check!(c.v_complete);
    }
    check!(c.e_complete);
    Ok(())
}

pub fn concretization_maps_both_ways(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let s = { let cfg = config(&mut rng); gen_schema(&mut rng, &cfg) };
    let b = gen_binding(&mut rng, &s, &universe(), false);
    let c = concretize(&s, &b).unwrap().schema;
    let id = SchemaMorphism::identity(&s);
    let id = if s.form == Form::Basic { weak_only(&id) } else { id };
    let down = flags(&s, &c, &id);
    check!(down.typed && down.ve_mono() && down.ve_epi());
    check!(flags(&c, &s, &id).structural);
    Ok(())
}

pub fn dropping_ports_is_a_weak_map(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let s = gen_schema(&mut rng, &GenConfig::port());
    let basic = s.to_basic().unwrap();
    let m = weak_only(&SchemaMorphism::identity(&s));
    let fl = flags(&s, &basic, &m);
    check!(fl.weak && fl.weak_typed);
    Ok(())
}

pub type Check = fn(u64) -> Outcome;

/// Every law, by test name.
pub const ALL: &[(&str, Check)] = &[
    ("typed_category_laws", typed_category_laws),
    ("structural_category_laws", structural_category_laws),
    ("weak_category_laws", weak_category_laws),
    ("onto_links_and_nodes_keep_connectivity", onto_links_and_nodes_keep_connectivity),
    ("onto_links_and_nodes_keep_fullness", onto_links_and_nodes_keep_fullness),
    ("fan_bounds_transfer_along_injective_onto_maps", fan_bounds_transfer_along_injective_onto_maps),
    ("image_is_the_largest_onto_part", image_is_the_largest_onto_part),
    ("restriction_keeps_morphism_kind", restriction_keeps_morphism_kind),
    ("preimages_of_complete_parts_are_complete", preimages_of_complete_parts_are_complete),
    ("images_of_closed_schemas_are_closed", images_of_closed_schemas_are_closed),
    ("images_of_connected_schemas_are_connected", images_of_connected_schemas_are_connected),
    ("strong_structural_implies_structural", strong_structural_implies_structural),
    ("structural_subschemas_have_injective_witnesses", structural_subschemas_have_injective_witnesses),
    ("subschema_relations_are_transitive", subschema_relations_are_transitive),
    ("completeness_laws", completeness_laws),
    ("concretization_maps_both_ways", concretization_maps_both_ways),
    ("dropping_ports_is_a_weak_map", dropping_ports_is_a_weak_map),
];
