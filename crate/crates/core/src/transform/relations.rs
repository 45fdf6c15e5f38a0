//! Order and equivalence relations between schemas, and the maximal
//! abstraction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{determine, interpret, Binding, DeterminationSpec, TransformError};
use crate::automaton::{Direction, ExternalTarget, Header};
use crate::element::{Choice, Element, ParamValue, Position, Range, Value, Variable};
use crate::id::Id;
use crate::kind::{Constant, KindUniverse, Sort};
use crate::multigraph::{Attachment, AttachmentShape};
use crate::schema::{Form, Schema};

/// Upper bound on the realizations `realizations` will enumerate.
pub const REALIZATION_LIMIT: usize = 200_000;

/// How `t` relates to `s`. Each field carries the witness when the relation
/// holds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    /// `t` is a concretization of `s` by this binding.
    pub more_concrete: Option<Binding>,
    /// `s` is a concretization of `t` by this binding.
    pub more_general: Option<Binding>,
    /// `t` is a determination of `s` by this spec.
    pub more_determined: Option<DeterminationSpec>,
    /// `s` is a determination of `t` by this spec.
    pub less_determined: Option<DeterminationSpec>,
}

/// A bijection between variable names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Renaming {
    pub map: BTreeMap<String, String>,
}

/// Everything outside the elements and choices must agree for any relation
/// to hold.
fn same_frame(s: &Schema, t: &Schema) -> bool {
    s.form == t.form
        && s.nodes.keys().eq(t.nodes.keys())
        && s.ports.len() == t.ports.len()
        && s.ports.iter().zip(&t.ports).all(|((a, p), (b, q))| a == b && p.direction == q.direction && p.locus == q.locus)
        && s.links.len() == t.links.len()
        && s.links.iter().zip(&t.links).all(|((a, p), (b, q))| a == b && p.class == q.class && p.channel == q.channel)
}

fn same_choices(s: &Schema, t: &Schema) -> bool {
    s.internal_assignment == t.internal_assignment
        && s.adjacency == t.adjacency
        && s.external_assignment == t.external_assignment
}

fn elements<'a>(s: &'a Schema, t: &'a Schema) -> impl Iterator<Item = (&'a Id, Sort, &'a Element, &'a Element)> {
    s.slots().zip(t.slots()).map(|((sort, id, a), (_, _, b))| (id, sort, a, b))
}

/// Records what each variable of `general` must be bound to for it to
/// become `specific`. `None` when no binding can do it.
fn match_element(
    slot: &Id,
    general: &Element,
    specific: &Element,
    found: &mut Vec<(String, Id, Position, Option<Value>)>,
) -> bool {
    if general == specific {
        for (position, v) in general.variables() {
            found.push((v.name.clone(), slot.clone(), position, None));
        }
        return true;
    }
    match (general, specific) {
        (Element::Variable(v), Element::Constant(c)) => {
            if !v.range.contains_constant(c) {
                return false;
            }
            found.push((v.name.clone(), slot.clone(), Position::Element, Some(Value::Const(c.clone()))));
            true
        }
        (Element::Parameterized { kind, params }, Element::Constant(c)) => {
            let fixed: BTreeMap<String, ParamValue> =
                c.params.iter().map(|(k, v)| (k.clone(), ParamValue::Fixed(v.clone()))).collect();
            *kind == c.kind && match_params(slot, params, &fixed, found)
        }
        (Element::Parameterized { kind, params }, Element::Parameterized { kind: k2, params: p2 }) => {
            kind == k2 && match_params(slot, params, p2, found)
        }
        _ => false,
    }
}

fn match_params(
    slot: &Id,
    general: &BTreeMap<String, ParamValue>,
    specific: &BTreeMap<String, ParamValue>,
    found: &mut Vec<(String, Id, Position, Option<Value>)>,
) -> bool {
    if !general.keys().eq(specific.keys()) {
        return false;
    }
    for ((name, g), s) in general.iter().zip(specific.values()) {
        let position = Position::Param(name.clone());
        match (g, s) {
            (a, b) if a == b => {
                if let ParamValue::Var(v) = a {
                    found.push((v.name.clone(), slot.clone(), position, None));
                }
            }
            (ParamValue::Var(v), ParamValue::Fixed(x)) => {
                let value = Value::Param(x.clone());
                if !v.range.contains(&value) {
                    return false;
                }
                found.push((v.name.clone(), slot.clone(), position, Some(value)));
            }
            _ => return false,
        }
    }
    true
}

/// The binding taking `s` to `t`, derived slot by slot.
fn concretizing_binding(s: &Schema, t: &Schema) -> Option<Binding> {
    if !same_frame(s, t) || !same_choices(s, t) {
        return None;
    }
    let mut found = Vec::new();
    for (slot, _, a, b) in elements(s, t) {
        if !match_element(slot, a, b, &mut found) {
            return None;
        }
    }
    let mut by_name: BTreeMap<String, Vec<(Id, Position, Option<Value>)>> = BTreeMap::new();
    for (name, slot, position, value) in found {
        by_name.entry(name).or_default().push((slot, position, value));
    }
    let mut binding = Binding::new();
    for (name, occurrences) in by_name {
        let first = &occurrences[0].2;
        let uniform = first.is_some() && occurrences.iter().all(|o| &o.2 == first);
        if uniform {
            binding.by_name.insert(name, first.clone().expect("checked"));
        } else {
            for (slot, position, value) in occurrences {
                if let Some(v) = value {
                    binding.by_occurrence.insert((slot, position), v);
                }
            }
        }
    }
    let produced = interpret(s, &binding).ok()?;
    produced.content_eq(t).then_some(binding)
}

fn variable_ranges(s: &Schema) -> BTreeMap<String, Range> {
    s.variable_multiset().entries.into_iter().map(|(n, e)| (n, e.range)).collect()
}

/// The spec narrowing `s` to `t`, derived entry by entry.
fn determining_spec(s: &Schema, t: &Schema) -> Option<DeterminationSpec> {
    if !same_frame(s, t) {
        return None;
    }
    let mut spec = DeterminationSpec::default();
    let (rs, rt) = (variable_ranges(s), variable_ranges(t));
    if !rs.keys().eq(rt.keys()) {
        return None;
    }
    for (name, r) in &rt {
        if r != &rs[name] {
            spec.ranges.insert(name.clone(), r.clone());
        }
    }
    fn diff<T: Ord + Clone>(a: &BTreeMap<Id, Choice<T>>, b: &BTreeMap<Id, Choice<T>>) -> Option<BTreeMap<Id, Choice<T>>> {
        if !a.keys().eq(b.keys()) {
            return None;
        }
        Some(b.iter().filter(|(k, v)| a[*k] != **v).map(|(k, v)| (k.clone(), v.clone())).collect())
    }
    spec.owners = diff(&s.internal_assignment, &t.internal_assignment)?;
    spec.adjacency = diff(&s.adjacency, &t.adjacency)?;
    spec.external = diff(&s.external_assignment, &t.external_assignment)?;
    let produced = determine(s, &spec).ok()?;
    produced.content_eq(t).then_some(spec)
}

/// Decides the three orderings between `s` and `t` and returns witnesses.
pub fn compare(s: &Schema, t: &Schema) -> Result<Comparison, TransformError> {
    s.ensure_valid()?;
    t.ensure_valid()?;
    Ok(Comparison {
        more_concrete: concretizing_binding(s, t),
        more_general: concretizing_binding(t, s),
        more_determined: determining_spec(s, t),
        less_determined: determining_spec(t, s),
    })
}

/// Members of a range for one slot of `sort`.
fn members(range: &Range, universe: &KindUniverse, sort: Sort) -> BTreeSet<Value> {
    range.members(universe, sort)
}

/// Turns every variable whose range has a single member into that constant.
fn pin_singletons(s: &Schema, universe: &KindUniverse) -> Schema {
    let mut out = s.clone();
    for (sort, _, element) in out.slots_mut() {
        match element {
            Element::Variable(v) => {
                let m = members(&v.range, universe, sort);
                if m.len() == 1 {
                    if let Some(Value::Const(c)) = m.into_iter().next() {
                        *element = Element::Constant(c);
                    }
                }
            }
            Element::Parameterized { params, .. } => {
                for p in params.values_mut() {
                    if let ParamValue::Var(v) = p {
                        if let Range::Values(vs) = &v.range {
                            if vs.len() == 1 {
                                *p = ParamValue::Fixed(vs.iter().next().expect("one").clone());
                            }
                        }
                    }
                }
                *element = element.clone().normalized();
            }
            Element::Constant(_) => {}
        }
    }
    out
}

fn same_range(a: &Range, b: &Range, universe: &KindUniverse, sort: Sort) -> bool {
    let symbolic = matches!(a, Range::Universal(_)) || matches!(b, Range::Universal(_));
    if symbolic && universe.kinds(sort).next().is_none() {
        return a == b;
    }
    members(a, universe, sort) == members(b, universe, sort)
}

fn link_variables(
    a: &Variable,
    b: &Variable,
    sort: Sort,
    universe: &KindUniverse,
    forward: &mut BTreeMap<String, String>,
    backward: &mut BTreeMap<String, String>,
) -> bool {
    if !same_range(&a.range, &b.range, universe, sort) {
        return false;
    }
    let f = forward.entry(a.name.clone()).or_insert_with(|| b.name.clone());
    let g = backward.entry(b.name.clone()).or_insert_with(|| a.name.clone());
    *f == b.name && *g == a.name
}

/// Same schema up to renaming variables, with ranges compared by their
/// members over `universe`. Variables with a single admissible value count
/// as that constant. Returns the renaming of `s`'s variables into `t`'s.
pub fn strongly_equivalent(
    s: &Schema,
    t: &Schema,
    universe: &KindUniverse,
) -> Result<Option<Renaming>, TransformError> {
    s.ensure_valid()?;
    t.ensure_valid()?;
    let (s, t) = (pin_singletons(s, universe), pin_singletons(t, universe));
    if !same_frame(&s, &t) || !same_choices(&s, &t) {
        return Ok(None);
    }
    let mut forward = BTreeMap::new();
    let mut backward = BTreeMap::new();
    for (_, sort, a, b) in elements(&s, &t) {
        let ok = match (a, b) {
            (Element::Constant(x), Element::Constant(y)) => x == y,
            (Element::Variable(x), Element::Variable(y)) => {
                link_variables(x, y, sort, universe, &mut forward, &mut backward)
            }
            (Element::Parameterized { kind: k1, params: p1 }, Element::Parameterized { kind: k2, params: p2 }) => {
                k1 == k2
                    && p1.keys().eq(p2.keys())
                    && p1.values().zip(p2.values()).all(|pair| match pair {
                        (ParamValue::Fixed(x), ParamValue::Fixed(y)) => x == y,
                        (ParamValue::Var(x), ParamValue::Var(y)) => {
                            link_variables(x, y, sort, universe, &mut forward, &mut backward)
                        }
                        _ => false,
                    })
            }
            _ => false,
        };
        if !ok {
            return Ok(None);
        }
    }
    Ok(Some(Renaming { map: forward }))
}

/// Every realization of `s` over `universe`: each variable name takes each
/// member of its range and each set-valued entry each of its options.
/// Headers are cleared; the list is sorted and free of duplicates.
pub fn realizations(s: &Schema, universe: &KindUniverse, limit: usize) -> Result<Vec<Schema>, TransformError> {
    s.ensure_valid()?;
    let multiset = s.variable_multiset();
    let mut axes: Vec<(String, Vec<Value>)> = Vec::new();
    for (name, entry) in &multiset.entries {
        let sort = entry.occurrences[0].sort;
        axes.push((name.clone(), members(&entry.range, universe, sort).into_iter().collect()));
    }
    let owners: Vec<(&Id, Vec<&Id>)> = s.internal_assignment.iter().map(|(k, c)| (k, c.iter().collect())).collect();
    let links: Vec<(&Id, Vec<&Attachment<Id>>)> = s.adjacency.iter().map(|(k, c)| (k, c.iter().collect())).collect();
    let external: Vec<(&Id, Vec<&ExternalTarget>)> =
        s.external_assignment.iter().map(|(k, c)| (k, c.iter().collect())).collect();

    let mut radices: Vec<usize> = axes.iter().map(|(_, v)| v.len()).collect();
    radices.extend(owners.iter().map(|(_, v)| v.len()));
    radices.extend(links.iter().map(|(_, v)| v.len()));
    radices.extend(external.iter().map(|(_, v)| v.len()));
    let mut total: usize = 1;
    for &r in &radices {
        total = total.saturating_mul(r);
        if total > limit {
            return Err(TransformError::SearchSpaceTooLarge { limit });
        }
    }
    if total == 0 {
        return Ok(Vec::new());
    }

    let mut seen: BTreeMap<String, Schema> = BTreeMap::new();
    let mut digits = vec![0usize; radices.len()];
    loop {
        let mut binding = Binding::new();
        for ((name, values), &d) in axes.iter().zip(&digits) {
            binding.by_name.insert(name.clone(), values[d].clone());
        }
        let mut r = interpret(s, &binding)?;
        r.header = Header::default();
        let mut at = axes.len();
        for (k, options) in &owners {
            r.internal_assignment.insert((*k).clone(), Choice::single(options[digits[at]].clone()));
            at += 1;
        }
        for (k, options) in &links {
            r.adjacency.insert((*k).clone(), Choice::single(options[digits[at]].clone()));
            at += 1;
        }
        for (k, options) in &external {
            r.external_assignment.insert((*k).clone(), Choice::single(options[digits[at]].clone()));
            at += 1;
        }
        let key = serde_json::to_string(&r).expect("schemas serialize");
        seen.entry(key).or_insert(r);

        let mut i = digits.len();
        loop {
            if i == 0 {
                return Ok(seen.into_values().collect());
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < radices[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Same realizations over `universe`.
pub fn equivalent(s: &Schema, t: &Schema, universe: &KindUniverse) -> Result<bool, TransformError> {
    Ok(realizations(s, universe, REALIZATION_LIMIT)? == realizations(t, universe, REALIZATION_LIMIT)?)
}

/// Same realizations among those whose node constants all satisfy `within`.
pub fn equivalent_within(
    s: &Schema,
    t: &Schema,
    universe: &KindUniverse,
    within: impl Fn(&Constant) -> bool,
) -> Result<bool, TransformError> {
    let keep = |list: Vec<Schema>| -> Vec<Schema> {
        list.into_iter()
            .filter(|r| r.nodes.values().all(|e| e.as_constant().is_some_and(&within)))
            .collect()
    };
    Ok(keep(realizations(s, universe, REALIZATION_LIMIT)?) == keep(realizations(t, universe, REALIZATION_LIMIT)?))
}

/// Every slot becomes a variable ranging over its whole sort, and every
/// assignment and link may take any option of the same shape that respects
/// port directions.
pub fn maximal_abstraction(s: &Schema) -> Result<Schema, TransformError> {
    s.ensure_valid()?;
    let mut out = s.clone();
    for (sort, id, element) in out.slots_mut() {
        *element = Element::variable(&format!("v_{id}"), Range::Universal(sort));
    }
    let (outlets, inlets): (Vec<Id>, Vec<Id>) = match s.form {
        Form::Basic => (s.nodes.keys().cloned().collect(), s.nodes.keys().cloned().collect()),
        Form::Port => {
            let pick = |d: Direction| s.internal_ports().filter(|(_, p)| p.direction == d).map(|(i, _)| i.clone()).collect();
            (pick(Direction::Outlet), pick(Direction::Inlet))
        }
    };
    let all_nodes: Choice<Id> = s.nodes.keys().cloned().collect();
    for owners in out.internal_assignment.values_mut() {
        *owners = all_nodes.clone();
    }
    for options in out.adjacency.values_mut() {
        let shapes: BTreeSet<AttachmentShape> = options.iter().map(Attachment::shape).collect();
        let mut relaxed = BTreeSet::new();
        for shape in shapes {
            match shape {
                AttachmentShape::Closed => {
                    for b in &outlets {
                        for e in &inlets {
                            relaxed.insert(Attachment::closed(b.clone(), e.clone()));
                        }
                    }
                }
                AttachmentShape::BeginOnly => relaxed.extend(outlets.iter().cloned().map(Attachment::BeginOnly)),
                AttachmentShape::EndOnly => relaxed.extend(inlets.iter().cloned().map(Attachment::EndOnly)),
            }
        }
        *options = Choice::from_set(relaxed);
    }
    for (port, targets) in out.external_assignment.iter_mut() {
        let all: BTreeSet<ExternalTarget> = s
            .nodes
            .keys()
            .cloned()
            .map(ExternalTarget::Node)
            .chain(s.ports.keys().filter(|p| *p != port).cloned().map(ExternalTarget::Port))
            .chain(s.links.keys().cloned().map(ExternalTarget::Link))
            .collect();
        *targets = Choice::from_set(all);
    }
    Ok(out)
}
