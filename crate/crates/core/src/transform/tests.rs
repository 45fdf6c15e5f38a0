use super::*;
use crate::automaton::Direction::{Inlet, Outlet};
use crate::automaton::LinkClass;
use crate::kind::{KindUniverse, Sort};

fn id(s: &str) -> Id {
    Id::new(s)
}

fn tm_pair() -> Schema {
    Schema::new("pair", Form::Basic)
        .with_node("a", Element::variable("T", Range::kinds(["automaton/turing_machine"])))
        .with_node("b", Element::variable("T", Range::kinds(["automaton/turing_machine"])))
        .with_node("c", Element::variable("A", Range::kinds(["automaton/finite_automaton"])))
        .with_link("l", LinkClass::Information, &[Attachment::closed("a", "b")])
}

#[test]
fn binding_a_name_replaces_every_occurrence() {
    let tm = Constant::of("automaton/turing_machine").with_param("tapes", "2");
    let b = Binding::new().bind("T", Value::Const(tm.clone()));
    let out = interpret(&tm_pair(), &b).unwrap();
    assert_eq!(out.nodes[&id("a")], Element::Constant(tm.clone()));
    assert_eq!(out.nodes[&id("b")], Element::Constant(tm));
    assert!(matches!(out.nodes[&id("c")], Element::Variable(_)));
}

#[test]
fn empty_binding_is_identity() {
    assert_eq!(interpret(&tm_pair(), &Binding::new()).unwrap(), tm_pair());
}

#[test]
fn out_of_range_value_is_rejected() {
    let b = Binding::new().bind_const("A", "automaton/cellular_automaton");
    assert!(matches!(interpret(&tm_pair(), &b), Err(TransformError::RangeViolation { .. })));
    let b = Binding::new().bind_const("Z", "automaton");
    assert_eq!(interpret(&tm_pair(), &b), Err(TransformError::UnknownVariable("Z".into())));
}

#[test]
fn occurrence_override_wins() {
    let b = Binding::new()
        .bind_const("T", "automaton/turing_machine")
        .bind_occurrence(&id("b"), Position::Element, Value::Const(Constant::of("automaton/turing_machine/multi_tape")));
    let out = interpret(&tm_pair(), &b).unwrap();
    assert_eq!(out.nodes[&id("a")], Element::constant("automaton/turing_machine"));
    assert_eq!(out.nodes[&id("b")], Element::constant("automaton/turing_machine/multi_tape"));
}

#[test]
fn realization_needs_everything_bound() {
    let b = Binding::new().bind_const("T", "automaton/turing_machine");
    assert_eq!(realize(&tm_pair(), &b), Err(TransformError::ResidualVariables(vec!["A".into()])));
    let b = b.bind_const("A", "automaton/finite_automaton");
    let Realization::Basic(ba) = realize(&tm_pair(), &b).unwrap() else { panic!("basic form expected") };
    assert_eq!(ba.nodes.len(), 3);
    let again = realize(&Realization::Basic(ba.clone()).to_schema(), &Binding::new()).unwrap();
    assert_eq!(again, Realization::Basic(ba));
}

#[test]
fn nondeterminism_blocks_realization() {
    let s = Schema::new("n", Form::Basic)
        .with_node("a", Element::constant("automaton"))
        .with_node("b", Element::constant("automaton"))
        .with_link("l", LinkClass::Information, &[Attachment::closed("a", "b"), Attachment::closed("b", "a")]);
    assert_eq!(realize(&s, &Binding::new()), Err(TransformError::ResidualNondeterminism(vec![id("l")])));
}

#[test]
fn abstraction_round_trips() {
    let s = Schema::new("c", Form::Basic)
        .with_node("a", Element::constant("automaton/turing_machine"))
        .with_node("b", Element::constant("automaton/finite_automaton"));
    let range = Range::kinds(["automaton"]);
    let spec = AbstractionSpec::default()
        .element("a", Variable::new("X", range.clone()))
        .element("b", Variable::new("X", range));
    let abs = abstract_elements(&s, &spec).unwrap();
    assert!(abs.restoring_binding.by_name.is_empty());
    assert_eq!(abs.restoring_binding.by_occurrence.len(), 2);
    assert_eq!(interpret(&abs.schema, &abs.restoring_binding).unwrap(), s);
}

#[test]
fn parameter_abstraction_round_trips() {
    let s = Schema::new("c", Form::Basic)
        .with_node("a", Element::Constant(Constant::of("automaton/turing_machine").with_param("tapes", "2")));
    let spec = AbstractionSpec::default().param("a", "tapes", Variable::new("k", Range::values(["1", "2"])));
    let abs = abstract_elements(&s, &spec).unwrap();
    assert!(matches!(abs.schema.nodes[&id("a")], Element::Parameterized { .. }));
    assert_eq!(interpret(&abs.schema, &abs.restoring_binding).unwrap(), s);
}

#[test]
fn abstraction_errors() {
    let s = tm_pair();
    let spec = AbstractionSpec::default().element("a", Variable::new("Y", Range::kinds(["automaton"])));
    assert!(matches!(abstract_elements(&s, &spec), Err(TransformError::OccurrenceNotConstant { .. })));
    let s = Schema::new("c", Form::Basic).with_node("a", Element::constant("device/modem"));
    let spec = AbstractionSpec::default().element("a", Variable::new("Y", Range::kinds(["automaton"])));
    assert!(matches!(abstract_elements(&s, &spec), Err(TransformError::RangeExcludesOriginal { .. })));
    assert_eq!(abstract_elements(&s, &AbstractionSpec::default()).unwrap().schema, s);
}

#[test]
fn determination_narrows_and_checks() {
    let s = Schema::new("d", Form::Basic)
        .with_node("a", Element::variable("X", Range::kinds(["automaton/ram", "automaton/turing_machine"])))
        .with_node("b", Element::constant("automaton"))
        .with_link("l", LinkClass::Information, &[Attachment::closed("a", "b"), Attachment::closed("b", "a")]);
    let mut spec = DeterminationSpec::default();
    spec.adjacency.insert(id("l"), Choice::single(Attachment::closed(id("a"), id("b"))));
    let d = determine(&s, &spec).unwrap();
    assert!(d.is_deterministic());
    let c = compare(&s, &d).unwrap();
    assert_eq!(c.more_determined, Some(spec.clone()));
    assert!(c.less_determined.is_none());

    let mut bad = DeterminationSpec::default();
    bad.ranges.insert("X".into(), Range::kinds(["automaton"]));
    assert_eq!(determine(&s, &bad), Err(TransformError::NotASubset { target: "X".into() }));
    bad.ranges.insert("X".into(), Range::Kinds(Default::default()));
    assert_eq!(determine(&s, &bad), Err(TransformError::EmptyRestriction { target: "X".into() }));
    assert_eq!(determine(&s, &DeterminationSpec::default()).unwrap(), s);
}

#[test]
fn compare_finds_binding() {
    let s = tm_pair();
    let b = Binding::new().bind_const("T", "automaton/turing_machine");
    let t = interpret(&s, &b).unwrap();
    let c = compare(&s, &t).unwrap();
    assert_eq!(c.more_concrete, Some(b));
    assert!(c.more_general.is_none());
    let refl = compare(&s, &s).unwrap();
    assert!(refl.more_concrete.is_some() && refl.more_general.is_some() && refl.more_determined.is_some());
}

#[test]
fn strong_equivalence_follows_renaming() {
    let universe = KindUniverse::new().with(
        Sort::Node,
        &["automaton/ram", "automaton/turing_machine/multi_tape", "automaton/finite_automaton/moore"],
    );
    let s = tm_pair();
    let mut t = s.clone();
    for (_, _, e) in t.slots_mut() {
        if let Element::Variable(v) = e {
            v.name = format!("{}_renamed", v.name);
        }
    }
    let r = strongly_equivalent(&s, &t, &universe).unwrap().unwrap();
    assert_eq!(r.map["T"], "T_renamed");
    assert!(equivalent(&s, &t, &universe).unwrap());

    let mut u = s.clone();
    *u.slot_mut(&id("c")).unwrap() = Element::variable("A", Range::kinds(["automaton/ram"]));
    assert!(strongly_equivalent(&s, &u, &universe).unwrap().is_none());
    assert!(!equivalent(&s, &u, &universe).unwrap());
}

#[test]
fn equivalence_within_a_kind_class() {
    let universe = KindUniverse::new().with(Sort::Node, &["automaton/ram", "neuron/threshold"]);
    let s = Schema::new("s", Form::Basic).with_node("a", Element::variable("X", Range::Universal(Sort::Node)));
    let t = Schema::new("t", Form::Basic).with_node("a", Element::variable("Y", Range::kinds(["neuron"])));
    assert!(!equivalent(&s, &t, &universe).unwrap());
    let neural = |c: &Constant| c.kind.has_tag("neuron");
    // `neuron` itself is a member of t's range but not of s's.
    assert!(!equivalent_within(&s, &t, &universe, neural).unwrap());
    let t = Schema::new("t", Form::Basic).with_node("a", Element::variable("Y", Range::kinds(["neuron/threshold"])));
    assert!(equivalent_within(&s, &t, &universe, neural).unwrap());
}

#[test]
fn maximal_abstraction_is_stable() {
    let s = Schema::new("m", Form::Port)
        .with_node("a", Element::constant("automaton"))
        .with_node("b", Element::constant("automaton"))
        .with_port("o", Outlet, &["a"])
        .with_port("i", Inlet, &["b"])
        .with_link("l", LinkClass::Information, &[Attachment::closed("o", "i")]);
    let m = maximal_abstraction(&s).unwrap();
    assert!(m.validate().is_empty());
    assert_eq!(m.internal_assignment[&id("o")].len(), 2);
    let universe = KindUniverse::new().with(Sort::Node, &["automaton"]);
    let twice = maximal_abstraction(&m).unwrap();
    assert!(strongly_equivalent(&m, &twice, &universe).unwrap().is_some());
}
