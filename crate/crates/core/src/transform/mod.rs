//! Vertical operations on schemas: interpretation, concretization,
//! realization, abstraction, and determination.

mod relations;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use relations::{
    compare, equivalent, equivalent_within, maximal_abstraction, realizations, strongly_equivalent,
    Comparison, Renaming, REALIZATION_LIMIT,
};

use crate::automaton::{BasicGridAutomaton, ExternalTarget, GridAutomaton};
use crate::element::{Choice, Element, ParamValue, Position, Range, Value, Variable};
use crate::id::Id;
use crate::kind::Constant;
use crate::multigraph::Attachment;
use crate::schema::{Form, Schema, SchemaError, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("variable `{0}` does not occur in the schema")]
    UnknownVariable(String),
    #[error("value `{value}` is outside the range of `{variable}`")]
    RangeViolation { variable: String, value: String },
    #[error("value `{value}` has the wrong form for `{variable}`")]
    ValueKindMismatch { variable: String, value: String },
    #[error("unbound variables remain: {}", .0.join(", "))]
    ResidualVariables(Vec<String>),
    #[error("entries with several options remain: {}", join_ids(.0))]
    ResidualNondeterminism(Vec<Id>),
    #[error("unknown slot `{0}`")]
    UnknownSlot(Id),
    #[error("`{slot}` holds no constant at the selected position")]
    OccurrenceNotConstant { slot: Id },
    #[error("range of `{variable}` excludes the constant at `{slot}`")]
    RangeExcludesOriginal { slot: Id, variable: String },
    #[error("variable `{variable}` is already used with a different range")]
    RangeConflict { variable: String },
    #[error("restriction of `{target}` is empty")]
    EmptyRestriction { target: String },
    #[error("restriction of `{target}` is not a subset of the original")]
    NotASubset { target: String },
    #[error("result is invalid: {}", crate::automaton::join_violations(.0))]
    InvalidResult(Vec<Violation>),
    #[error("more than {limit} realizations")]
    SearchSpaceTooLarge { limit: usize },
}

fn join_ids(ids: &[Id]) -> String {
    ids.iter().map(Id::as_str).collect::<Vec<_>>().join(", ")
}

/// Values for variables: by name, with optional per-occurrence overrides
/// that take precedence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub by_name: BTreeMap<String, Value>,
    pub by_occurrence: BTreeMap<(Id, Position), Value>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, name: &str, value: Value) -> Self {
        self.by_name.insert(name.to_string(), value);
        self
    }

    pub fn bind_const(self, name: &str, path: &str) -> Self {
        self.bind(name, Value::Const(Constant::of(path)))
    }

    pub fn bind_occurrence(mut self, slot: &Id, position: Position, value: Value) -> Self {
        self.by_occurrence.insert((slot.clone(), position), value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty() && self.by_occurrence.is_empty()
    }

    fn value_for(&self, name: &str, slot: &Id, position: &Position) -> Option<&Value> {
        self.by_occurrence
            .get(&(slot.clone(), position.clone()))
            .or_else(|| self.by_name.get(name))
    }

    /// Both bindings together; entries of `other` win on overlap.
    pub fn union(&self, other: &Binding) -> Binding {
        let mut out = self.clone();
        out.by_name.extend(other.by_name.clone());
        out.by_occurrence.extend(other.by_occurrence.clone());
        out
    }
}

/// A concretized schema with the schema and binding it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concretization {
    pub schema: Schema,
    pub source: Schema,
    pub binding: Binding,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum Realization {
    Port(GridAutomaton),
    Basic(BasicGridAutomaton),
}

impl Realization {
    pub fn to_schema(&self) -> Schema {
        match self {
            Realization::Port(ga) => Schema::from_automaton(ga),
            Realization::Basic(ba) => Schema::from_basic_automaton(ba),
        }
    }
}

/// One constant occurrence to replace with a variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractionItem {
    pub slot: Id,
    pub position: Position,
    pub variable: Variable,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractionSpec {
    pub items: Vec<AbstractionItem>,
}

impl AbstractionSpec {
    pub fn element(mut self, slot: &str, variable: Variable) -> Self {
        self.items.push(AbstractionItem { slot: Id::new(slot), position: Position::Element, variable });
        self
    }

    pub fn param(mut self, slot: &str, param: &str, variable: Variable) -> Self {
        self.items.push(AbstractionItem {
            slot: Id::new(slot),
            position: Position::Param(param.to_string()),
            variable,
        });
        self
    }
}

/// An abstracted schema and the binding that concretizes it back.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abstraction {
    pub schema: Schema,
    pub restoring_binding: Binding,
}

/// Narrower variable ranges and fewer options for set-valued entries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminationSpec {
    pub ranges: BTreeMap<String, Range>,
    pub owners: BTreeMap<Id, Choice<Id>>,
    pub adjacency: BTreeMap<Id, Choice<Attachment<Id>>>,
    pub external: BTreeMap<Id, Choice<ExternalTarget>>,
}

impl DeterminationSpec {
    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty() && self.owners.is_empty() && self.adjacency.is_empty() && self.external.is_empty()
    }
}

fn check_value(var: &Variable, position: &Position, value: &Value) -> Result<(), TransformError> {
    let wants_param = matches!(position, Position::Param(_));
    let is_param = matches!(value, Value::Param(_));
    if wants_param != is_param {
        return Err(TransformError::ValueKindMismatch { variable: var.name.clone(), value: value.to_string() });
    }
    if !var.range.contains(value) {
        return Err(TransformError::RangeViolation { variable: var.name.clone(), value: value.to_string() });
    }
    Ok(())
}

fn substitute(slot: &Id, element: &Element, b: &Binding) -> Result<Element, TransformError> {
    match element {
        Element::Constant(_) => Ok(element.clone()),
        Element::Variable(v) => match b.value_for(&v.name, slot, &Position::Element) {
            None => Ok(element.clone()),
            Some(value) => {
                check_value(v, &Position::Element, value)?;
                match value {
                    Value::Const(c) => Ok(Element::Constant(c.clone())),
                    Value::Param(_) => unreachable!("checked above"),
                }
            }
        },
        Element::Parameterized { kind, params } => {
            let mut out = BTreeMap::new();
            for (name, p) in params {
                let replaced = match p {
                    ParamValue::Var(v) => {
                        let position = Position::Param(name.clone());
                        match b.value_for(&v.name, slot, &position) {
                            None => p.clone(),
                            Some(value) => {
                                check_value(v, &position, value)?;
                                ParamValue::Fixed(value.to_string())
                            }
                        }
                    }
                    ParamValue::Fixed(_) => p.clone(),
                };
                out.insert(name.clone(), replaced);
            }
            Ok(Element::Parameterized { kind: kind.clone(), params: out }.normalized())
        }
    }
}

/// Replaces bound variable occurrences by constants; unbound ones are left
/// alone and the structure is unchanged.
pub fn interpret(s: &Schema, b: &Binding) -> Result<Schema, TransformError> {
    s.ensure_valid()?;
    let names: BTreeSet<String> = s.variable_multiset().entries.into_keys().collect();
    if let Some(unknown) = b.by_name.keys().find(|n| !names.contains(*n)) {
        return Err(TransformError::UnknownVariable(unknown.clone()));
    }
    for (slot, position) in b.by_occurrence.keys() {
        let (_, element) = s.slot(slot).ok_or_else(|| TransformError::UnknownSlot(slot.clone()))?;
        if !element.variables().iter().any(|(p, _)| p == position) {
            return Err(TransformError::UnknownVariable(format!("{slot}@{position:?}")));
        }
    }
    let mut out = s.clone();
    for (_, slot, element) in out.slots_mut() {
        *element = substitute(slot, element, b)?;
    }
    Ok(out)
}

pub fn concretize(s: &Schema, b: &Binding) -> Result<Concretization, TransformError> {
    Ok(Concretization { schema: interpret(s, b)?, source: s.clone(), binding: b.clone() })
}

/// Concretizes and requires the result to be a variable-free deterministic
/// automaton.
pub fn realize(s: &Schema, b: &Binding) -> Result<Realization, TransformError> {
    let c = interpret(s, b)?;
    let residual: Vec<String> = c.variable_multiset().entries.into_keys().collect();
    if !residual.is_empty() {
        return Err(TransformError::ResidualVariables(residual));
    }
    let nondeterministic: Vec<Id> = c
        .internal_assignment
        .iter()
        .filter(|(_, o)| o.len() > 1)
        .map(|(k, _)| k.clone())
        .chain(c.adjacency.iter().filter(|(_, o)| o.len() > 1).map(|(k, _)| k.clone()))
        .chain(c.external_assignment.iter().filter(|(_, o)| o.len() > 1).map(|(k, _)| k.clone()))
        .collect();
    if !nondeterministic.is_empty() {
        return Err(TransformError::ResidualNondeterminism(nondeterministic));
    }
    Ok(match c.form {
        Form::Port => Realization::Port(c.to_automaton().expect("variable-free and deterministic")),
        Form::Basic => Realization::Basic(c.to_basic_automaton().expect("variable-free and deterministic")),
    })
}

/// Replaces selected constants by variables. The returned binding restores
/// the original schema.
pub fn abstract_elements(s: &Schema, spec: &AbstractionSpec) -> Result<Abstraction, TransformError> {
    s.ensure_valid()?;
    let existing = s.variable_multiset();
    let mut introduced: BTreeMap<&str, &Range> = BTreeMap::new();
    for item in &spec.items {
        let name = item.variable.name.as_str();
        let clash = existing.entries.get(name).map(|e| &e.range).or(introduced.get(name).copied());
        if clash.is_some_and(|r| *r != item.variable.range) {
            return Err(TransformError::RangeConflict { variable: name.to_string() });
        }
        introduced.insert(name, &item.variable.range);
    }

    let mut out = s.clone();
    let mut originals: BTreeMap<String, Vec<(Id, Position, Value)>> = BTreeMap::new();
    for item in &spec.items {
        let element = out.slot_mut(&item.slot).ok_or_else(|| TransformError::UnknownSlot(item.slot.clone()))?;
        let excluded = || TransformError::RangeExcludesOriginal {
            slot: item.slot.clone(),
            variable: item.variable.name.clone(),
        };
        let original = match &item.position {
            Position::Element => {
                let c = element
                    .as_constant()
                    .ok_or_else(|| TransformError::OccurrenceNotConstant { slot: item.slot.clone() })?
                    .clone();
                if item.variable.range.is_param_range() || !item.variable.range.contains_constant(&c) {
                    return Err(excluded());
                }
                *element = Element::Variable(item.variable.clone());
                Value::Const(c)
            }
            Position::Param(param) => {
                let (kind, mut params) = match element.clone() {
                    Element::Constant(c) => {
                        (c.kind, c.params.into_iter().map(|(k, v)| (k, ParamValue::Fixed(v))).collect())
                    }
                    Element::Parameterized { kind, params } => (kind, params),
                    Element::Variable(_) => {
                        return Err(TransformError::OccurrenceNotConstant { slot: item.slot.clone() })
                    }
                };
                let Some(ParamValue::Fixed(v)) = params.get(param).cloned() else {
                    return Err(TransformError::OccurrenceNotConstant { slot: item.slot.clone() });
                };
                if !item.variable.range.contains(&Value::Param(v.clone())) {
                    return Err(excluded());
                }
                params.insert(param.clone(), ParamValue::Var(item.variable.clone()));
                *element = Element::Parameterized { kind, params };
                Value::Param(v)
            }
        };
        originals
            .entry(item.variable.name.clone())
            .or_default()
            .push((item.slot.clone(), item.position.clone(), original));
    }

    // Name-level when every new occurrence of a fresh name held the same
    // constant; per-occurrence otherwise.
    let mut restoring = Binding::new();
    for (name, occurrences) in originals {
        let uniform = occurrences.windows(2).all(|w| w[0].2 == w[1].2);
        if uniform && !existing.entries.contains_key(&name) {
            restoring.by_name.insert(name, occurrences[0].2.clone());
        } else {
            for (slot, position, value) in occurrences {
                restoring.by_occurrence.insert((slot, position), value);
            }
        }
    }
    let violations = out.validate();
    if !violations.is_empty() {
        return Err(TransformError::InvalidResult(violations));
    }
    Ok(Abstraction { schema: out, restoring_binding: restoring })
}

fn restrict_choices<T: Ord + Clone>(
    current: &mut BTreeMap<Id, Choice<T>>,
    wanted: &BTreeMap<Id, Choice<T>>,
) -> Result<(), TransformError> {
    for (id, choice) in wanted {
        let target = id.to_string();
        let existing = current.get_mut(id).ok_or_else(|| TransformError::UnknownSlot(id.clone()))?;
        if choice.is_empty() {
            return Err(TransformError::EmptyRestriction { target });
        }
        if !choice.is_subset(existing) {
            return Err(TransformError::NotASubset { target });
        }
        *existing = choice.clone();
    }
    Ok(())
}

/// Narrows variable ranges and set-valued entries. Slots and links stay.
pub fn determine(s: &Schema, spec: &DeterminationSpec) -> Result<Schema, TransformError> {
    s.ensure_valid()?;
    let multiset = s.variable_multiset();
    for (name, range) in &spec.ranges {
        let entry = multiset.entries.get(name).ok_or_else(|| TransformError::UnknownVariable(name.clone()))?;
        if range.is_empty() {
            return Err(TransformError::EmptyRestriction { target: name.clone() });
        }
        if !range.is_subset_of(&entry.range) {
            return Err(TransformError::NotASubset { target: name.clone() });
        }
    }
    let mut out = s.clone();
    for (_, _, element) in out.slots_mut() {
        match element {
            Element::Variable(v) => {
                if let Some(r) = spec.ranges.get(&v.name) {
                    v.range = r.clone();
                }
            }
            Element::Parameterized { params, .. } => {
                for p in params.values_mut() {
                    if let ParamValue::Var(v) = p {
                        if let Some(r) = spec.ranges.get(&v.name) {
                            v.range = r.clone();
                        }
                    }
                }
            }
            Element::Constant(_) => {}
        }
    }
    restrict_choices(&mut out.internal_assignment, &spec.owners)?;
    restrict_choices(&mut out.adjacency, &spec.adjacency)?;
    restrict_choices(&mut out.external_assignment, &spec.external)?;
    let violations = out.validate();
    if !violations.is_empty() {
        return Err(TransformError::InvalidResult(violations));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
