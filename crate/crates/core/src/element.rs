//! Schema elements: constants, variables with ranges, and parameterized
//! constants whose parameters may be variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kind::{Constant, KindPath, KindUniverse, Sort};

/// The range of a variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Range {
    /// Every kind at or below one of the listed paths.
    Kinds(BTreeSet<KindPath>),
    /// Every element of a sort.
    Universal(Sort),
    /// Parameter values.
    Values(BTreeSet<String>),
}

/// A value a variable can be bound to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Const(Constant),
    Param(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(c) => write!(f, "{c}"),
            Value::Param(p) => f.write_str(p),
        }
    }
}

impl Range {
    pub fn kinds<'a>(paths: impl IntoIterator<Item = &'a str>) -> Range {
        Range::Kinds(paths.into_iter().map(|p| p.parse().expect("well-formed kind path")).collect())
    }

    pub fn values<'a>(values: impl IntoIterator<Item = &'a str>) -> Range {
        Range::Values(values.into_iter().map(str::to_string).collect())
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Range::Kinds(k) => k.is_empty(),
            Range::Universal(_) => false,
            Range::Values(v) => v.is_empty(),
        }
    }

    /// Ranges over parameter values take `Value::Param`; all others take
    /// constants.
    pub fn is_param_range(&self) -> bool {
        matches!(self, Range::Values(_))
    }

    pub fn contains_constant(&self, c: &Constant) -> bool {
        match self {
            Range::Kinds(ks) => ks.iter().any(|k| c.kind.is_within(k)),
            Range::Universal(_) => true,
            Range::Values(_) => false,
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Range::Values(vs), Value::Param(p)) => vs.contains(p),
            (_, Value::Const(c)) => self.contains_constant(c),
            _ => false,
        }
    }

    pub fn is_subset_of(&self, other: &Range) -> bool {
        match (self, other) {
            (Range::Kinds(a), Range::Kinds(b)) => a.iter().all(|k| b.iter().any(|kb| k.is_within(kb))),
            (Range::Kinds(_), Range::Universal(_)) => true,
            (Range::Universal(s), Range::Universal(t)) => s == t,
            (Range::Values(a), Range::Values(b)) => a.is_subset(b),
            _ => false,
        }
    }

    /// Finite member set over a registered universe. Listed kinds are always
    /// members; registered kinds of `sort` below them are added.
    pub fn members(&self, universe: &KindUniverse, sort: Sort) -> BTreeSet<Value> {
        match self {
            Range::Kinds(ks) => ks
                .iter()
                .cloned()
                .chain(universe.kinds(sort).filter(|u| ks.iter().any(|k| u.is_within(k))).cloned())
                .map(|k| Value::Const(Constant::new(k)))
                .collect(),
            Range::Universal(s) => {
                universe.kinds(*s).map(|k| Value::Const(Constant::new(k.clone()))).collect()
            }
            Range::Values(vs) => vs.iter().cloned().map(Value::Param).collect(),
        }
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Range::Kinds(ks) => {
                let body: Vec<String> = ks.iter().map(ToString::to_string).collect();
                write!(f, "{{{}}}", body.join(","))
            }
            Range::Universal(_) => f.write_str("*"),
            Range::Values(vs) => {
                let body: Vec<&str> = vs.iter().map(String::as_str).collect();
                write!(f, "values {{{}}}", body.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub range: Range,
}

impl Variable {
    pub fn new(name: impl Into<String>, range: Range) -> Self {
        Variable { name: name.into(), range }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamValue {
    Fixed(String),
    Var(Variable),
}

/// Where a variable sits inside one slot: the element itself, or one of its
/// parameters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Element,
    Param(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Constant(Constant),
    Variable(Variable),
    /// A constant kind with at least one variable parameter.
    Parameterized { kind: KindPath, params: BTreeMap<String, ParamValue> },
}

impl Element {
    pub fn constant(path: &str) -> Self {
        Element::Constant(Constant::of(path))
    }

    pub fn variable(name: &str, range: Range) -> Self {
        Element::Variable(Variable::new(name, range))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Element::Constant(_))
    }

    pub fn as_constant(&self) -> Option<&Constant> {
        match self {
            Element::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// Variables carried by this element with their positions.
    pub fn variables(&self) -> Vec<(Position, &Variable)> {
        match self {
            Element::Constant(_) => Vec::new(),
            Element::Variable(v) => vec![(Position::Element, v)],
            Element::Parameterized { params, .. } => params
                .iter()
                .filter_map(|(name, p)| match p {
                    ParamValue::Var(v) => Some((Position::Param(name.clone()), v)),
                    ParamValue::Fixed(_) => None,
                })
                .collect(),
        }
    }

    /// Turns a parameterized element with no variable parameters left into a
    /// plain constant.
    pub fn normalized(self) -> Element {
        match self {
            Element::Parameterized { kind, params }
                if params.values().all(|p| matches!(p, ParamValue::Fixed(_))) =>
            {
                Element::Constant(Constant {
                    kind,
                    params: params
                        .into_iter()
                        .map(|(k, p)| match p {
                            ParamValue::Fixed(v) => (k, v),
                            ParamValue::Var(_) => unreachable!(),
                        })
                        .collect(),
                })
            }
            other => other,
        }
    }

    /// The kind path this element is committed to, if any.
    pub fn kind(&self) -> Option<&KindPath> {
        match self {
            Element::Constant(c) => Some(&c.kind),
            Element::Parameterized { kind, .. } => Some(kind),
            Element::Variable(_) => None,
        }
    }

    /// Ordering key used to rank search candidates.
    pub fn sort_key(&self) -> String {
        match self {
            Element::Constant(c) => c.kind.to_string(),
            Element::Parameterized { kind, .. } => kind.to_string(),
            Element::Variable(v) => format!("~{}", v.name),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Constant(c) => write!(f, "const {c}"),
            Element::Variable(v) => write!(f, "var {} range {}", v.name, v.range),
            Element::Parameterized { kind, params } => {
                write!(f, "param {kind} with ")?;
                let parts: Vec<String> = params
                    .iter()
                    .map(|(k, p)| match p {
                        ParamValue::Fixed(v) => format!("{k}={v}"),
                        ParamValue::Var(v) => format!("{k}={} {}", v.name, v.range),
                    })
                    .collect();
                f.write_str(&parts.join(", "))
            }
        }
    }
}

/// A nonempty set of admissible values of a (possibly nondeterministic)
/// assignment or adjacency entry. A singleton is a deterministic entry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Choice<T: Ord>(BTreeSet<T>);

impl<T: Ord> Choice<T> {
    pub fn single(value: T) -> Self {
        Choice(BTreeSet::from([value]))
    }

    pub fn from_set(set: BTreeSet<T>) -> Self {
        Choice(set)
    }

    pub fn options(&self) -> &BTreeSet<T> {
        &self.0
    }

    pub fn into_options(self) -> BTreeSet<T> {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn as_single(&self) -> Option<&T> {
        if self.0.len() == 1 {
            self.0.iter().next()
        } else {
            None
        }
    }

    pub fn contains(&self, v: &T) -> bool {
        self.0.contains(v)
    }

    pub fn is_subset(&self, other: &Choice<T>) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.0.iter()
    }
}

impl<T: Ord> FromIterator<T> for Choice<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Choice(iter.into_iter().collect())
    }
}
