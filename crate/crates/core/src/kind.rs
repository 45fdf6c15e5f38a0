//! Node, port and link kinds: taxonomy paths, constants, and the registered
//! universe that finite range enumeration runs over.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::id::is_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KindError {
    #[error("empty kind path")]
    Empty,
    #[error("invalid kind tag `{0}`")]
    BadTag(String),
    #[error("line {line}: {message}")]
    Registration { line: usize, message: String },
}

/// A kind as a path through the type hierarchy, most general tag first,
/// e.g. `automaton/turing_machine/one_tape`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct KindPath(Vec<String>);

fn is_tag(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl KindPath {
    pub fn new<I, S>(tags: I) -> Result<Self, KindError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tags: Vec<String> = tags.into_iter().map(Into::into).collect();
        if tags.is_empty() {
            return Err(KindError::Empty);
        }
        if let Some(bad) = tags.iter().find(|t| !is_tag(t)) {
            return Err(KindError::BadTag(bad.clone()));
        }
        Ok(KindPath(tags))
    }

    pub fn tags(&self) -> &[String] {
        &self.0
    }

    pub fn leaf(&self) -> &str {
        self.0.last().expect("kind paths are nonempty")
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.0.iter().any(|t| t == tag)
    }

    /// `self` equals `ancestor` or lies below it in the hierarchy.
    pub fn is_within(&self, ancestor: &KindPath) -> bool {
        self.0.len() >= ancestor.0.len() && self.0[..ancestor.0.len()] == ancestor.0[..]
    }
}

impl FromStr for KindPath {
    type Err = KindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KindPath::new(s.split('/'))
    }
}

impl TryFrom<String> for KindPath {
    type Error = KindError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<KindPath> for String {
    fn from(k: KindPath) -> String {
        k.to_string()
    }
}

impl fmt::Display for KindPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

/// The three element sorts of a schema.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Node,
    Port,
    Link,
}

impl Sort {
    pub fn as_str(self) -> &'static str {
        match self {
            Sort::Node => "node",
            Sort::Port => "port",
            Sort::Link => "link",
        }
    }
}

impl FromStr for Sort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node" => Ok(Sort::Node),
            "port" => Ok(Sort::Port),
            "link" => Ok(Sort::Link),
            other => Err(format!("unknown sort `{other}`")),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A constant element: a kind plus fixed parameter values
/// (`automaton/turing_machine[tapes=2]`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Constant {
    pub kind: KindPath,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl Constant {
    pub fn new(kind: KindPath) -> Self {
        Constant { kind, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(name.into(), value.into());
        self
    }

    /// Shorthand used by fixtures and tests. Panics on a malformed path.
    pub fn of(path: &str) -> Self {
        Constant::new(path.parse().expect("well-formed kind path"))
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.params.is_empty() {
            let body: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "[{}]", body.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for Constant {
    type Err = KindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, rest) = match s.find('[') {
            Some(i) => (&s[..i], Some(&s[i..])),
            None => (s, None),
        };
        let mut c = Constant::new(path.parse()?);
        if let Some(rest) = rest {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| KindError::BadTag(rest.to_string()))?;
            for pair in inner.split(',').filter(|p| !p.is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| KindError::BadTag(pair.to_string()))?;
                if !is_identifier(k) || !is_tag(v) {
                    return Err(KindError::BadTag(pair.to_string()));
                }
                c.params.insert(k.to_string(), v.to_string());
            }
        }
        Ok(c)
    }
}

/// The finite set of kinds registered for one run, per sort. Variable ranges
/// are enumerated against it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindUniverse {
    kinds: BTreeMap<Sort, BTreeSet<KindPath>>,
}

impl KindUniverse {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, sort: Sort, kind: KindPath) {
        self.kinds.entry(sort).or_default().insert(kind);
    }

    pub fn with(mut self, sort: Sort, kinds: &[&str]) -> Self {
        for k in kinds {
            self.register(sort, k.parse().expect("well-formed kind path"));
        }
        self
    }

    pub fn kinds(&self, sort: Sort) -> impl Iterator<Item = &KindPath> {
        self.kinds.get(&sort).into_iter().flatten()
    }

    pub fn contains(&self, sort: Sort, kind: &KindPath) -> bool {
        self.kinds.get(&sort).is_some_and(|s| s.contains(kind))
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.values().all(BTreeSet::is_empty)
    }

    pub fn entries(&self) -> impl Iterator<Item = (Sort, &KindPath)> {
        self.kinds.iter().flat_map(|(s, ks)| ks.iter().map(move |k| (*s, k)))
    }

    pub fn merge(&mut self, other: &KindUniverse) {
        for (sort, kind) in other.entries() {
            self.register(sort, kind.clone());
        }
    }

    /// Parses a registration file: one `SORT KINDPATH` pair per line,
    /// `#` starts a comment.
    pub fn parse_registration(text: &str) -> Result<Self, KindError> {
        let mut universe = KindUniverse::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let (Some(sort), Some(path), None) = (words.next(), words.next(), words.next()) else {
                return Err(KindError::Registration {
                    line: i + 1,
                    message: "expected `SORT KINDPATH`".into(),
                });
            };
            let sort: Sort = sort
                .parse()
                .map_err(|message| KindError::Registration { line: i + 1, message })?;
            let kind: KindPath = path.parse().map_err(|e: KindError| KindError::Registration {
                line: i + 1,
                message: e.to_string(),
            })?;
            universe.register(sort, kind);
        }
        Ok(universe)
    }
}
