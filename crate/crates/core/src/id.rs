use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a node, port, or link slot.
///
/// Ids are plain strings compared lexicographically, so every map keyed by
/// `Id` iterates in the same order on every run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Id(String);

impl Id {
    pub fn new(s: impl Into<String>) -> Self {
        Id(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the id matches `[A-Za-z_][A-Za-z0-9_]*`.
    pub fn is_well_formed(&self) -> bool {
        is_identifier(&self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Id {
    fn from(s: &str) -> Self {
        Id(s.to_string())
    }
}

impl From<String> for Id {
    fn from(s: String) -> Self {
        Id(s)
    }
}

impl AsRef<str> for Id {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub type VertexId = Id;
pub type EdgeId = Id;

/// Returns `base` if it is not taken, otherwise the first `base_N` that is free.
pub fn fresh_id(base: &str, taken: impl Fn(&Id) -> bool) -> Id {
    let candidate = Id::new(base);
    if !taken(&candidate) {
        return candidate;
    }
    (1..)
        .map(|n| Id::new(format!("{base}_{n}")))
        .find(|id| !taken(id))
        .expect("unbounded suffix search")
}
