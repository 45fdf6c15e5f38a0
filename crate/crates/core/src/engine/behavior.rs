//! What a node does when it runs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::kind::KindPath;

/// Whether a finite automaton translates words or only judges them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// Emits the concatenated transition outputs.
    #[default]
    Transduce,
    /// Emits `1` when the word ends in a final state and `0` otherwise.
    Accept,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub input: char,
    pub to: String,
    #[serde(default)]
    pub output: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteAutomatonSpec {
    pub states: BTreeSet<String>,
    pub alphabet: BTreeSet<char>,
    pub transitions: Vec<Transition>,
    pub initial: String,
    #[serde(default)]
    pub finals: BTreeSet<String>,
    #[serde(default)]
    pub mode: OutputMode,
}

impl FiniteAutomatonSpec {
    /// A one-state transducer applying `f` to each symbol.
    pub fn symbolwise(alphabet: &[char], f: impl Fn(char) -> String) -> Self {
        FiniteAutomatonSpec {
            states: BTreeSet::from(["q".to_string()]),
            alphabet: alphabet.iter().copied().collect(),
            transitions: alphabet
                .iter()
                .map(|&c| Transition { from: "q".into(), input: c, to: "q".into(), output: f(c) })
                .collect(),
            initial: "q".into(),
            finals: BTreeSet::from(["q".to_string()]),
            mode: OutputMode::Transduce,
        }
    }

    pub fn table(&self) -> BTreeMap<(&str, char), (&str, &str)> {
        self.transitions
            .iter()
            .map(|t| ((t.from.as_str(), t.input), (t.to.as_str(), t.output.as_str())))
            .collect()
    }

    /// Symbols the automaton can emit.
    pub fn output_alphabet(&self) -> BTreeSet<char> {
        match self.mode {
            OutputMode::Transduce => self.transitions.iter().flat_map(|t| t.output.chars()).collect(),
            OutputMode::Accept => BTreeSet::from(['0', '1']),
        }
    }

    /// Problems with the table: unknown states, missing or duplicate
    /// entries.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.states.contains(&self.initial) {
            out.push(format!("initial state `{}` is not declared", self.initial));
        }
        for f in &self.finals {
            if !self.states.contains(f) {
                out.push(format!("final state `{f}` is not declared"));
            }
        }
        let mut seen = BTreeSet::new();
        for t in &self.transitions {
            if !self.states.contains(&t.from) || !self.states.contains(&t.to) {
                out.push(format!("transition {} -{}-> {} uses an undeclared state", t.from, t.input, t.to));
            }
            if !self.alphabet.contains(&t.input) {
                out.push(format!("transition on `{}` outside the alphabet", t.input));
            }
            if !seen.insert((t.from.clone(), t.input)) {
                out.push(format!("two transitions from `{}` on `{}`", t.from, t.input));
            }
        }
        for s in &self.states {
            for &c in &self.alphabet {
                if !seen.contains(&(s.clone(), c)) {
                    out.push(format!("no transition from `{s}` on `{c}`"));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeBehavior {
    FiniteAutomaton(FiniteAutomatonSpec),
    /// Fires once the signal levels received within the last `window`
    /// cycles add up to `threshold`.
    ThresholdUnit { threshold: u32, window: u32, amplitude: u32 },
    /// Holds incoming words while closed; any delivery over one of
    /// `opening_links` opens it for good.
    Gate {
        opening_links: BTreeSet<crate::id::Id>,
        #[serde(default)]
        open: bool,
    },
    /// Forwards what it receives, one item per cycle.
    Buffer,
    /// Absorbs everything.
    Stub,
}

impl NodeBehavior {
    pub fn name(&self) -> &'static str {
        match self {
            NodeBehavior::FiniteAutomaton(_) => "finite_automaton",
            NodeBehavior::ThresholdUnit { .. } => "threshold_unit",
            NodeBehavior::Gate { .. } => "gate",
            NodeBehavior::Buffer => "buffer",
            NodeBehavior::Stub => "stub",
        }
    }

    /// Whether a node of `kind` can run this behavior.
    pub fn fits_kind(&self, kind: &KindPath) -> bool {
        match self {
            NodeBehavior::FiniteAutomaton(_) | NodeBehavior::Gate { .. } => kind.has_tag("finite_automaton"),
            NodeBehavior::ThresholdUnit { .. } => {
                ["neuron", "neural_network", "threshold_unit"].iter().any(|t| kind.has_tag(t))
            }
            NodeBehavior::Buffer | NodeBehavior::Stub => true,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        match self {
            NodeBehavior::FiniteAutomaton(spec) => spec.problems(),
            NodeBehavior::ThresholdUnit { threshold, window, .. } => {
                let mut out = Vec::new();
                if *threshold < 1 {
                    out.push("threshold must be at least 1".to_string());
                }
                if *window < 1 {
                    out.push("window must be at least 1".to_string());
                }
                out
            }
            _ => Vec::new(),
        }
    }
}
