//! A deterministic discrete-time simulator for grid automata.
//!
//! Every cycle first delivers the messages queued for it, then lets each
//! node (in id order) perform at most one elementary operation. Messages
//! emitted in cycle `c` arrive in cycle `c + 1`.

mod behavior;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use behavior::{FiniteAutomatonSpec, NodeBehavior, OutputMode, Transition};

use crate::automaton::{
    validate_grid_automaton, AutomatonError, Channel, Direction, ExternalTarget, GridAutomaton, Header, Link,
    LinkClass, Locus, Port,
};
use crate::id::Id;
use crate::kind::Constant;
use crate::multigraph::Attachment;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("node `{0}` has no behavior")]
    MissingBehavior(Id),
    #[error("behavior `{behavior}` does not fit the kind of node `{node}`")]
    BehaviorKindMismatch { node: Id, behavior: String },
    #[error("behavior of node `{node}` is malformed: {reason}")]
    InvalidBehavior { node: Id, reason: String },
    #[error("behavior given for unknown node `{0}`")]
    UnknownNode(Id),
    #[error("input target `{0}` is not an inlet of the automaton")]
    UnknownInputTarget(Id),
    #[error("payload does not fit the class of link `{0}`")]
    PayloadClassMismatch(Id),
    #[error("first automaton emits symbols the second does not read: {0}")]
    AlphabetMismatch(String),
}

/// What travels along a link: words on information links, signal levels on
/// control and process links.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payload {
    Data(String),
    Signal(u32),
}

impl Payload {
    fn fits(&self, class: LinkClass) -> bool {
        matches!(
            (self, class),
            (Payload::Data(_), LinkClass::Information)
                | (Payload::Signal(_), LinkClass::Control | LinkClass::Process)
        )
    }

    fn level(&self) -> u32 {
        match self {
            Payload::Data(_) => 1,
            Payload::Signal(l) => *l,
        }
    }
}

/// A payload presented to the automaton from outside in a given cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalInput {
    pub cycle: u64,
    /// An external inlet port, an end-open link, an internal inlet port, or
    /// a node.
    pub target: Id,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub cycle: u64,
    pub node: Id,
    pub event: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub via: Option<Id>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<LinkClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

/// A payload leaving the automaton through a begin-open link or an
/// external outlet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub cycle: u64,
    pub node: Id,
    pub via: Id,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Delivery {
    node: Id,
    via: Id,
    class: LinkClass,
    payload: Payload,
}

#[derive(Clone, Debug, Default)]
struct NodeState {
    data: VecDeque<String>,
    control_tokens: u32,
    signals: Vec<(u64, u32)>,
    items: VecDeque<Payload>,
    fa_state: String,
    word: Option<(Vec<char>, usize, String)>,
    open: bool,
}

/// Where a node's emissions go.
#[derive(Clone, Debug, Default)]
struct Wiring {
    /// Outgoing links by node, in link id order.
    out_links: BTreeMap<Id, Vec<(Id, LinkClass, Option<Id>)>>,
    /// External outlets fed by each node.
    out_external: BTreeMap<Id, Vec<Id>>,
    /// Nodes that wait for a control token per word.
    controlled: BTreeSet<Id>,
}

pub struct Instance {
    automaton: GridAutomaton,
    behaviors: BTreeMap<Id, NodeBehavior>,
    wiring: Wiring,
    states: BTreeMap<Id, NodeState>,
    clock: u64,
    queue: BTreeMap<(u64, Id, u64), Delivery>,
    sequence: u64,
    trace: Vec<TraceRecord>,
    outputs: Vec<OutputRecord>,
}

/// The trace and outputs of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub trace: Vec<TraceRecord>,
    pub outputs: Vec<OutputRecord>,
    pub cycles: u64,
}

impl RunResult {
    /// One JSON object per line.
    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace records serialize") + "\n")
            .collect()
    }

    /// Data words that left the automaton, in order.
    pub fn output_words(&self) -> Vec<String> {
        self.outputs
            .iter()
            .filter_map(|o| match &o.payload {
                Payload::Data(w) => Some(w.clone()),
                Payload::Signal(_) => None,
            })
            .collect()
    }
}

fn wire(ga: &GridAutomaton) -> Wiring {
    let mut w = Wiring::default();
    for (l, a) in &ga.adjacency {
        let class = ga.links[l].class;
        let end_owner = a.end().map(|p| ga.internal_assignment[p].clone());
        if let Some(b) = a.begin() {
            let owner = ga.internal_assignment[b].clone();
            w.out_links.entry(owner).or_default().push((l.clone(), class, end_owner.clone()));
        }
        if class != LinkClass::Information {
            if let Some(n) = end_owner {
                w.controlled.insert(n);
            }
        }
    }
    for (x, port) in ga.external_ports() {
        if port.direction != Direction::Outlet {
            continue;
        }
        let node = match ga.external_assignment.get(x) {
            Some(ExternalTarget::Node(n)) => Some(n.clone()),
            Some(ExternalTarget::Port(p)) => ga.internal_assignment.get(p).cloned(),
            Some(ExternalTarget::Link(l)) => ga.adjacency[l].begin().map(|p| ga.internal_assignment[p].clone()),
            None => None,
        };
        if let Some(n) = node {
            w.out_external.entry(n).or_default().push(x.clone());
        }
    }
    w
}

/// Prepares a realized automaton to run with one behavior per node.
pub fn instantiate(ga: &GridAutomaton, behaviors: &BTreeMap<Id, NodeBehavior>) -> Result<Instance, EngineError> {
    let violations = validate_grid_automaton(ga);
    if !violations.is_empty() {
        return Err(AutomatonError::Invalid(violations).into());
    }
    if let Some(extra) = behaviors.keys().find(|n| !ga.nodes.contains_key(*n)) {
        return Err(EngineError::UnknownNode(extra.clone()));
    }
    let mut states = BTreeMap::new();
    for (n, kind) in &ga.nodes {
        let b = behaviors.get(n).ok_or_else(|| EngineError::MissingBehavior(n.clone()))?;
        if !b.fits_kind(&kind.kind) {
            return Err(EngineError::BehaviorKindMismatch { node: n.clone(), behavior: b.name().into() });
        }
        if let Some(reason) = b.problems().into_iter().next() {
            return Err(EngineError::InvalidBehavior { node: n.clone(), reason });
        }
        let mut st = NodeState::default();
        match b {
            NodeBehavior::FiniteAutomaton(spec) => st.fa_state = spec.initial.clone(),
            NodeBehavior::Gate { open, .. } => st.open = *open,
            _ => {}
        }
        states.insert(n.clone(), st);
    }
    Ok(Instance {
        automaton: ga.clone(),
        behaviors: behaviors.clone(),
        wiring: wire(ga),
        states,
        clock: 0,
        queue: BTreeMap::new(),
        sequence: 0,
        trace: Vec::new(),
        outputs: Vec::new(),
    })
}

impl Instance {
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn outputs(&self) -> &[OutputRecord] {
        &self.outputs
    }

    /// Whether the gate at `node` is open.
    pub fn is_open(&self, node: &Id) -> Option<bool> {
        match self.behaviors.get(node)? {
            NodeBehavior::Gate { .. } => Some(self.states[node].open),
            _ => None,
        }
    }

    fn record(&mut self, node: &Id, event: &str) -> &mut TraceRecord {
        self.trace.push(TraceRecord {
            cycle: self.clock,
            node: node.clone(),
            event: event.to_string(),
            via: None,
            class: None,
            payload: None,
            state: None,
        });
        self.trace.last_mut().expect("just pushed")
    }

    fn enqueue(&mut self, cycle: u64, d: Delivery) {
        self.sequence += 1;
        self.queue.insert((cycle, d.via.clone(), self.sequence), d);
    }

    /// Resolves an outside input to the node it reaches.
    fn route_input(&self, input: &ExternalInput) -> Result<Delivery, EngineError> {
        let ga = &self.automaton;
        let t = &input.target;
        let default_class = match input.payload {
            Payload::Data(_) => LinkClass::Information,
            Payload::Signal(_) => LinkClass::Control,
        };
        let to = |node: Id, class: LinkClass| Delivery { node, via: t.clone(), class, payload: input.payload.clone() };
        if ga.nodes.contains_key(t) {
            return Ok(to(t.clone(), default_class));
        }
        if let Some(port) = ga.ports.get(t) {
            if port.direction != Direction::Inlet {
                return Err(EngineError::UnknownInputTarget(t.clone()));
            }
            let node = match port.locus {
                Locus::Internal => Some(ga.internal_assignment[t].clone()),
                Locus::External => match ga.external_assignment.get(t) {
                    Some(ExternalTarget::Node(n)) => Some(n.clone()),
                    Some(ExternalTarget::Port(p)) => ga.internal_assignment.get(p).cloned(),
                    Some(ExternalTarget::Link(l)) => ga.adjacency[l].end().map(|p| ga.internal_assignment[p].clone()),
                    None => None,
                },
            };
            return node.map(|n| to(n, default_class)).ok_or_else(|| EngineError::UnknownInputTarget(t.clone()));
        }
        if let Some(Attachment::EndOnly(p)) = ga.adjacency.get(t) {
            let class = ga.links[t].class;
            if !input.payload.fits(class) {
                return Err(EngineError::PayloadClassMismatch(t.clone()));
            }
            return Ok(to(ga.internal_assignment[p].clone(), class));
        }
        Err(EngineError::UnknownInputTarget(t.clone()))
    }

    /// Queues an outside input for its cycle.
    pub fn feed(&mut self, input: &ExternalInput) -> Result<(), EngineError> {
        let d = self.route_input(input)?;
        let cycle = input.cycle.max(self.clock);
        self.enqueue(cycle, d);
        Ok(())
    }

    fn emit(&mut self, node: &Id, payload: Payload) {
        let links = self.wiring.out_links.get(node).cloned().unwrap_or_default();
        let mut sent = false;
        for (l, class, end) in links {
            if !payload.fits(class) {
                continue;
            }
            sent = true;
            match end {
                Some(target) => {
                    let cycle = self.clock + 1;
                    self.enqueue(cycle, Delivery { node: target, via: l.clone(), class, payload: payload.clone() });
                }
                None => self.outputs.push(OutputRecord {
                    cycle: self.clock,
                    node: node.clone(),
                    via: l.clone(),
                    payload: payload.clone(),
                }),
            }
            let r = self.record(node, "emit");
            r.via = Some(l);
            r.class = Some(class);
            r.payload = Some(payload.clone());
        }
        if matches!(payload, Payload::Data(_)) {
            for x in self.wiring.out_external.get(node).cloned().unwrap_or_default() {
                sent = true;
                self.outputs.push(OutputRecord {
                    cycle: self.clock,
                    node: node.clone(),
                    via: x.clone(),
                    payload: payload.clone(),
                });
                let r = self.record(node, "emit");
                r.via = Some(x);
                r.payload = Some(payload.clone());
            }
        }
        if !sent && matches!(payload, Payload::Data(_)) {
            let r = self.record(node, "drop");
            r.payload = Some(payload);
        }
    }

    fn deliver(&mut self, d: Delivery) {
        {
            let r = self.record(&d.node, "deliver");
            r.via = Some(d.via.clone());
            r.class = Some(d.class);
            r.payload = Some(d.payload.clone());
        }
        let behavior = self.behaviors[&d.node].clone();
        let clock = self.clock;
        let st = self.states.get_mut(&d.node).expect("every node has state");
        match behavior {
            NodeBehavior::FiniteAutomaton(_) => match (&d.payload, d.class) {
                (Payload::Data(w), _) => st.data.push_back(w.clone()),
                (Payload::Signal(_), _) => st.control_tokens += 1,
            },
            NodeBehavior::ThresholdUnit { .. } => st.signals.push((clock, d.payload.level())),
            NodeBehavior::Gate { opening_links, .. } => {
                if opening_links.contains(&d.via) {
                    if !st.open {
                        st.open = true;
                        self.record(&d.node, "open");
                    }
                } else if let Payload::Data(w) = d.payload {
                    st.data.push_back(w);
                }
            }
            NodeBehavior::Buffer => st.items.push_back(d.payload),
            NodeBehavior::Stub => {
                self.record(&d.node, "absorb");
            }
        }
    }

    fn enabled(&self, node: &Id) -> bool {
        let st = &self.states[node];
        match &self.behaviors[node] {
            NodeBehavior::FiniteAutomaton(_) => {
                st.word.is_some()
                    || (!st.data.is_empty() && (!self.wiring.controlled.contains(node) || st.control_tokens > 0))
            }
            NodeBehavior::Gate { .. } => st.open && !st.data.is_empty(),
            NodeBehavior::Buffer => !st.items.is_empty(),
            NodeBehavior::ThresholdUnit { .. } | NodeBehavior::Stub => false,
        }
    }

    fn operate(&mut self, node: &Id) {
        let behavior = self.behaviors[node].clone();
        match behavior {
            NodeBehavior::FiniteAutomaton(spec) => self.operate_fa(node, &spec),
            NodeBehavior::ThresholdUnit { threshold, window, amplitude } => {
                let clock = self.clock;
                let st = self.states.get_mut(node).expect("state");
                st.signals.retain(|(c, _)| c + u64::from(window) > clock);
                let level: u64 = st.signals.iter().map(|(_, l)| u64::from(*l)).sum();
                if level >= u64::from(threshold) {
                    st.signals.clear();
                    let r = self.record(node, "fire");
                    r.payload = Some(Payload::Signal(level.min(u64::from(u32::MAX)) as u32));
                    self.emit(node, Payload::Signal(amplitude));
                    self.emit(node, Payload::Data("1".into()));
                }
            }
            NodeBehavior::Gate { .. } => {
                if !self.enabled(node) {
                    return;
                }
                let w = self.states.get_mut(node).expect("state").data.pop_front().expect("enabled");
                let r = self.record(node, "release");
                r.payload = Some(Payload::Data(w.clone()));
                self.emit(node, Payload::Data(w));
                self.emit(node, Payload::Signal(1));
            }
            NodeBehavior::Buffer => {
                let Some(item) = self.states.get_mut(node).expect("state").items.pop_front() else { return };
                self.emit(node, item);
            }
            NodeBehavior::Stub => {}
        }
    }

    fn operate_fa(&mut self, node: &Id, spec: &FiniteAutomatonSpec) {
        if !self.enabled(node) {
            return;
        }
        let controlled = self.wiring.controlled.contains(node);
        let st = self.states.get_mut(node).expect("state");
        if st.word.is_none() {
            let w = st.data.pop_front().expect("enabled");
            if controlled {
                st.control_tokens -= 1;
            }
            st.word = Some((w.chars().collect(), 0, String::new()));
            let r = self.record(node, "start");
            r.payload = Some(Payload::Data(w));
        }
        let st = self.states.get_mut(node).expect("state");
        let (word, pos, out) = st.word.clone().expect("word in progress");
        if pos < word.len() {
            let symbol = word[pos];
            let table = spec.table();
            match table.get(&(st.fa_state.as_str(), symbol)).map(|(to, e)| (to.to_string(), e.to_string())) {
                Some((to, emitted)) => {
                    st.fa_state = to;
                    let out = out + &emitted;
                    st.word = Some((word.clone(), pos + 1, out));
                    let state = st.fa_state.clone();
                    let r = self.record(node, "consume");
                    r.payload = Some(Payload::Data(symbol.to_string()));
                    r.state = Some(state);
                }
                None => {
                    st.word = None;
                    st.fa_state = spec.initial.clone();
                    let r = self.record(node, "reject");
                    r.payload = Some(Payload::Data(symbol.to_string()));
                    return;
                }
            }
        }
        let st = self.states.get_mut(node).expect("state");
        let (word, pos, out) = st.word.clone().expect("word in progress");
        if pos == word.len() {
            let accepted = spec.finals.contains(&st.fa_state);
            st.word = None;
            st.fa_state = spec.initial.clone();
            let result = match spec.mode {
                OutputMode::Transduce => out,
                OutputMode::Accept => if accepted { "1" } else { "0" }.to_string(),
            };
            let r = self.record(node, "complete");
            r.payload = Some(Payload::Data(result.clone()));
            self.emit(node, Payload::Data(result));
            self.emit(node, Payload::Signal(1));
        }
    }

    /// No queued deliveries and no node able to act.
    pub fn is_quiescent(&self) -> bool {
        self.queue.is_empty() && !self.behaviors.keys().any(|n| self.enabled(n))
    }

    /// Runs one cycle and returns the trace records it produced.
    pub fn step(&mut self) -> &[TraceRecord] {
        let start = self.trace.len();
        let due: Vec<(u64, Id, u64)> = self.queue.range(..(self.clock + 1, Id::new(""), 0)).map(|(k, _)| k.clone()).collect();
        for k in due {
            let d = self.queue.remove(&k).expect("present");
            self.deliver(d);
        }
        let nodes: Vec<Id> = self.behaviors.keys().cloned().collect();
        for n in &nodes {
            self.operate(n);
        }
        self.clock += 1;
        &self.trace[start..]
    }

    /// Steps until quiescence or until `max_cycles` cycles have run.
    pub fn run(&mut self, inputs: &[ExternalInput], max_cycles: u64) -> Result<RunResult, EngineError> {
        for i in inputs {
            self.feed(i)?;
        }
        let first = self.clock;
        while self.clock - first < max_cycles && !self.is_quiescent() {
            self.step();
        }
        Ok(RunResult { trace: self.trace.clone(), outputs: self.outputs.clone(), cycles: self.clock - first })
    }
}

/// Instantiates and runs in one go.
pub fn run(
    ga: &GridAutomaton,
    behaviors: &BTreeMap<Id, NodeBehavior>,
    inputs: &[ExternalInput],
    max_cycles: u64,
) -> Result<RunResult, EngineError> {
    instantiate(ga, behaviors)?.run(inputs, max_cycles)
}

/// Two finite automata in sequence: `a`'s result goes to `b` over an
/// information link and a control link hands control to `b`. External
/// inlet `x_in` feeds `a`; external outlet `x_out` carries `b`'s result.
pub fn sequential_composition(
    a: &FiniteAutomatonSpec,
    b: &FiniteAutomatonSpec,
) -> Result<(GridAutomaton, BTreeMap<Id, NodeBehavior>), EngineError> {
    let missing: String = a.output_alphabet().difference(&b.alphabet).collect();
    if !missing.is_empty() {
        return Err(EngineError::AlphabetMismatch(missing));
    }
    let id = Id::new;
    let fa = Constant::of("automaton/finite_automaton");
    let port = |direction, locus| Port { direction, locus, kind: Constant::of("port") };
    let mut ga = GridAutomaton { header: Header::named("sequential_composition"), ..Default::default() };
    ga.nodes.insert(id("a"), fa.clone());
    ga.nodes.insert(id("b"), fa);
    for (p, d, owner) in [
        ("a_in", Direction::Inlet, "a"),
        ("a_out", Direction::Outlet, "a"),
        ("a_ctl", Direction::Outlet, "a"),
        ("b_in", Direction::Inlet, "b"),
        ("b_ctl_in", Direction::Inlet, "b"),
        ("b_out", Direction::Outlet, "b"),
    ] {
        ga.ports.insert(id(p), port(d, Locus::Internal));
        ga.internal_assignment.insert(id(p), id(owner));
    }
    ga.ports.insert(id("x_in"), port(Direction::Inlet, Locus::External));
    ga.ports.insert(id("x_out"), port(Direction::Outlet, Locus::External));
    ga.external_assignment.insert(id("x_in"), ExternalTarget::Port(id("a_in")));
    ga.external_assignment.insert(id("x_out"), ExternalTarget::Port(id("b_out")));
    let link = |class| Link { class, channel: Channel::Simple, kind: Constant::of("link") };
    ga.links.insert(id("result"), link(LinkClass::Information));
    ga.links.insert(id("control"), link(LinkClass::Control));
    ga.adjacency.insert(id("result"), Attachment::closed(id("a_out"), id("b_in")));
    ga.adjacency.insert(id("control"), Attachment::closed(id("a_ctl"), id("b_ctl_in")));
    let behaviors = BTreeMap::from([
        (id("a"), NodeBehavior::FiniteAutomaton(a.clone())),
        (id("b"), NodeBehavior::FiniteAutomaton(b.clone())),
    ]);
    Ok((ga, behaviors))
}
