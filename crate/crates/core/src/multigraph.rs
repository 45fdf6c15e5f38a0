//! Generalized oriented multigraphs: edges may hang off a single vertex by
//! their beginning or by their end.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::id::{EdgeId, Id, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    DanglingEdge { edge: EdgeId, vertex: VertexId },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(VertexId),
    #[error("morphism is not defined on `{0}`")]
    PartialMap(Id),
    #[error("search space of {size} candidate maps exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
}

/// How an edge is attached: at both ends, or only at its beginning or end.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attachment<T> {
    Closed { begin: T, end: T },
    BeginOnly(T),
    EndOnly(T),
}

/// Shape of an attachment with the endpoints erased.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttachmentShape {
    Closed,
    BeginOnly,
    EndOnly,
}

impl<T> Attachment<T> {
    pub fn closed(begin: T, end: T) -> Self {
        Attachment::Closed { begin, end }
    }

    pub fn shape(&self) -> AttachmentShape {
        match self {
            Attachment::Closed { .. } => AttachmentShape::Closed,
            Attachment::BeginOnly(_) => AttachmentShape::BeginOnly,
            Attachment::EndOnly(_) => AttachmentShape::EndOnly,
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Attachment::Closed { .. })
    }

    pub fn begin(&self) -> Option<&T> {
        match self {
            Attachment::Closed { begin, .. } | Attachment::BeginOnly(begin) => Some(begin),
            Attachment::EndOnly(_) => None,
        }
    }

    pub fn end(&self) -> Option<&T> {
        match self {
            Attachment::Closed { end, .. } | Attachment::EndOnly(end) => Some(end),
            Attachment::BeginOnly(_) => None,
        }
    }

    /// Endpoints in (begin, end) order.
    pub fn endpoints(&self) -> impl Iterator<Item = &T> {
        self.begin().into_iter().chain(self.end())
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Attachment<U> {
        match self {
            Attachment::Closed { begin, end } => Attachment::Closed { begin: f(begin), end: f(end) },
            Attachment::BeginOnly(b) => Attachment::BeginOnly(f(b)),
            Attachment::EndOnly(e) => Attachment::EndOnly(f(e)),
        }
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<Attachment<U>, E> {
        Ok(match self {
            Attachment::Closed { begin, end } => Attachment::Closed { begin: f(begin)?, end: f(end)? },
            Attachment::BeginOnly(b) => Attachment::BeginOnly(f(b)?),
            Attachment::EndOnly(e) => Attachment::EndOnly(f(e)?),
        })
    }
}

impl<T: Clone> Attachment<T> {
    /// Drops the endpoints not accepted by `keep`. Returns `None` when no
    /// endpoint survives.
    pub fn restrict(&self, keep: impl Fn(&T) -> bool) -> Option<Attachment<T>> {
        let b = self.begin().filter(|b| keep(b)).cloned();
        let e = self.end().filter(|e| keep(e)).cloned();
        match (b, e) {
            (Some(begin), Some(end)) => Some(Attachment::Closed { begin, end }),
            (Some(b), None) => Some(Attachment::BeginOnly(b)),
            (None, Some(e)) => Some(Attachment::EndOnly(e)),
            (None, None) => None,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Attachment<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attachment::Closed { begin, end } => write!(f, "from {begin} to {end}"),
            Attachment::BeginOnly(b) => write!(f, "from {b}"),
            Attachment::EndOnly(e) => write!(f, "to {e}"),
        }
    }
}

/// A generalized oriented multigraph. The edge map is the incidence function.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizedMultigraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, Attachment<VertexId>>,
}

impl GeneralizedMultigraph {
    pub fn new(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (EdgeId, Attachment<VertexId>)>,
    ) -> Result<Self, GraphError> {
        let vertices: BTreeSet<VertexId> = vertices.into_iter().collect();
        let edges: BTreeMap<EdgeId, Attachment<VertexId>> = edges.into_iter().collect();
        for (e, a) in &edges {
            if let Some(v) = a.endpoints().find(|v| !vertices.contains(*v)) {
                return Err(GraphError::DanglingEdge { edge: e.clone(), vertex: v.clone() });
            }
        }
        Ok(GeneralizedMultigraph { vertices, edges })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeMap<EdgeId, Attachment<VertexId>> {
        &self.edges
    }

    pub fn attachment(&self, e: &EdgeId) -> Option<&Attachment<VertexId>> {
        self.edges.get(e)
    }

    /// Every edge is attached at both ends.
    pub fn is_conventional(&self) -> bool {
        self.edges.values().all(Attachment::is_closed)
    }

    /// The incidence function is injective: no two edges share an attachment.
    pub fn is_simple(&self) -> bool {
        let distinct: BTreeSet<_> = self.edges.values().collect();
        distinct.len() == self.edges.len()
    }

    /// `(begin_open, end_open)`: edges attached only by their beginning, and
    /// edges attached only by their end.
    pub fn open_edges(&self) -> (BTreeSet<EdgeId>, BTreeSet<EdgeId>) {
        let mut begin_open = BTreeSet::new();
        let mut end_open = BTreeSet::new();
        for (e, a) in &self.edges {
            match a {
                Attachment::BeginOnly(_) => {
                    begin_open.insert(e.clone());
                }
                Attachment::EndOnly(_) => {
                    end_open.insert(e.clone());
                }
                Attachment::Closed { .. } => {}
            }
        }
        (begin_open, end_open)
    }

    /// Weakly connected components, each sorted, listed by least vertex.
    /// Open edges touch one vertex and join nothing.
    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let mut neighbours: BTreeMap<&VertexId, Vec<&VertexId>> =
            self.vertices.iter().map(|v| (v, Vec::new())).collect();
        for a in self.edges.values() {
            if let Attachment::Closed { begin, end } = a {
                neighbours.get_mut(begin).expect("validated").push(end);
                neighbours.get_mut(end).expect("validated").push(begin);
            }
        }
        let mut seen: BTreeSet<&VertexId> = BTreeSet::new();
        let mut out = Vec::new();
        for start in &self.vertices {
            if !seen.insert(start) {
                continue;
            }
            let mut component = BTreeSet::from([start.clone()]);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &neighbours[v] {
                    if seen.insert(w) {
                        component.insert(w.clone());
                        queue.push_back(w);
                    }
                }
            }
            out.push(component);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// `(fan_in, fan_out)`: edges whose end, resp. beginning, attaches to `v`.
    pub fn fan_degrees(&self, v: &VertexId) -> Result<(usize, usize), GraphError> {
        if !self.vertices.contains(v) {
            return Err(GraphError::UnknownVertex(v.clone()));
        }
        let fan_in = self.edges.values().filter(|a| a.end() == Some(v)).count();
        let fan_out = self.edges.values().filter(|a| a.begin() == Some(v)).count();
        Ok((fan_in, fan_out))
    }

    /// `self` is a sub-multigraph of `other` on the same identifiers.
    pub fn is_submultigraph_of(&self, other: &GeneralizedMultigraph) -> bool {
        self.vertices.is_subset(&other.vertices)
            && self.edges.iter().all(|(e, a)| other.edges.get(e) == Some(a))
    }
}

/// Vertex and edge maps between two generalized multigraphs.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphMorphism {
    pub vertex_map: BTreeMap<VertexId, VertexId>,
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
}

impl GraphMorphism {
    pub fn identity(g: &GeneralizedMultigraph) -> Self {
        GraphMorphism {
            vertex_map: g.vertices.iter().map(|v| (v.clone(), v.clone())).collect(),
            edge_map: g.edges.keys().map(|e| (e.clone(), e.clone())).collect(),
        }
    }

    /// `then ∘ self`. Entries whose image is missing from `then` are dropped.
    pub fn then(&self, then: &GraphMorphism) -> GraphMorphism {
        GraphMorphism {
            vertex_map: self
                .vertex_map
                .iter()
                .filter_map(|(a, b)| then.vertex_map.get(b).map(|c| (a.clone(), c.clone())))
                .collect(),
            edge_map: self
                .edge_map
                .iter()
                .filter_map(|(a, b)| then.edge_map.get(b).map(|c| (a.clone(), c.clone())))
                .collect(),
        }
    }

    pub fn is_vertex_injective(&self) -> bool {
        let image: BTreeSet<_> = self.vertex_map.values().collect();
        image.len() == self.vertex_map.len()
    }

    pub fn is_edge_injective(&self) -> bool {
        let image: BTreeSet<_> = self.edge_map.values().collect();
        image.len() == self.edge_map.len()
    }

    pub fn is_edge_surjective_onto(&self, h: &GeneralizedMultigraph) -> bool {
        let image: BTreeSet<_> = self.edge_map.values().collect();
        h.edges.keys().all(|e| image.contains(e))
    }
}

/// Checks that `m` maps `g` into `h` preserving every attachment case and
/// endpoint.
pub fn check_graph_morphism(
    g: &GeneralizedMultigraph,
    h: &GeneralizedMultigraph,
    m: &GraphMorphism,
) -> Result<bool, GraphError> {
    if let Some(v) = g.vertices.iter().find(|v| !m.vertex_map.contains_key(*v)) {
        return Err(GraphError::PartialMap(v.clone()));
    }
    if let Some(e) = g.edges.keys().find(|e| !m.edge_map.contains_key(*e)) {
        return Err(GraphError::PartialMap(e.clone()));
    }
    if !m.vertex_map.values().all(|v| h.vertices.contains(v)) {
        return Ok(false);
    }
    Ok(g.edges.iter().all(|(e, a)| {
        let image = a.map(|v| m.vertex_map[v].clone());
        h.edges.get(&m.edge_map[e]) == Some(&image)
    }))
}

/// Upper bound on `|V(h)|^|V(g)| · |E(h)|^|E(g)|` accepted by
/// [`enumerate_graph_morphisms`].
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Every morphism `g → h`, ordered lexicographically by vertex map, then by
/// edge map. Exhaustive; meant for small graphs and as a test oracle.
pub fn enumerate_graph_morphisms(
    g: &GeneralizedMultigraph,
    h: &GeneralizedMultigraph,
) -> Result<Vec<GraphMorphism>, GraphError> {
    let size = (h.vertices.len() as u128)
        .saturating_pow(g.vertices.len() as u32)
        .saturating_mul((h.edges.len() as u128).saturating_pow(g.edges.len() as u32));
    if size > ENUMERATION_LIMIT {
        return Err(GraphError::SearchSpaceTooLarge { size, limit: ENUMERATION_LIMIT });
    }
    let gv: Vec<&VertexId> = g.vertices.iter().collect();
    let hv: Vec<&VertexId> = h.vertices.iter().collect();
    let mut out = Vec::new();
    if !gv.is_empty() && hv.is_empty() {
        return Ok(out);
    }
    let mut digits = vec![0usize; gv.len()];
    loop {
        let vertex_map: BTreeMap<VertexId, VertexId> =
            gv.iter().zip(&digits).map(|(v, &d)| ((*v).clone(), hv[d].clone())).collect();
        // candidate images per edge under this vertex map
        let per_edge: Option<Vec<(EdgeId, Vec<EdgeId>)>> = g
            .edges
            .iter()
            .map(|(e, a)| {
                let image = a.map(|v| vertex_map[v].clone());
                let cands: Vec<EdgeId> =
                    h.edges.iter().filter(|(_, b)| **b == image).map(|(f, _)| f.clone()).collect();
                (!cands.is_empty()).then(|| (e.clone(), cands))
            })
            .collect();
        if let Some(per_edge) = per_edge {
            let mut idx = vec![0usize; per_edge.len()];
            loop {
                let edge_map = per_edge
                    .iter()
                    .zip(&idx)
                    .map(|((e, c), &i)| (e.clone(), c[i].clone()))
                    .collect();
                out.push(GraphMorphism { vertex_map: vertex_map.clone(), edge_map });
                if !odometer(&mut idx, |k| per_edge[k].1.len()) {
                    break;
                }
            }
        }
        if !odometer(&mut digits, |_| hv.len()) {
            break;
        }
    }
    Ok(out)
}

/// Advances a little-endian-at-the-back counter; false once it wraps.
fn odometer(digits: &mut [usize], base: impl Fn(usize) -> usize) -> bool {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < base(k) {
            return true;
        }
        digits[k] = 0;
    }
    false
}

/// A multigraph whose incidence function is set-valued: each edge carries
/// the nonempty set of attachments it may take.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMultigraph {
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeMap<EdgeId, BTreeSet<Attachment<VertexId>>>,
}

impl VariableMultigraph {
    pub fn is_deterministic(&self) -> bool {
        self.edges.values().all(|s| s.len() == 1)
    }

    /// The ordinary multigraph when every edge has exactly one attachment.
    pub fn to_deterministic(&self) -> Option<GeneralizedMultigraph> {
        if !self.is_deterministic() {
            return None;
        }
        Some(GeneralizedMultigraph {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|(e, s)| (e.clone(), s.iter().next().expect("singleton").clone()))
                .collect(),
        })
    }

    pub fn from_deterministic(g: &GeneralizedMultigraph) -> Self {
        VariableMultigraph {
            vertices: g.vertices.clone(),
            edges: g.edges.iter().map(|(e, a)| (e.clone(), BTreeSet::from([a.clone()]))).collect(),
        }
    }

    /// Shapes each edge may take.
    pub fn edge_shapes(&self) -> BTreeMap<&EdgeId, BTreeSet<AttachmentShape>> {
        self.edges.iter().map(|(e, s)| (e, s.iter().map(Attachment::shape).collect())).collect()
    }
}

/// Set-valued commutation: the image of each edge's attachment set must be
/// contained in the target edge's attachment set.
pub fn check_variable_graph_morphism(
    g: &VariableMultigraph,
    h: &VariableMultigraph,
    m: &GraphMorphism,
) -> Result<bool, GraphError> {
    if let Some(v) = g.vertices.iter().find(|v| !m.vertex_map.contains_key(*v)) {
        return Err(GraphError::PartialMap(v.clone()));
    }
    if let Some(e) = g.edges.keys().find(|e| !m.edge_map.contains_key(*e)) {
        return Err(GraphError::PartialMap(e.clone()));
    }
    if !m.vertex_map.values().all(|v| h.vertices.contains(v)) {
        return Ok(false);
    }
    Ok(g.edges.iter().all(|(e, options)| {
        let Some(target) = h.edges.get(&m.edge_map[e]) else { return false };
        options.iter().all(|a| target.contains(&a.map(|v| m.vertex_map[v].clone())))
    }))
}
