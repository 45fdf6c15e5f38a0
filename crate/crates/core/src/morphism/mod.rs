//! Schema morphisms: checking, composition, images, preimages, and
//! restriction.

mod search;
mod subschema;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use search::{find_homomorphisms, MorphismLevel, SearchConstraints, SEARCH_BUDGET};
pub use subschema::{
    close_schema, completeness_flags, is_subschema, subschema_check, ClosedSchema, Completeness,
    SubschemaReport,
};

use crate::automaton::ExternalTarget;
use crate::element::{Element, ParamValue, Value};
use crate::id::Id;
use crate::multigraph::Attachment;
use crate::schema::{Form, Schema, SchemaError, SlotSelection};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("map is not total: `{0}` has no image")]
    PartialMap(Id),
    #[error("`{slot}` maps to `{image}`, which is not a slot of the same sort in the codomain")]
    UnknownImage { slot: Id, image: Id },
    #[error("schema forms do not fit: {0}")]
    SchemaMismatch(String),
    #[error("morphism is not structural")]
    NotStructural,
    #[error("morphisms are not composable at `{0}`")]
    NotComposable(Id),
    #[error("not a subschema")]
    NotASubschema,
    #[error("search visited more than {limit} partial maps")]
    SearchSpaceTooLarge { limit: usize },
}

/// Slot maps of a morphism. `port_map` is empty for basic schemas and for
/// weak morphisms that ignore ports.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemaMorphism {
    pub node_map: BTreeMap<Id, Id>,
    pub link_map: BTreeMap<Id, Id>,
    pub port_map: BTreeMap<Id, Id>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismFlags {
    pub structural: bool,
    /// Node-link adjacency commutes; ports are ignored.
    pub weak: bool,
    pub typed: bool,
    pub weak_typed: bool,
    pub v_mono: bool,
    pub e_mono: bool,
    pub v_epi: bool,
    pub e_epi: bool,
}

impl MorphismFlags {
    pub fn ve_mono(&self) -> bool {
        self.v_mono && self.e_mono
    }

    pub fn ve_epi(&self) -> bool {
        self.v_epi && self.e_epi
    }
}

fn injective(m: &BTreeMap<Id, Id>) -> bool {
    m.values().collect::<BTreeSet<_>>().len() == m.len()
}

fn onto<'a>(m: &BTreeMap<Id, Id>, target: impl Iterator<Item = &'a Id>) -> bool {
    let hit: BTreeSet<&Id> = m.values().collect();
    target.into_iter().all(|t| hit.contains(t))
}

impl SchemaMorphism {
    pub fn identity(s: &Schema) -> Self {
        let same = |ids: Vec<&Id>| ids.into_iter().map(|i| (i.clone(), i.clone())).collect();
        SchemaMorphism {
            node_map: same(s.nodes.keys().collect()),
            link_map: same(s.links.keys().collect()),
            port_map: same(s.ports.keys().collect()),
        }
    }

    /// The slot-identity map of `sub` into a schema containing it.
    pub fn inclusion(sub: &Schema) -> Self {
        Self::identity(sub)
    }

    /// `self` followed by `then`.
    pub fn then(&self, then: &SchemaMorphism) -> Result<SchemaMorphism, MorphismError> {
        fn chain(a: &BTreeMap<Id, Id>, b: &BTreeMap<Id, Id>) -> Result<BTreeMap<Id, Id>, MorphismError> {
            a.iter()
                .map(|(k, v)| {
                    b.get(v).map(|w| (k.clone(), w.clone())).ok_or_else(|| MorphismError::NotComposable(v.clone()))
                })
                .collect()
        }
        Ok(SchemaMorphism {
            node_map: chain(&self.node_map, &then.node_map)?,
            link_map: chain(&self.link_map, &then.link_map)?,
            port_map: chain(&self.port_map, &then.port_map)?,
        })
    }

    /// The same maps on the slots of `sub` only.
    pub fn restrict_to(&self, sub: &SlotSelection) -> SchemaMorphism {
        let keep = |m: &BTreeMap<Id, Id>, ids: &BTreeSet<Id>| {
            m.iter().filter(|(k, _)| ids.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect()
        };
        SchemaMorphism {
            node_map: keep(&self.node_map, &sub.nodes),
            link_map: keep(&self.link_map, &sub.links),
            port_map: keep(&self.port_map, &sub.ports),
        }
    }

    fn map_target(&self, t: &ExternalTarget) -> Option<ExternalTarget> {
        Some(match t {
            ExternalTarget::Node(i) => ExternalTarget::Node(self.node_map.get(i)?.clone()),
            ExternalTarget::Port(i) => ExternalTarget::Port(self.port_map.get(i)?.clone()),
            ExternalTarget::Link(i) => ExternalTarget::Link(self.link_map.get(i)?.clone()),
        })
    }
}

/// Whether an element may be sent to another under a typed morphism.
pub fn element_maps_to(from: &Element, to: &Element) -> bool {
    match (from, to) {
        (Element::Constant(a), Element::Constant(b)) => a.kind == b.kind,
        (Element::Variable(v), Element::Constant(c)) => v.range.contains_constant(c),
        (Element::Variable(v), Element::Variable(w)) => w.range.is_subset_of(&v.range),
        (Element::Parameterized { kind, params }, Element::Constant(c)) => {
            *kind == c.kind
                && params.iter().all(|(name, p)| match (p, c.params.get(name)) {
                    (ParamValue::Fixed(x), Some(y)) => x == y,
                    (ParamValue::Var(v), Some(y)) => v.range.contains(&Value::Param(y.clone())),
                    (_, None) => false,
                })
        }
        (Element::Parameterized { kind, params }, Element::Parameterized { kind: k2, params: p2 }) => {
            kind == k2
                && params.iter().all(|(name, p)| match (p, p2.get(name)) {
                    (ParamValue::Fixed(x), Some(ParamValue::Fixed(y))) => x == y,
                    (ParamValue::Var(v), Some(ParamValue::Fixed(y))) => v.range.contains(&Value::Param(y.clone())),
                    (ParamValue::Var(v), Some(ParamValue::Var(w))) => w.range.is_subset_of(&v.range),
                    _ => false,
                })
        }
        _ => false,
    }
}

/// Precomputed views of a schema pair for repeated checks.
pub struct MorphismChecker<'a> {
    pub(crate) source: &'a Schema,
    pub(crate) target: &'a Schema,
    pub(crate) source_grid: BTreeMap<Id, BTreeSet<Attachment<Id>>>,
    pub(crate) target_grid: BTreeMap<Id, BTreeSet<Attachment<Id>>>,
}

impl<'a> MorphismChecker<'a> {
    pub fn new(source: &'a Schema, target: &'a Schema) -> Result<Self, MorphismError> {
        let source_grid = source.grid()?.edges;
        let target_grid = target.grid()?.edges;
        Ok(MorphismChecker { source, target, source_grid, target_grid })
    }

    fn ports_apply(&self) -> bool {
        self.source.form == Form::Port && self.target.form == Form::Port
    }

    fn check_domain(&self, m: &SchemaMorphism) -> Result<(), MorphismError> {
        fn total(
            m: &BTreeMap<Id, Id>,
            domain: impl Iterator<Item = Id>,
            codomain: impl Fn(&Id) -> bool,
        ) -> Result<(), MorphismError> {
            let domain: BTreeSet<Id> = domain.collect();
            for d in &domain {
                let image = m.get(d).ok_or_else(|| MorphismError::PartialMap(d.clone()))?;
                if !codomain(image) {
                    return Err(MorphismError::UnknownImage { slot: d.clone(), image: image.clone() });
                }
            }
            if let Some(extra) = m.keys().find(|k| !domain.contains(*k)) {
                return Err(MorphismError::UnknownImage { slot: extra.clone(), image: m[extra].clone() });
            }
            Ok(())
        }
        let (s, t) = (self.source, self.target);
        total(&m.node_map, s.nodes.keys().cloned(), |i| t.nodes.contains_key(i))?;
        total(&m.link_map, s.links.keys().cloned(), |i| t.links.contains_key(i))?;
        if !m.port_map.is_empty() {
            if !self.ports_apply() {
                return Err(MorphismError::SchemaMismatch("port map given for a schema without ports".into()));
            }
            total(&m.port_map, s.ports.keys().cloned(), |i| t.ports.contains_key(i))?;
        }
        Ok(())
    }

    /// Lifted node-level adjacency commutes for link `l`.
    pub(crate) fn weak_link_ok(&self, m: &SchemaMorphism, l: &Id) -> bool {
        let Some(image) = m.link_map.get(l) else { return false };
        let target = &self.target_grid[image];
        self.source_grid[l].iter().all(|a| match a.try_map(|n| m.node_map.get(n).cloned().ok_or(())) {
            Ok(mapped) => target.contains(&mapped),
            Err(()) => false,
        })
    }

    /// Port shape and owner assignment commute for port `p`.
    pub(crate) fn port_ok(&self, m: &SchemaMorphism, p: &Id) -> bool {
        let (s, t) = (self.source, self.target);
        let Some(q) = m.port_map.get(p) else { return false };
        let (sp, tp) = (&s.ports[p], &t.ports[q]);
        if sp.direction != tp.direction || sp.locus != tp.locus {
            return false;
        }
        if let Some(owners) = s.internal_assignment.get(p) {
            let Some(target_owners) = t.internal_assignment.get(q) else { return false };
            if !owners.iter().all(|n| m.node_map.get(n).is_some_and(|i| target_owners.contains(i))) {
                return false;
            }
        }
        true
    }

    /// Port-level adjacency commutes for link `l`. Needs every port mapped.
    pub(crate) fn port_link_ok(&self, m: &SchemaMorphism, l: &Id) -> bool {
        let Some(image) = m.link_map.get(l) else { return false };
        let target = &self.target.adjacency[image];
        self.source.adjacency[l].iter().all(|a| match a.try_map(|p| m.port_map.get(p).cloned().ok_or(())) {
            Ok(mapped) => target.contains(&mapped),
            Err(()) => false,
        })
    }

    fn external_ok(&self, m: &SchemaMorphism) -> bool {
        self.source.external_assignment.iter().all(|(p, targets)| {
            let Some(q) = m.port_map.get(p) else { return false };
            let Some(image_targets) = self.target.external_assignment.get(q) else { return false };
            targets.iter().all(|t| m.map_target(t).is_some_and(|i| image_targets.contains(&i)))
        })
    }

    pub(crate) fn node_typed(&self, m: &SchemaMorphism, n: &Id) -> bool {
        m.node_map.get(n).is_some_and(|i| element_maps_to(&self.source.nodes[n], &self.target.nodes[i]))
    }

    pub(crate) fn link_typed(&self, m: &SchemaMorphism, l: &Id) -> bool {
        m.link_map.get(l).is_some_and(|i| {
            let (a, b) = (&self.source.links[l], &self.target.links[i]);
            a.class == b.class && element_maps_to(&a.element, &b.element)
        })
    }

    pub(crate) fn port_typed(&self, m: &SchemaMorphism, p: &Id) -> bool {
        m.port_map.get(p).is_some_and(|i| element_maps_to(&self.source.ports[p].element, &self.target.ports[i].element))
    }

    pub fn check(&self, m: &SchemaMorphism) -> Result<MorphismFlags, MorphismError> {
        self.check_domain(m)?;
        let (s, t) = (self.source, self.target);
        let weak = s.links.keys().all(|l| self.weak_link_ok(m, l));
        let structural = weak
            && match (s.form, t.form) {
                (Form::Basic, Form::Basic) => true,
                (Form::Port, Form::Port) => {
                    (s.ports.is_empty() || !m.port_map.is_empty())
                        && s.ports.keys().all(|p| self.port_ok(m, p))
                        && s.links.keys().all(|l| self.port_link_ok(m, l))
                        && self.external_ok(m)
                }
                _ => false,
            };
        let weak_typed = weak
            && s.nodes.keys().all(|n| self.node_typed(m, n))
            && s.links.keys().all(|l| self.link_typed(m, l));
        let typed = structural && weak_typed && m.port_map.keys().all(|p| self.port_typed(m, p));
        Ok(MorphismFlags {
            structural,
            weak,
            typed,
            weak_typed,
            v_mono: injective(&m.node_map),
            e_mono: injective(&m.link_map),
            v_epi: onto(&m.node_map, t.nodes.keys()),
            e_epi: onto(&m.link_map, t.links.keys()),
        })
    }
}

/// Classifies `m` as a morphism from `s` to `t`.
pub fn check_morphism(s: &Schema, t: &Schema, m: &SchemaMorphism) -> Result<MorphismFlags, MorphismError> {
    MorphismChecker::new(s, t)?.check(m)
}

/// The image of a structural morphism with its factorization: an epi onto
/// the image followed by the inclusion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    pub schema: Schema,
    pub epi: SchemaMorphism,
    pub inclusion: SchemaMorphism,
}

pub fn image(s: &Schema, t: &Schema, m: &SchemaMorphism) -> Result<Image, MorphismError> {
    let flags = check_morphism(s, t, m)?;
    if !flags.structural {
        return Err(MorphismError::NotStructural);
    }
    let selection = SlotSelection {
        nodes: m.node_map.values().cloned().collect(),
        ports: m.port_map.values().cloned().collect(),
        links: m.link_map.values().cloned().collect(),
    };
    let mut schema = t.restrict(&selection);
    schema.header.name = format!("{}_image", t.header.name);
    let inclusion = SchemaMorphism::inclusion(&schema);
    Ok(Image { schema, epi: m.clone(), inclusion })
}

/// The largest subschema of `s` mapped into the subschema `q` of `t`.
pub fn preimage(s: &Schema, t: &Schema, m: &SchemaMorphism, q: &Schema) -> Result<Schema, MorphismError> {
    if !check_morphism(s, t, m)?.structural {
        return Err(MorphismError::NotStructural);
    }
    if !is_subschema(q, t) {
        return Err(MorphismError::NotASubschema);
    }
    let within = |map: &BTreeMap<Id, Id>, keep: &dyn Fn(&Id) -> bool| -> BTreeSet<Id> {
        map.iter().filter(|(_, v)| keep(v)).map(|(k, _)| k.clone()).collect()
    };
    let selection = SlotSelection {
        nodes: within(&m.node_map, &|v| q.nodes.contains_key(v)),
        ports: within(&m.port_map, &|v| q.ports.contains_key(v)),
        links: within(&m.link_map, &|v| q.links.contains_key(v)),
    };
    let mut out = s.restrict(&selection);
    out.header.name = format!("{}_preimage", s.header.name);
    Ok(out)
}

/// The restriction of `m` to a subschema `q` of its domain `s`.
pub fn restrict_morphism(s: &Schema, m: &SchemaMorphism, q: &Schema) -> Result<SchemaMorphism, MorphismError> {
    if !is_subschema(q, s) {
        return Err(MorphismError::NotASubschema);
    }
    Ok(m.restrict_to(&SlotSelection::of(q)))
}

/// Composition of two checked morphisms `f: a → b` and `g: b → c`.
pub fn compose(f: &SchemaMorphism, g: &SchemaMorphism) -> Result<SchemaMorphism, MorphismError> {
    f.then(g)
}
