//! Backtracking search for schema morphisms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{MorphismChecker, MorphismError, SchemaMorphism};
use crate::id::Id;
use crate::schema::{Form, Schema};

/// Partial maps the search may visit before giving up.
pub const SEARCH_BUDGET: usize = 5_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphismLevel {
    /// Nodes and links only.
    #[default]
    Weak,
    /// Nodes, links, and ports.
    Structural,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConstraints {
    pub level: MorphismLevel,
    pub typed: bool,
    /// Injective on nodes, links, and mapped ports.
    pub mono: bool,
    /// Onto nodes and links.
    pub epi: bool,
    /// Stop after this many results.
    pub limit: Option<usize>,
}

struct Search<'a> {
    checker: MorphismChecker<'a>,
    constraints: SearchConstraints,
    nodes: Vec<Id>,
    links: Vec<Id>,
    ports: Vec<Id>,
    node_candidates: Vec<Vec<Id>>,
    link_candidates: Vec<Vec<Id>>,
    port_candidates: Vec<Vec<Id>>,
    /// Links whose ports are all mapped once the port at this index is.
    links_closed_at: Vec<Vec<Id>>,
    fan_prune: bool,
    source_fans: BTreeMap<Id, (usize, usize)>,
    target_fans: BTreeMap<Id, (usize, usize)>,
    current: SchemaMorphism,
    used_nodes: BTreeSet<Id>,
    used_links: BTreeSet<Id>,
    used_ports: BTreeSet<Id>,
    visited: usize,
    found: Vec<SchemaMorphism>,
}

fn ranked(s: &Schema, ids: impl Iterator<Item = Id>) -> Vec<Id> {
    let mut v: Vec<(String, Id)> = ids.map(|i| (s.slot(&i).map(|(_, e)| e.sort_key()).unwrap_or_default(), i)).collect();
    v.sort();
    v.into_iter().map(|(_, i)| i).collect()
}

fn fans(grid: &BTreeMap<Id, BTreeSet<crate::multigraph::Attachment<Id>>>) -> BTreeMap<Id, (usize, usize)> {
    let mut out: BTreeMap<Id, (usize, usize)> = BTreeMap::new();
    for options in grid.values() {
        if let Some(a) = options.iter().next() {
            if let Some(e) = a.end() {
                out.entry(e.clone()).or_default().0 += 1;
            }
            if let Some(b) = a.begin() {
                out.entry(b.clone()).or_default().1 += 1;
            }
        }
    }
    out
}

impl<'a> Search<'a> {
    fn tick(&mut self) -> Result<(), MorphismError> {
        self.visited += 1;
        if self.visited > SEARCH_BUDGET {
            return Err(MorphismError::SearchSpaceTooLarge { limit: SEARCH_BUDGET });
        }
        Ok(())
    }

    fn done(&self) -> bool {
        self.constraints.limit.is_some_and(|l| self.found.len() >= l)
    }

    fn nodes_from(&mut self, i: usize) -> Result<(), MorphismError> {
        if i == self.nodes.len() {
            return self.links_from(0);
        }
        let n = self.nodes[i].clone();
        for c in self.node_candidates[i].clone() {
            if self.done() {
                return Ok(());
            }
            self.tick()?;
            if self.constraints.mono && self.used_nodes.contains(&c) {
                continue;
            }
            if self.fan_prune {
                let (si, so) = self.source_fans.get(&n).copied().unwrap_or_default();
                let (ti, to) = self.target_fans.get(&c).copied().unwrap_or_default();
                if si > ti || so > to {
                    continue;
                }
            }
            self.current.node_map.insert(n.clone(), c.clone());
            if self.constraints.typed && !self.checker.node_typed(&self.current, &n) {
                continue;
            }
            self.used_nodes.insert(c.clone());
            self.nodes_from(i + 1)?;
            self.used_nodes.remove(&c);
        }
        self.current.node_map.remove(&n);
        Ok(())
    }

    fn links_from(&mut self, i: usize) -> Result<(), MorphismError> {
        if i == self.links.len() {
            return self.ports_from(0);
        }
        let l = self.links[i].clone();
        for c in self.link_candidates[i].clone() {
            if self.done() {
                return Ok(());
            }
            self.tick()?;
            if self.constraints.mono && self.used_links.contains(&c) {
                continue;
            }
            self.current.link_map.insert(l.clone(), c.clone());
            if !self.checker.weak_link_ok(&self.current, &l)
                || (self.constraints.typed && !self.checker.link_typed(&self.current, &l))
            {
                continue;
            }
            self.used_links.insert(c.clone());
            self.links_from(i + 1)?;
            self.used_links.remove(&c);
        }
        self.current.link_map.remove(&l);
        Ok(())
    }

    fn ports_from(&mut self, i: usize) -> Result<(), MorphismError> {
        if i == self.ports.len() {
            return self.leaf();
        }
        let p = self.ports[i].clone();
        for c in self.port_candidates[i].clone() {
            if self.done() {
                return Ok(());
            }
            self.tick()?;
            if self.constraints.mono && self.used_ports.contains(&c) {
                continue;
            }
            self.current.port_map.insert(p.clone(), c.clone());
            if !self.checker.port_ok(&self.current, &p)
                || (self.constraints.typed && !self.checker.port_typed(&self.current, &p))
                || !self.links_closed_at[i].iter().all(|l| self.checker.port_link_ok(&self.current, l))
            {
                continue;
            }
            self.used_ports.insert(c.clone());
            self.ports_from(i + 1)?;
            self.used_ports.remove(&c);
        }
        self.current.port_map.remove(&p);
        Ok(())
    }

    fn leaf(&mut self) -> Result<(), MorphismError> {
        let flags = self.checker.check(&self.current)?;
        let k = self.constraints;
        let level_ok = match k.level {
            MorphismLevel::Weak => flags.weak && (!k.typed || flags.weak_typed),
            MorphismLevel::Structural => flags.structural && (!k.typed || flags.typed),
        };
        let ports_injective =
            self.current.port_map.values().collect::<BTreeSet<_>>().len() == self.current.port_map.len();
        let mono_ok = !k.mono || (flags.ve_mono() && ports_injective);
        let epi_ok = !k.epi || flags.ve_epi();
        if level_ok && mono_ok && epi_ok {
            self.found.push(self.current.clone());
        }
        Ok(())
    }
}

/// Every morphism from `s` to `t` meeting `constraints`, in search order:
/// slots of `s` by id, candidates in `t` by element kind then id.
pub fn find_homomorphisms(
    s: &Schema,
    t: &Schema,
    constraints: SearchConstraints,
) -> Result<Vec<SchemaMorphism>, MorphismError> {
    let checker = MorphismChecker::new(s, t)?;
    let structural = constraints.level == MorphismLevel::Structural;
    if structural && s.form != t.form {
        return Ok(Vec::new());
    }
    let map_ports = structural && s.form == Form::Port;

    let nodes: Vec<Id> = s.nodes.keys().cloned().collect();
    let links: Vec<Id> = s.links.keys().cloned().collect();
    let ports: Vec<Id> = if map_ports { s.ports.keys().cloned().collect() } else { Vec::new() };
    let node_candidates = vec![ranked(t, t.nodes.keys().cloned()); nodes.len()];
    let link_candidates = links
        .iter()
        .map(|l| {
            let class = s.links[l].class;
            ranked(t, t.links.iter().filter(|(_, x)| x.class == class || !constraints.typed).map(|(i, _)| i.clone()))
        })
        .collect();
    let port_candidates = ports
        .iter()
        .map(|p| {
            let sp = &s.ports[p];
            ranked(
                t,
                t.ports
                    .iter()
                    .filter(|(_, q)| q.direction == sp.direction && q.locus == sp.locus)
                    .map(|(i, _)| i.clone()),
            )
        })
        .collect();
    let index: BTreeMap<&Id, usize> = ports.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut links_closed_at = vec![Vec::new(); ports.len()];
    if map_ports {
        for (l, options) in &s.adjacency {
            let last = options.iter().flat_map(|a| a.endpoints()).filter_map(|p| index.get(p)).max();
            if let Some(&i) = last {
                links_closed_at[i].push(l.clone());
            }
        }
    }
    let deterministic = |g: &BTreeMap<Id, BTreeSet<_>>| g.values().all(|o: &BTreeSet<_>| o.len() == 1);
    let fan_prune =
        constraints.mono && deterministic(&checker.source_grid) && deterministic(&checker.target_grid);
    let source_fans = fans(&checker.source_grid);
    let target_fans = fans(&checker.target_grid);

    let mut search = Search {
        checker,
        constraints,
        nodes,
        links,
        ports,
        node_candidates,
        link_candidates,
        port_candidates,
        links_closed_at,
        fan_prune,
        source_fans,
        target_fans,
        current: SchemaMorphism::default(),
        used_nodes: BTreeSet::new(),
        used_links: BTreeSet::new(),
        used_ports: BTreeSet::new(),
        visited: 0,
        found: Vec::new(),
    };
    search.nodes_from(0)?;
    Ok(search.found)
}
