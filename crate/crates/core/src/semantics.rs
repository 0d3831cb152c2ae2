//! Synchronous and asynchronous update, explicit state graphs, attractors
//! and reachability.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GlobalState, Mvn, StateSpace};
use crate::scc;

/// Largest state space that will be materialized.
pub const MAX_STATES: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Sync,
    Async,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Sync => "sync",
            Semantics::Async => "async",
        })
    }
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sync" | "syn" => Ok(Semantics::Sync),
            "async" | "asy" => Ok(Semantics::Async),
            other => Err(format!("unknown semantics `{other}` (expected sync or async)")),
        }
    }
}

/// Every entity updated simultaneously from `state`.
pub fn sync_step(model: &Mvn, state: &GlobalState) -> GlobalState {
    GlobalState::new((0..model.entity_count()).map(|i| model.next_level(i, state)).collect())
}

/// Single-entity updates of `state` that change it. Input entities never move.
pub fn async_next(model: &Mvn, state: &GlobalState) -> BTreeSet<GlobalState> {
    (0..model.entity_count())
        .filter(|&i| !model.is_input_entity(i))
        .filter_map(|i| {
            let next = model.next_level(i, state);
            (next != state.level(i)).then(|| state.with_level(i, next))
        })
        .collect()
}

/// The full state space with the edges of one update semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    semantics: Semantics,
    space: StateSpace,
    succ: Vec<Vec<u32>>,
}

pub fn build_state_graph(model: &Mvn, semantics: Semantics) -> Result<StateGraph> {
    StateGraph::build(model, semantics)
}

impl StateGraph {
    pub fn build(model: &Mvn, semantics: Semantics) -> Result<Self> {
        model.ensure_valid()?;
        let size = model.state_space_size();
        if size > MAX_STATES {
            return Err(Error::StateSpaceTooLarge {
                size,
                limit: MAX_STATES,
            });
        }
        let space = model.state_space();
        let succ: Vec<Vec<u32>> = (0..space.size())
            .into_par_iter()
            .map(|i| {
                let state = space.state(i);
                let mut out: Vec<u32> = match semantics {
                    Semantics::Sync => vec![index_u32(&space, &sync_step(model, &state))],
                    Semantics::Async => async_next(model, &state).iter().map(|s| index_u32(&space, s)).collect(),
                };
                out.sort_unstable();
                out
            })
            .collect();
        Ok(StateGraph { semantics, space, succ })
    }

    /// Graph over `space` with explicit successor lists (sorted and deduplicated here).
    pub fn from_edges(semantics: Semantics, space: StateSpace, mut succ: Vec<Vec<u32>>) -> Self {
        assert_eq!(succ.len(), space.size(), "one successor list per state");
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        StateGraph { semantics, space, succ }
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn node_count(&self) -> usize {
        self.succ.len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, node: usize) -> &[u32] {
        &self.succ[node]
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.succ
    }

    pub fn state(&self, node: usize) -> GlobalState {
        self.space.state(node)
    }

    pub fn index_of(&self, state: &GlobalState) -> Option<usize> {
        self.space.index(state)
    }

    fn require(&self, state: &GlobalState) -> Result<usize> {
        self.index_of(state)
            .ok_or_else(|| Error::StateOutOfSpace(state.to_string()))
    }

    /// Edges in lexicographic (source, target) order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j as usize)))
    }

    pub fn edge_states(&self) -> Vec<(GlobalState, GlobalState)> {
        self.edges().map(|(a, b)| (self.state(a), self.state(b))).collect()
    }

    pub fn successor_states(&self, state: &GlobalState) -> Result<Vec<GlobalState>> {
        let i = self.require(state)?;
        Ok(self.succ[i].iter().map(|&j| self.state(j as usize)).collect())
    }

    pub fn sccs(&self) -> Vec<Vec<usize>> {
        scc::tarjan(&self.succ)
    }

    /// Nodes reachable from `from` (including itself).
    pub fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.succ[v] {
                let w = w as usize;
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Shortest path from `from` to `to`, endpoints included; `[from]` when equal.
    pub fn reachable(&self, from: &GlobalState, to: &GlobalState) -> Result<Option<Vec<GlobalState>>> {
        let (a, b) = (self.require(from)?, self.require(to)?);
        Ok(self.path(a, b).map(|p| p.into_iter().map(|i| self.state(i)).collect()))
    }

    /// Index-level shortest path, BFS.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; self.node_count()];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &w in &self.succ[v] {
                let w = w as usize;
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    pub fn attractors(&self) -> AttractorSet {
        let mut attractors = Vec::new();
        for component in self.sccs() {
            let has_cycle = component.len() > 1 || self.succ[component[0]].contains(&(component[0] as u32));
            let kind = match self.semantics {
                Semantics::Sync if !has_cycle => continue,
                Semantics::Sync if component.len() == 1 => AttractorKind::Point,
                Semantics::Sync => AttractorKind::Cycle,
                Semantics::Async if component.len() == 1 && self.succ[component[0]].is_empty() => AttractorKind::Point,
                Semantics::Async if component.len() > 1 => AttractorKind::Scc,
                Semantics::Async => continue,
            };
            let members: BTreeSet<usize> = component.iter().copied().collect();
            let exits: Vec<(GlobalState, GlobalState)> = component
                .iter()
                .flat_map(|&v| self.succ[v].iter().map(move |&w| (v, w as usize)))
                .filter(|(_, w)| !members.contains(w))
                .map(|(v, w)| (self.state(v), self.state(w)))
                .collect();
            attractors.push(Attractor {
                kind,
                states: component.iter().map(|&i| self.state(i)).collect(),
                terminal: exits.is_empty(),
                exits,
            });
        }
        attractors.sort_by(|a, b| a.states[0].cmp(&b.states[0]));
        AttractorSet {
            semantics: self.semantics,
            attractors,
        }
    }
}

fn index_u32(space: &StateSpace, state: &GlobalState) -> u32 {
    space.index(state).expect("successor lies in the state space") as u32
}

pub fn attractors(graph: &StateGraph) -> AttractorSet {
    graph.attractors()
}

pub fn reachable(graph: &StateGraph, from: &GlobalState, to: &GlobalState) -> Result<Option<Vec<GlobalState>>> {
    graph.reachable(from, to)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AttractorKind {
    /// Fixed point (no asynchronous successor / synchronous self-loop).
    Point,
    /// Synchronous cycle of period at least 2.
    Cycle,
    /// Nontrivial strongly connected component of an asynchronous graph.
    Scc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Attractor {
    pub kind: AttractorKind,
    pub states: Vec<GlobalState>,
    /// No edge leaves the component.
    pub terminal: bool,
    pub exits: Vec<(GlobalState, GlobalState)>,
}

impl Attractor {
    pub fn state_set(&self) -> BTreeSet<GlobalState> {
        self.states.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttractorSet {
    pub semantics: Semantics,
    pub attractors: Vec<Attractor>,
}

impl AttractorSet {
    pub fn len(&self) -> usize {
        self.attractors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attractors.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &Attractor> {
        self.attractors.iter().filter(|a| a.kind == AttractorKind::Point)
    }

    pub fn contains_state(&self, state: &GlobalState) -> bool {
        self.attractors.iter().any(|a| a.states.contains(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{Entity, Neighbourhood, NextStateTable};

    fn st(s: &str) -> GlobalState {
        s.parse().unwrap()
    }

    fn edge_labels(g: &StateGraph) -> Vec<String> {
        g.edge_states().iter().map(|(a, b)| format!("{a}->{b}")).collect()
    }

    #[test]
    fn pl2_sync_steps() {
        let pl2 = fixtures::pl2();
        assert_eq!(sync_step(&pl2, &st("12")), st("01"));
        assert_eq!(sync_step(&pl2, &st("10")), st("10"));
        assert_eq!(sync_step(&pl2, &st("00")), st("11"));
    }

    #[test]
    fn pl2_async_next() {
        let pl2 = fixtures::pl2();
        assert_eq!(async_next(&pl2, &st("12")), [st("02"), st("11")].into());
        assert!(async_next(&pl2, &st("10")).is_empty());
        assert_eq!(async_next(&pl2, &st("00")), [st("10"), st("01")].into());
    }

    #[test]
    fn pl2_async_graph_edges() {
        let g = build_state_graph(&fixtures::pl2(), Semantics::Async).unwrap();
        assert_eq!(
            edge_labels(&g),
            ["00->01", "00->10", "01->02", "02->01", "11->01", "11->10", "12->02", "12->11"]
        );
    }

    #[test]
    fn pl2_sync_graph_edges() {
        let g = build_state_graph(&fixtures::pl2(), Semantics::Sync).unwrap();
        assert_eq!(
            edge_labels(&g),
            ["00->11", "01->02", "02->01", "10->10", "11->00", "12->01"]
        );
        assert!(g.adjacency().iter().all(|s| s.len() == 1));
    }

    #[test]
    fn identity_model_has_no_async_edges() {
        let m = Mvn::try_new(
            "id",
            vec![Entity::new("x", 1)],
            vec![Neighbourhood::new(vec![0])],
            vec![NextStateTable::new([(vec![0], 0), (vec![1], 1)].into_iter().collect())],
        )
        .unwrap();
        let g = build_state_graph(&m, Semantics::Async).unwrap();
        assert_eq!(g.edge_count(), 0);
        let attractors = g.attractors();
        assert_eq!(attractors.len(), 2);
        assert!(attractors.attractors.iter().all(|a| a.kind == AttractorKind::Point));
    }

    #[test]
    fn pl2_attractors() {
        let pl2 = fixtures::pl2();
        let asy = build_state_graph(&pl2, Semantics::Async).unwrap().attractors();
        let summary: Vec<(AttractorKind, Vec<String>)> = asy
            .attractors
            .iter()
            .map(|a| (a.kind, a.states.iter().map(ToString::to_string).collect()))
            .collect();
        assert_eq!(
            summary,
            vec![
                (AttractorKind::Scc, vec!["01".to_string(), "02".to_string()]),
                (AttractorKind::Point, vec!["10".to_string()]),
            ]
        );
        assert!(asy.attractors.iter().all(|a| a.terminal));

        let syn = build_state_graph(&pl2, Semantics::Sync).unwrap().attractors();
        let sets: Vec<Vec<String>> = syn
            .attractors
            .iter()
            .map(|a| a.states.iter().map(ToString::to_string).collect())
            .collect();
        assert_eq!(sets, vec![vec!["00", "11"], vec!["01", "02"], vec!["10"]]);
        assert_eq!(syn.attractors[2].kind, AttractorKind::Point);
        assert_eq!(syn.attractors[0].kind, AttractorKind::Cycle);
    }

    #[test]
    fn mtrp_attractors() {
        let g = build_state_graph(&fixtures::mtrp(), Semantics::Async).unwrap();
        let a = g.attractors();
        let sets: Vec<(AttractorKind, Vec<String>)> = a
            .attractors
            .iter()
            .map(|a| (a.kind, a.states.iter().map(ToString::to_string).collect()))
            .collect();
        assert_eq!(
            sets,
            vec![
                (
                    AttractorKind::Scc,
                    vec!["0000".into(), "0001".into(), "1000".into(), "1001".into()]
                ),
                (AttractorKind::Point, vec!["0011".into()]),
                (AttractorKind::Point, vec!["0122".into()]),
            ]
        );
    }

    #[test]
    fn point_attractors_are_exactly_dead_ends() {
        for model in [fixtures::pl2(), fixtures::mtrp(), fixtures::atrp(), fixtures::apl2()] {
            let g = build_state_graph(&model, Semantics::Async).unwrap();
            let points: BTreeSet<GlobalState> = g.attractors().points().flat_map(|a| a.states.clone()).collect();
            let dead: BTreeSet<GlobalState> = g.space().iter().filter(|s| async_next(&model, s).is_empty()).collect();
            assert_eq!(points, dead);
        }
    }

    #[test]
    fn reachability() {
        let g = build_state_graph(&fixtures::pl2(), Semantics::Async).unwrap();
        assert_eq!(
            g.reachable(&st("12"), &st("01")).unwrap(),
            Some(vec![st("12"), st("02"), st("01")])
        );
        assert_eq!(g.reachable(&st("10"), &st("00")).unwrap(), None);
        assert_eq!(g.reachable(&st("11"), &st("11")).unwrap(), Some(vec![st("11")]));
        assert!(g.reachable(&st("13"), &st("11")).is_err());
    }

    #[test]
    fn async_edges_change_exactly_one_entity() {
        let m = fixtures::mtrp();
        let g = build_state_graph(&m, Semantics::Async).unwrap();
        for (a, b) in g.edge_states() {
            let diff: Vec<usize> = (0..a.len()).filter(|&i| a.level(i) != b.level(i)).collect();
            assert_eq!(diff.len(), 1);
            assert_eq!(b.level(diff[0]), m.next_level(diff[0], &a));
        }
    }
}
