//! Trace semantics as lassos: a finite prefix followed by an optional loop
//! repeated forever. Finite traces have an empty loop.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GlobalState, Mvn};
use crate::semantics::{build_state_graph, Semantics, StateGraph};

/// An eventually periodic (or finite) sequence of global states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LassoTrace {
    pub prefix: Vec<GlobalState>,
    #[serde(rename = "loop")]
    pub cycle: Vec<GlobalState>,
}

impl LassoTrace {
    pub fn finite(states: Vec<GlobalState>) -> Self {
        LassoTrace {
            prefix: states,
            cycle: Vec::new(),
        }
    }

    pub fn lasso(prefix: Vec<GlobalState>, cycle: Vec<GlobalState>) -> Self {
        LassoTrace { prefix, cycle }
    }

    pub fn is_finite(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn first(&self) -> Option<&GlobalState> {
        self.prefix.first().or_else(|| self.cycle.first())
    }

    /// `|prefix| + |loop|`.
    pub fn size(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    /// The first `n` states of the denoted sequence (fewer if the trace is finite and shorter).
    pub fn unroll(&self, n: usize) -> Vec<GlobalState> {
        let mut out: Vec<GlobalState> = self.prefix.iter().take(n).cloned().collect();
        if !self.cycle.is_empty() {
            out.extend(self.cycle.iter().cycle().take(n - out.len()).cloned());
        }
        out
    }

    /// Unique normal form: primitive loop, shortest prefix.
    ///
    /// Two canonical lassos are equal exactly when they denote the same sequence.
    pub fn canonical(mut self) -> Self {
        if self.cycle.is_empty() {
            return self;
        }
        let len = self.cycle.len();
        if let Some(p) =
            (1..len).find(|&p| len.is_multiple_of(p) && (p..len).all(|i| self.cycle[i] == self.cycle[i % p]))
        {
            self.cycle.truncate(p);
        }
        while !self.prefix.is_empty() && self.prefix.last() == self.cycle.last() {
            self.prefix.pop();
            self.cycle.rotate_right(1);
        }
        self
    }

    /// True when every step is an edge of `graph` and a finite trace ends at a dead end.
    pub fn is_trace_of(&self, graph: &StateGraph) -> bool {
        let idx: Option<Vec<usize>> = self
            .prefix
            .iter()
            .chain(&self.cycle)
            .map(|s| graph.index_of(s))
            .collect();
        let Some(idx) = idx else { return false };
        if idx.is_empty() {
            return false;
        }
        let step_ok = |a: usize, b: usize| graph.successors(a).contains(&(b as u32));
        if !idx.windows(2).all(|w| step_ok(w[0], w[1])) {
            return false;
        }
        if self.cycle.is_empty() {
            graph.successors(*idx.last().unwrap()).is_empty()
        } else {
            let loop_start = idx[self.prefix.len()];
            step_ok(*idx.last().unwrap(), loop_start)
        }
    }
}

pub fn canonicalize(trace: LassoTrace) -> LassoTrace {
    trace.canonical()
}

/// Set of canonical traces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TraceSet {
    traces: BTreeSet<LassoTrace>,
}

impl TraceSet {
    pub fn new() -> Self {
        TraceSet::default()
    }

    /// Inserts the canonical form; returns false if it was already present.
    pub fn insert(&mut self, trace: LassoTrace) -> bool {
        self.traces.insert(trace.canonical())
    }

    pub fn contains(&self, trace: &LassoTrace) -> bool {
        self.traces.contains(&trace.clone().canonical())
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LassoTrace> {
        self.traces.iter()
    }

    pub fn is_subset(&self, other: &TraceSet) -> bool {
        self.traces.is_subset(&other.traces)
    }

    /// Members of `self` missing from `other`.
    pub fn difference<'a>(&'a self, other: &'a TraceSet) -> impl Iterator<Item = &'a LassoTrace> {
        self.traces.difference(&other.traces)
    }
}

impl FromIterator<LassoTrace> for TraceSet {
    fn from_iter<I: IntoIterator<Item = LassoTrace>>(iter: I) -> Self {
        let mut set = TraceSet::new();
        for t in iter {
            set.insert(t);
        }
        set
    }
}

/// One lasso per initial state: iterate the synchronous step until a state repeats.
pub fn sync_traces(model: &Mvn) -> Result<TraceSet> {
    let graph = build_state_graph(model, Semantics::Sync)?;
    Ok(sync_traces_of(&graph))
}

pub fn sync_traces_of(graph: &StateGraph) -> TraceSet {
    let mut out = TraceSet::new();
    let mut position = vec![usize::MAX; graph.node_count()];
    for start in 0..graph.node_count() {
        let mut path = Vec::new();
        let mut v = start;
        while position[v] == usize::MAX {
            position[v] = path.len();
            path.push(v);
            v = graph.successors(v)[0] as usize;
        }
        let split = position[v];
        for &p in &path {
            position[p] = usize::MAX;
        }
        let states: Vec<GlobalState> = path.iter().map(|&i| graph.state(i)).collect();
        let (prefix, cycle) = states.split_at(split);
        out.insert(LassoTrace::lasso(prefix.to_vec(), cycle.to_vec()));
    }
    out
}

/// Finitely many asynchronous traces iff no state on a cycle can branch.
pub fn trace_set_is_finite(graph: &StateGraph) -> bool {
    graph.sccs().iter().all(|component| {
        let cyclic = component.len() > 1 || graph.successors(component[0]).contains(&(component[0] as u32));
        !cyclic || component.iter().all(|&v| graph.successors(v).len() == 1)
    })
}

/// All maximal asynchronous traces; fails when there are infinitely many.
pub fn async_traces(model: &Mvn) -> Result<TraceSet> {
    let graph = build_state_graph(model, Semantics::Async)?;
    async_traces_of(&graph)
}

pub fn async_traces_of(graph: &StateGraph) -> Result<TraceSet> {
    if !trace_set_is_finite(graph) {
        let witness = graph
            .sccs()
            .into_iter()
            .filter(|c| c.len() > 1)
            .flat_map(|c| c.into_iter())
            .find(|&v| graph.successors(v).len() > 1)
            .map(|v| graph.state(v).to_string())
            .unwrap_or_default();
        return Err(Error::InfiniteTraceSet(format!(
            "cycle state {witness} has more than one successor"
        )));
    }
    let mut out = TraceSet::new();
    let mut on_path = vec![usize::MAX; graph.node_count()];
    for start in 0..graph.node_count() {
        walk_from(graph, start, &mut on_path, &mut out);
    }
    Ok(out)
}

/// Depth-first enumeration of maximal walks from `start`. A walk closes into
/// a lasso the first time it revisits a state on the current path.
fn walk_from(graph: &StateGraph, start: usize, on_path: &mut [usize], out: &mut TraceSet) {
    let states = |path: &[usize]| -> Vec<GlobalState> { path.iter().map(|&i| graph.state(i)).collect() };
    if graph.successors(start).is_empty() {
        out.insert(LassoTrace::finite(vec![graph.state(start)]));
        return;
    }
    let mut path = vec![start];
    let mut cursor = vec![0usize];
    on_path[start] = 0;
    while let Some(&v) = path.last() {
        let next = cursor.last_mut().expect("cursor tracks path");
        let succ = graph.successors(v);
        if *next == succ.len() {
            on_path[v] = usize::MAX;
            path.pop();
            cursor.pop();
            continue;
        }
        let w = succ[*next] as usize;
        *next += 1;
        if on_path[w] != usize::MAX {
            let split = on_path[w];
            out.insert(LassoTrace::lasso(states(&path[..split]), states(&path[split..])));
        } else if graph.successors(w).is_empty() {
            let mut finished = states(&path);
            finished.push(graph.state(w));
            out.insert(LassoTrace::finite(finished));
        } else {
            on_path[w] = path.len();
            path.push(w);
            cursor.push(0);
        }
    }
}
