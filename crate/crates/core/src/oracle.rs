//! Brute-force verdicts for differential testing of the checker: direct trace
//! set inclusion, reachability correspondence and attractor correspondence,
//! plus a seeded generator of small random instances.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::{
    abstract_state, abstract_trace_set, check_abstraction_inputs, enumerate_candidates, AbstractionMapping,
    EntityMapping, StateMapping,
};
use crate::checker::{AbstractionCheck, CheckOptions, ValidityRule};
use crate::error::{Error, Result};
use crate::model::{Entity, GlobalState, Mvn, Neighbourhood, NextStateTable, TupleIter};
use crate::modelio::{serialize_mapping, serialize_model};
use crate::semantics::{Semantics, StateGraph};
use crate::traces::{async_traces_of, trace_set_is_finite};

/// Length bound of the prefix spot check on instances with infinite trace sets.
pub const SPOT_CHECK_DEPTH: usize = 8;

/// Direct inclusion of the abstract model's traces in the abstracted concrete traces.
pub fn oracle_check(abstract_model: &Mvn, concrete: &Mvn, mapping: &AbstractionMapping) -> Result<bool> {
    check_abstraction_inputs(abstract_model, concrete, mapping)?;
    let g1 = StateGraph::build(abstract_model, Semantics::Async)?;
    let g2 = StateGraph::build(concrete, Semantics::Async)?;
    oracle_on_graphs(&g1, &g2, mapping)
}

fn oracle_on_graphs(g1: &StateGraph, g2: &StateGraph, mapping: &AbstractionMapping) -> Result<bool> {
    for (g, which) in [(g1, "abstract"), (g2, "concrete")] {
        if !trace_set_is_finite(g) {
            return Err(Error::Unsupported(format!(
                "the {which} model has infinitely many asynchronous traces"
            )));
        }
    }
    let own = async_traces_of(g1)?;
    let image = abstract_trace_set(mapping, &async_traces_of(g2)?);
    Ok(own.is_subset(&image))
}

/// Every abstract walk of at most `depth` states that is not the merged image
/// of a concrete walk. Passing is necessary, not sufficient, for abstraction.
pub fn prefix_spot_check(
    g1: &StateGraph,
    g2: &StateGraph,
    mapping: &AbstractionMapping,
    depth: usize,
) -> Vec<Vec<GlobalState>> {
    let image: Vec<GlobalState> = (0..g2.node_count())
        .map(|c| abstract_state(mapping, &g2.state(c)))
        .collect();
    let abstract_index: Vec<usize> = image
        .iter()
        .map(|s| g1.index_of(s).expect("image in abstract space"))
        .collect();
    // Concrete states with image `a`, one step out of the same-image region of `from`.
    let step = |from: &BTreeSet<usize>, a: usize| -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = from.clone();
        let mut stack: Vec<usize> = from.iter().copied().collect();
        let mut out = BTreeSet::new();
        while let Some(v) = stack.pop() {
            for &w in g2.successors(v) {
                let w = w as usize;
                if abstract_index[w] == abstract_index[v] {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                } else if abstract_index[w] == a {
                    out.insert(w);
                }
            }
        }
        out
    };
    let mut failures = Vec::new();
    let mut frontier: Vec<(Vec<usize>, BTreeSet<usize>)> = (0..g1.node_count())
        .map(|a| {
            (
                vec![a],
                (0..g2.node_count()).filter(|&c| abstract_index[c] == a).collect(),
            )
        })
        .collect();
    for _ in 1..depth {
        let mut next = Vec::new();
        for (path, set) in &frontier {
            let last = *path.last().expect("non-empty");
            for &b in g1.successors(last) {
                let b = b as usize;
                let reached = step(set, b);
                let mut longer = path.clone();
                longer.push(b);
                if reached.is_empty() {
                    failures.push(longer.iter().map(|&i| g1.state(i)).collect());
                } else {
                    next.push((longer, reached));
                }
            }
        }
        frontier = next;
    }
    failures
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReachabilityReport {
    pub pairs_checked: usize,
    /// Abstract pairs with no concrete reachable pair.
    pub counterexamples: Vec<(GlobalState, GlobalState)>,
    /// Abstract pairs whose constructed witness path was wrong or missing.
    pub witness_failures: Vec<(GlobalState, GlobalState)>,
}

impl ReachabilityReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.witness_failures.is_empty()
    }
}

/// For every reachable abstract pair, searches for a reachable concrete pair
/// with the same images and also builds one through the surviving step terms.
pub fn reachability_soundness_suite(
    abstract_model: &Mvn,
    concrete: &Mvn,
    mapping: &AbstractionMapping,
) -> Result<ReachabilityReport> {
    let check = AbstractionCheck::new(abstract_model, concrete, mapping)?;
    let result = check.run(CheckOptions::default());
    let family = match (result.holds, result.family) {
        (true, Some(f)) => f,
        _ => return Err(Error::Unsupported("the abstraction does not hold".into())),
    };
    let g1 = check.abstract_graph();
    let g2 = check.concrete_graph();
    let image: Vec<usize> = (0..g2.node_count())
        .map(|c| g1.index_of(&abstract_state(mapping, &g2.state(c))).expect("in space"))
        .collect();
    let concrete_reach: Vec<Vec<bool>> = (0..g2.node_count())
        .into_par_iter()
        .map(|c| g2.reachable_from(c))
        .collect();

    let mut report = ReachabilityReport {
        pairs_checked: 0,
        counterexamples: Vec::new(),
        witness_failures: Vec::new(),
    };
    for a in 0..g1.node_count() {
        let reach = g1.reachable_from(a);
        for b in (0..g1.node_count()).filter(|&b| reach[b]) {
            report.pairs_checked += 1;
            let (sa, sb) = (g1.state(a), g1.state(b));
            let found = (0..g2.node_count())
                .filter(|&c| image[c] == a)
                .any(|c| (0..g2.node_count()).any(|d| image[d] == b && concrete_reach[c][d]));
            if !found {
                report.counterexamples.push((sa.clone(), sb.clone()));
            }
            let path: Vec<GlobalState> = g1
                .path(a, b)
                .expect("reachable")
                .into_iter()
                .map(|i| g1.state(i))
                .collect();
            let ok = match check.witness_path(&family, &path) {
                Ok(alpha) => {
                    let mut merged: Vec<GlobalState> = alpha.iter().map(|s| abstract_state(mapping, s)).collect();
                    merged.dedup();
                    merged == path
                        && alpha.windows(2).all(|w| {
                            let from = g2.index_of(&w[0]).expect("in space");
                            g2.successors(from)
                                .contains(&(g2.index_of(&w[1]).expect("in space") as u32))
                        })
                }
                Err(_) => false,
            };
            if !ok {
                report.witness_failures.push((sa, sb));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttractorMatch {
    pub abstract_states: Vec<GlobalState>,
    /// Concrete attractors with at least one state mapped into the abstract one.
    pub concrete: Vec<Vec<GlobalState>>,
    /// Some concrete attractor maps exactly onto the abstract one.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttractorReport {
    pub matches: Vec<AttractorMatch>,
}

impl AttractorReport {
    pub fn passed(&self) -> bool {
        self.matches.iter().all(|m| !m.concrete.is_empty())
    }
}

/// Every asynchronous attractor of the abstract model must be represented by
/// an attractor of the concrete model.
pub fn attractor_correspondence(
    abstract_model: &Mvn,
    concrete: &Mvn,
    mapping: &AbstractionMapping,
) -> Result<AttractorReport> {
    check_abstraction_inputs(abstract_model, concrete, mapping)?;
    let a1 = StateGraph::build(abstract_model, Semantics::Async)?.attractors();
    let a2 = StateGraph::build(concrete, Semantics::Async)?.attractors();
    let matches = a1
        .attractors
        .iter()
        .map(|att| {
            let target = att.state_set();
            let mut exact = false;
            let concrete = a2
                .attractors
                .iter()
                .filter_map(|c| {
                    let img: BTreeSet<GlobalState> = c.states.iter().map(|s| abstract_state(mapping, s)).collect();
                    exact |= img == target;
                    (!img.is_disjoint(&target)).then(|| c.states.clone())
                })
                .collect();
            AttractorMatch {
                abstract_states: att.states.clone(),
                concrete,
                exact,
            }
        })
        .collect();
    Ok(AttractorReport { matches })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceOrigin {
    /// One of the candidate abstractions of the concrete model.
    Candidate(u64),
    /// Uniformly random abstract tables.
    RandomTables,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub concrete: Mvn,
    pub mapping: AbstractionMapping,
    pub abstract_model: Mvn,
    pub origin: InstanceOrigin,
}

impl Instance {
    pub fn sources(&self) -> Reproduction {
        Reproduction {
            concrete_mvn: serialize_model(&self.concrete),
            abstract_mvn: serialize_model(&self.abstract_model),
            map: serialize_mapping(&self.mapping, &self.concrete),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reproduction {
    pub concrete_mvn: String,
    pub abstract_mvn: String,
    pub map: String,
}

const NAMES: [&str; 3] = ["A", "B", "C"];

fn random_model(rng: &mut impl Rng, name: &str) -> Mvn {
    loop {
        let n = rng.gen_range(2..=3);
        let mut max: Vec<u8> = (0..n).map(|_| rng.gen_range(1..=2)).collect();
        if !max.contains(&2) {
            let i = rng.gen_range(0..n);
            max[i] = 2;
        }
        let entities: Vec<Entity> = (0..n).map(|i| Entity::new(NAMES[i], max[i])).collect();
        let neighbourhoods: Vec<Neighbourhood> = (0..n)
            .map(|_| {
                let mut inputs: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                if inputs.is_empty() {
                    inputs.push(rng.gen_range(0..n));
                }
                Neighbourhood::new(inputs)
            })
            .collect();
        let tables = (0..n)
            .map(|i| {
                let ranges: Vec<u8> = neighbourhoods[i].inputs.iter().map(|&j| max[j]).collect();
                NextStateTable::new(
                    TupleIter::new(&ranges)
                        .map(|row| (row, rng.gen_range(0..=max[i])))
                        .collect(),
                )
            })
            .collect();
        let model = Mvn::new(name, entities, neighbourhoods, tables);
        let graph = StateGraph::build(&model, Semantics::Async).expect("tiny model");
        if graph.edge_count() > 0 {
            return model;
        }
    }
}

const COMPRESSIONS: [[u8; 3]; 6] = [[0, 0, 1], [0, 1, 1], [0, 1, 0], [1, 0, 0], [1, 1, 0], [1, 0, 1]];

fn random_mapping(rng: &mut impl Rng, model: &Mvn) -> AbstractionMapping {
    let ternary: Vec<usize> = (0..model.entity_count())
        .filter(|&i| model.entities[i].max_level == 2)
        .collect();
    let forced = *ternary.choose(rng).expect("generator guarantees a ternary entity");
    let slots = (0..model.entity_count())
        .map(|i| {
            if ternary.contains(&i) && (i == forced || rng.gen_bool(0.5)) {
                // Monotone compressions are twice as likely as the others.
                let image = if rng.gen_bool(2.0 / 3.0) {
                    COMPRESSIONS[rng.gen_range(0..2)]
                } else {
                    COMPRESSIONS[rng.gen_range(2..6)]
                };
                EntityMapping::Compress(StateMapping::new(2, image.to_vec()).expect("valid compression"))
            } else {
                EntityMapping::Identity
            }
        })
        .collect();
    AbstractionMapping::new(model, slots).expect("slots match the model")
}

/// A random concrete model, mapping and abstract model of the same structure.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let concrete = random_model(rng, "Concrete");
    let mapping = random_mapping(rng, &concrete);
    let candidates = enumerate_candidates(&concrete, &mapping).expect("generated inputs are valid");
    let (mut abstract_model, origin) = if rng.gen_bool(0.5) {
        let index = rng.gen_range(0..candidates.len());
        (
            candidates.get(index).expect("index in range"),
            InstanceOrigin::Candidate(index),
        )
    } else {
        let mut m = candidates.get(0).expect("at least one candidate");
        for (i, e) in m.entities.clone().iter().enumerate() {
            for out in m.tables[i].rows.values_mut() {
                *out = rng.gen_range(0..=e.max_level);
            }
        }
        (m, InstanceOrigin::RandomTables)
    };
    abstract_model.name = "Abstract".into();
    Instance {
        concrete,
        mapping,
        abstract_model,
        origin,
    }
}

fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub count: usize,
    /// Resample until both trace sets are finite.
    pub require_finite: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceReport {
    pub index: usize,
    pub origin: InstanceOrigin,
    pub concrete_states: usize,
    pub checker: bool,
    /// Verdict with the universal point-attractor rule.
    pub checker_universal: bool,
    /// `None` when a trace set is infinite.
    pub oracle: Option<bool>,
    /// Spot-check failures on unsupported instances.
    pub spot_check_failures: Option<usize>,
    pub iterations: usize,
    pub initial_terms: usize,
}

impl InstanceReport {
    pub fn diverges(&self) -> bool {
        self.oracle.is_some_and(|o| o != self.checker)
    }

    pub fn universal_diverges(&self) -> bool {
        self.oracle.is_some_and(|o| o != self.checker_universal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub index: usize,
    pub checker: bool,
    pub oracle: bool,
    pub reproduction: Reproduction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub instances: usize,
    pub supported: usize,
    pub holds: usize,
    pub refuted: usize,
    pub divergences: Vec<Divergence>,
    /// Supported instances where the universal rule disagrees with the oracle.
    pub universal_divergences: Vec<Divergence>,
    /// Unsupported instances the checker accepts although a short abstract
    /// walk has no concrete counterpart (a necessary condition only).
    pub spot_check_violations: Vec<usize>,
    pub reports: Vec<InstanceReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty() && self.spot_check_violations.is_empty()
    }
}

pub fn differential_suite(seed: u64, count: usize) -> SuiteReport {
    differential_suite_with(SuiteConfig {
        seed,
        count,
        require_finite: false,
    })
}

pub fn differential_suite_with(config: SuiteConfig) -> SuiteReport {
    let runs: Vec<(InstanceReport, Instance)> = (0..config.count)
        .into_par_iter()
        .map(|index| run_instance(config, index))
        .collect();
    let divergence = |(r, inst): &(InstanceReport, Instance), verdict: bool| Divergence {
        index: r.index,
        checker: verdict,
        oracle: r.oracle.expect("supported"),
        reproduction: inst.sources(),
    };
    let divergences = runs
        .iter()
        .filter(|(r, _)| r.diverges())
        .map(|run| divergence(run, run.0.checker))
        .collect();
    let universal_divergences = runs
        .iter()
        .filter(|(r, _)| r.universal_diverges())
        .map(|run| divergence(run, run.0.checker_universal))
        .collect();
    let reports: Vec<InstanceReport> = runs.into_iter().map(|(r, _)| r).collect();
    SuiteReport {
        config,
        instances: reports.len(),
        supported: reports.iter().filter(|r| r.oracle.is_some()).count(),
        holds: reports.iter().filter(|r| r.checker).count(),
        refuted: reports.iter().filter(|r| !r.checker).count(),
        divergences,
        universal_divergences,
        spot_check_violations: reports
            .iter()
            .filter(|r| r.checker && r.spot_check_failures.is_some_and(|n| n > 0))
            .map(|r| r.index)
            .collect(),
        reports,
    }
}

/// Instance `index` of the suite with `seed`, as generated.
pub fn suite_instance(config: SuiteConfig, index: usize) -> Instance {
    let mut rng = instance_rng(config.seed, index as u64);
    loop {
        let inst = random_instance(&mut rng);
        if !config.require_finite {
            return inst;
        }
        let finite = [&inst.abstract_model, &inst.concrete]
            .iter()
            .all(|m| trace_set_is_finite(&StateGraph::build(m, Semantics::Async).expect("tiny model")));
        if finite {
            return inst;
        }
    }
}

fn run_instance(config: SuiteConfig, index: usize) -> (InstanceReport, Instance) {
    let inst = suite_instance(config, index);
    let check =
        AbstractionCheck::new(&inst.abstract_model, &inst.concrete, &inst.mapping).expect("generated inputs are valid");
    let result = check.run(CheckOptions::default());
    let universal = check.run(CheckOptions {
        rule: ValidityRule::Universal,
        ..CheckOptions::default()
    });
    let oracle = oracle_on_graphs(check.abstract_graph(), check.concrete_graph(), &inst.mapping).ok();
    let spot_check_failures = oracle.is_none().then(|| {
        prefix_spot_check(
            check.abstract_graph(),
            check.concrete_graph(),
            &inst.mapping,
            SPOT_CHECK_DEPTH,
        )
        .len()
    });
    let report = InstanceReport {
        index,
        origin: inst.origin,
        concrete_states: check.concrete_graph().node_count(),
        checker: result.holds,
        checker_universal: universal.holds,
        oracle,
        spot_check_failures,
        iterations: result.stats.iterations,
        initial_terms: result.stats.initial_terms,
    };
    (report, inst)
}
