//! Step-term decision procedure for asynchronous abstraction.
//!
//! For an abstract state `S`, `A(S)` is its concrete preimage. For a concrete
//! state `s`, `E[s]` is everything reachable from `s` without changing the
//! abstract image. A step term `(S, Γ)` with `Γ ⊆ A(S)` records, for every
//! abstract successor `S_i` of `S`, the set `T(S_i)` of concrete states with
//! image `S_i` that some member of `Γ` reaches in one step out of its class.
//! The procedure starts from all valid terms and prunes any term one of whose
//! successor terms is missing, until nothing changes or some state has no
//! term left.
//!
//! Subsets of `A(S)` are bitmasks over the members of `A(S)` in state order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::abstraction::{abstract_state, check_abstraction_inputs, AbstractionMapping};
use crate::error::{Error, Result};
use crate::model::{GlobalState, Mvn};
use crate::scc::tarjan;
use crate::semantics::{Semantics, StateGraph};

/// Largest `|A(S)|` the checker accepts; it enumerates all `2^|A(S)| - 1` subsets.
pub const MAX_CLASS_SIZE: usize = 20;

/// Validity condition for terms over abstract point attractors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ValidityRule {
    /// Some member of `Γ` can stay at the abstract state forever: its class
    /// contains a concrete dead end or a cycle.
    #[default]
    Existential,
    /// Every member's class has no way out (`Nxt(E[s]) - E[s] = ∅`).
    Universal,
}

impl fmt::Display for ValidityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidityRule::Existential => "existential",
            ValidityRule::Universal => "universal",
        })
    }
}

impl FromStr for ValidityRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "existential" => Ok(ValidityRule::Existential),
            "universal" => Ok(ValidityRule::Universal),
            other => Err(format!(
                "unknown validity rule `{other}` (expected existential or universal)"
            )),
        }
    }
}

impl Serialize for ValidityRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Order in which each pruning pass visits states and terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// Abstract states in state order, terms by ascending bitmask.
    #[default]
    Lexicographic,
    /// A fresh random permutation of states and of terms on every pass.
    Shuffled(u64),
}

impl Serialize for SweepOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SweepOrder::Lexicographic => s.serialize_str("lexicographic"),
            SweepOrder::Shuffled(seed) => s.collect_str(&format_args!("shuffled:{seed}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CheckOptions {
    pub rule: ValidityRule,
    pub order: SweepOrder,
    /// Keep pruning after a state runs out of terms, to reach the fixpoint.
    pub run_to_fixpoint: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcreteClass {
    pub state: GlobalState,
    pub members: Vec<GlobalState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsecClosure {
    pub source: GlobalState,
    pub states: Vec<GlobalState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepTerm {
    pub state: GlobalState,
    pub gamma: Vec<GlobalState>,
    /// `(S_i, T(S_i))` for every abstract successor `S_i`, in state order.
    pub successors: Vec<(GlobalState, Vec<GlobalState>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum InvalidReason {
    /// No member of `Γ` reaches the abstract successor.
    EmptySuccessor { successor: GlobalState },
    /// The abstract state is a point attractor but `Γ` cannot stay there.
    CannotSettle,
    /// The abstract state is a point attractor and this member's class has an exit.
    Escapes { member: GlobalState },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::EmptySuccessor { successor } => {
                write!(f, "no member reaches abstract successor {successor}")
            }
            InvalidReason::CannotSettle => f.write_str("no member can remain at this abstract point attractor"),
            InvalidReason::Escapes { member } => write!(f, "member {member} can leave this abstract point attractor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepTermOutcome {
    Valid(StepTerm),
    Invalid {
        state: GlobalState,
        gamma: Vec<GlobalState>,
        cause: InvalidReason,
    },
}

impl StepTermOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, StepTermOutcome::Valid(_))
    }
}

/// Surviving `Γ`s per abstract state.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StepTermFamily {
    pub terms: BTreeMap<GlobalState, BTreeSet<Vec<GlobalState>>>,
}

impl StepTermFamily {
    pub fn get(&self, state: &GlobalState) -> Option<&BTreeSet<Vec<GlobalState>>> {
        self.terms.get(state)
    }

    pub fn term_count(&self) -> usize {
        self.terms.values().map(BTreeSet::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Removal {
    pub pass: usize,
    pub state: GlobalState,
    pub gamma: Vec<GlobalState>,
    /// The successor term that was missing.
    pub successor: GlobalState,
    pub successor_gamma: Vec<GlobalState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailureWitness {
    /// Abstract state left without step terms.
    pub state: GlobalState,
    pub message: String,
    /// Why the last term at `state` went: each link names the successor term
    /// whose absence removed the previous one, ending at a term that was
    /// never valid.
    pub chain: Vec<Removal>,
    pub root_cause: Option<StepTermOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CheckStats {
    /// Entities of the abstract model.
    pub n: usize,
    /// Largest `|A(S)|`.
    pub k: usize,
    pub abstract_states: usize,
    pub concrete_states: usize,
    /// Subsets examined while building the initial family.
    pub gammas_examined: u64,
    pub initial_terms: usize,
    pub final_terms: usize,
    pub removals: usize,
    /// Passes of the outer loop, including the last one without removals.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub holds: bool,
    pub options: CheckOptions,
    pub stats: CheckStats,
    /// Surviving terms per abstract state, by state label.
    pub surviving_counts: BTreeMap<String, usize>,
    pub family: Option<StepTermFamily>,
    pub witness: Option<FailureWitness>,
    pub removals: Vec<Removal>,
}

struct TermTable {
    successors: Vec<usize>,
    /// Valid gammas, ascending.
    gammas: Vec<u32>,
    /// `tsets[t * k + i]` is `T(S_i)` of term `t`.
    tsets: Vec<u32>,
    /// gamma -> term index + 1, 0 when invalid.
    index: Vec<u32>,
}

/// Precomputed graphs, classes and closures for one abstraction instance.
pub struct AbstractionCheck {
    abstract_graph: StateGraph,
    concrete_graph: StateGraph,
    mapping: AbstractionMapping,
    n: usize,
    /// Concrete members per abstract state, ascending.
    classes: Vec<Vec<usize>>,
    image: Vec<usize>,
    slot: Vec<u8>,
    /// `E[s]` as a mask over the class of `s`.
    closure: Vec<u32>,
    /// `Nxt(E[s]) - E[s]`, ascending.
    exits: Vec<Vec<usize>>,
    /// `E[s]` holds a concrete dead end or a cycle.
    settles: Vec<bool>,
}

impl AbstractionCheck {
    pub fn new(abstract_model: &Mvn, concrete: &Mvn, mapping: &AbstractionMapping) -> Result<Self> {
        check_abstraction_inputs(abstract_model, concrete, mapping)?;
        let abstract_graph = StateGraph::build(abstract_model, Semantics::Async)?;
        let concrete_graph = StateGraph::build(concrete, Semantics::Async)?;
        let aspace = abstract_graph.space().clone();
        let cspace = concrete_graph.space().clone();
        let mut classes = vec![Vec::new(); aspace.size()];
        let mut image = vec![0; cspace.size()];
        let mut slot = vec![0u8; cspace.size()];
        for (c, s) in cspace.iter().enumerate() {
            let a = aspace
                .index(&abstract_state(mapping, &s))
                .expect("mapping lands in the abstract space");
            image[c] = a;
            if classes[a].len() < 32 {
                slot[c] = classes[a].len() as u8;
            }
            classes[a].push(c);
        }
        if let Some((a, members)) = classes.iter().enumerate().find(|(_, m)| m.len() > MAX_CLASS_SIZE) {
            return Err(Error::ClassTooLarge {
                state: aspace.label(&aspace.state(a)),
                size: members.len(),
                limit: MAX_CLASS_SIZE,
            });
        }

        let per_state: Vec<(u32, Vec<usize>)> = (0..cspace.size())
            .into_par_iter()
            .map(|s| {
                let class = &classes[image[s]];
                let mut mask = 1u32 << slot[s];
                let mut queue = VecDeque::from([s]);
                let mut exits = BTreeSet::new();
                while let Some(v) = queue.pop_front() {
                    for &w in concrete_graph.successors(v) {
                        let w = w as usize;
                        if image[w] == image[s] {
                            if mask & (1 << slot[w]) == 0 {
                                mask |= 1 << slot[w];
                                queue.push_back(w);
                            }
                        } else {
                            exits.insert(w);
                        }
                    }
                }
                debug_assert!(class.contains(&s));
                (mask, exits.into_iter().collect())
            })
            .collect();
        let (closure, exits): (Vec<u32>, Vec<Vec<usize>>) = per_state.into_iter().unzip();

        // Class members that can stay inside their class forever.
        let mut resting = vec![false; cspace.size()];
        for class in &classes {
            let local: Vec<Vec<u32>> = class
                .iter()
                .map(|&v| {
                    concrete_graph
                        .successors(v)
                        .iter()
                        .filter(|&&w| image[w as usize] == image[v])
                        .map(|&w| slot[w as usize] as u32)
                        .collect()
                })
                .collect();
            for component in tarjan(&local) {
                if component.len() > 1 {
                    for &j in &component {
                        resting[class[j]] = true;
                    }
                }
            }
            for &v in class {
                if concrete_graph.successors(v).is_empty() {
                    resting[v] = true;
                }
            }
        }
        let settles = (0..cspace.size())
            .map(|s| {
                let class = &classes[image[s]];
                (0..class.len()).any(|j| closure[s] & (1 << j) != 0 && resting[class[j]])
            })
            .collect();

        Ok(AbstractionCheck {
            abstract_graph,
            concrete_graph,
            mapping: mapping.clone(),
            n: abstract_model.entity_count(),
            classes,
            image,
            slot,
            closure,
            exits,
            settles,
        })
    }

    pub fn abstract_graph(&self) -> &StateGraph {
        &self.abstract_graph
    }

    pub fn concrete_graph(&self) -> &StateGraph {
        &self.concrete_graph
    }

    pub fn mapping(&self) -> &AbstractionMapping {
        &self.mapping
    }

    fn abstract_index(&self, state: &GlobalState) -> Result<usize> {
        self.abstract_graph
            .index_of(state)
            .ok_or_else(|| Error::StateOutOfSpace(state.to_string()))
    }

    fn concrete_index(&self, state: &GlobalState) -> Result<usize> {
        self.concrete_graph
            .index_of(state)
            .ok_or_else(|| Error::StateOutOfSpace(state.to_string()))
    }

    fn members(&self, a: usize, mask: u32) -> Vec<GlobalState> {
        self.classes[a]
            .iter()
            .enumerate()
            .filter(|(j, _)| mask & (1 << j) != 0)
            .map(|(_, &c)| self.concrete_graph.state(c))
            .collect()
    }

    fn gamma_mask(&self, a: usize, gamma: &[GlobalState]) -> Result<u32> {
        let label = || self.abstract_graph.state(a).to_string();
        if gamma.is_empty() {
            return Err(Error::GammaOutOfClass { state: label() });
        }
        let mut mask = 0;
        for s in gamma {
            let c = self
                .concrete_graph
                .index_of(s)
                .ok_or_else(|| Error::GammaOutOfClass { state: label() })?;
            if self.image[c] != a {
                return Err(Error::GammaOutOfClass { state: label() });
            }
            mask |= 1 << self.slot[c];
        }
        Ok(mask)
    }

    pub fn concrete_class(&self, state: &GlobalState) -> Result<ConcreteClass> {
        let a = self.abstract_index(state)?;
        let members = self.classes[a].iter().map(|&c| self.concrete_graph.state(c)).collect();
        Ok(ConcreteClass {
            state: state.clone(),
            members,
        })
    }

    pub fn consec_closure(&self, state: &GlobalState) -> Result<ConsecClosure> {
        let c = self.concrete_index(state)?;
        Ok(ConsecClosure {
            source: state.clone(),
            states: self.members(self.image[c], self.closure[c]),
        })
    }

    /// Per member of `A(S)`, the `T` contribution towards each abstract successor.
    fn member_masks(&self, a: usize) -> (Vec<usize>, Vec<Vec<u32>>) {
        let successors: Vec<usize> = self.abstract_graph.successors(a).iter().map(|&w| w as usize).collect();
        let masks = self.classes[a]
            .iter()
            .map(|&c| {
                let mut row = vec![0u32; successors.len()];
                for &t in &self.exits[c] {
                    if let Some(i) = successors.iter().position(|&b| b == self.image[t]) {
                        row[i] |= 1 << self.slot[t];
                    }
                }
                row
            })
            .collect();
        (successors, masks)
    }

    fn validity(
        &self,
        a: usize,
        gamma: u32,
        tset: &[u32],
        successors: &[usize],
        rule: ValidityRule,
    ) -> Option<InvalidReason> {
        if let Some(i) = tset.iter().position(|&t| t == 0) {
            return Some(InvalidReason::EmptySuccessor {
                successor: self.abstract_graph.state(successors[i]),
            });
        }
        if !successors.is_empty() {
            return None;
        }
        let class = &self.classes[a];
        let chosen = (0..class.len()).filter(|j| gamma & (1 << j) != 0).map(|j| class[j]);
        match rule {
            ValidityRule::Existential => {
                let mut chosen = chosen;
                if chosen.any(|c| self.settles[c]) {
                    None
                } else {
                    Some(InvalidReason::CannotSettle)
                }
            }
            ValidityRule::Universal => {
                let mut chosen = chosen;
                chosen
                    .find(|&c| !self.exits[c].is_empty())
                    .map(|c| InvalidReason::Escapes {
                        member: self.concrete_graph.state(c),
                    })
            }
        }
    }

    fn tset_of(masks: &[Vec<u32>], gamma: u32, k: usize) -> Vec<u32> {
        let mut t = vec![0u32; k];
        for (j, row) in masks.iter().enumerate() {
            if gamma & (1 << j) != 0 {
                for i in 0..k {
                    t[i] |= row[i];
                }
            }
        }
        t
    }

    pub fn make_step_term(
        &self,
        state: &GlobalState,
        gamma: &[GlobalState],
        rule: ValidityRule,
    ) -> Result<StepTermOutcome> {
        let a = self.abstract_index(state)?;
        let mask = self.gamma_mask(a, gamma)?;
        let (successors, masks) = self.member_masks(a);
        let tset = Self::tset_of(&masks, mask, successors.len());
        let gamma = self.members(a, mask);
        if let Some(cause) = self.validity(a, mask, &tset, &successors, rule) {
            return Ok(StepTermOutcome::Invalid {
                state: state.clone(),
                gamma,
                cause,
            });
        }
        let successors = successors
            .iter()
            .zip(&tset)
            .map(|(&b, &t)| (self.abstract_graph.state(b), self.members(b, t)))
            .collect();
        Ok(StepTermOutcome::Valid(StepTerm {
            state: state.clone(),
            gamma,
            successors,
        }))
    }

    /// All valid step terms of `state`, by ascending bitmask.
    pub fn all_step_terms(&self, state: &GlobalState, rule: ValidityRule) -> Result<Vec<StepTerm>> {
        let a = self.abstract_index(state)?;
        let table = self.term_table(a, rule);
        Ok((0..table.gammas.len())
            .map(|t| {
                let k = table.successors.len();
                StepTerm {
                    state: state.clone(),
                    gamma: self.members(a, table.gammas[t]),
                    successors: table
                        .successors
                        .iter()
                        .zip(&table.tsets[t * k..(t + 1) * k])
                        .map(|(&b, &m)| (self.abstract_graph.state(b), self.members(b, m)))
                        .collect(),
                }
            })
            .collect())
    }

    fn term_table(&self, a: usize, rule: ValidityRule) -> TermTable {
        let (successors, masks) = self.member_masks(a);
        let k = successors.len();
        let m = self.classes[a].len();
        let full = 1usize << m;
        // T of every subset, built from the subset without its lowest member.
        let mut all_t = vec![0u32; full * k];
        let mut index = vec![0u32; full];
        let mut gammas = Vec::new();
        let mut tsets = Vec::new();
        for g in 1..full {
            let low = g.trailing_zeros() as usize;
            let rest = g & (g - 1);
            for i in 0..k {
                all_t[g * k + i] = all_t[rest * k + i] | masks[low][i];
            }
            let t = &all_t[g * k..(g + 1) * k];
            if self.validity(a, g as u32, t, &successors, rule).is_none() {
                gammas.push(g as u32);
                tsets.extend_from_slice(t);
                index[g] = gammas.len() as u32;
            }
        }
        TermTable {
            successors,
            gammas,
            tsets,
            index,
        }
    }

    /// Runs the pruning procedure.
    pub fn run(&self, options: CheckOptions) -> CheckResult {
        let states = self.abstract_graph.node_count();
        let tables: Vec<TermTable> = (0..states)
            .into_par_iter()
            .map(|a| self.term_table(a, options.rule))
            .collect();
        let mut alive: Vec<Vec<bool>> = tables.iter().map(|t| vec![true; t.gammas.len()]).collect();
        let mut counts: Vec<usize> = tables.iter().map(|t| t.gammas.len()).collect();
        let mut stats = CheckStats {
            n: self.n,
            k: self.classes.iter().map(Vec::len).max().unwrap_or(0),
            abstract_states: states,
            concrete_states: self.concrete_graph.node_count(),
            gammas_examined: self.classes.iter().map(|c| (1u64 << c.len()) - 1).sum(),
            initial_terms: counts.iter().sum(),
            ..CheckStats::default()
        };
        let mut removals = Vec::new();
        let mut emptied: Option<usize> = counts.iter().position(|&c| c == 0);
        let mut rng = match options.order {
            SweepOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            SweepOrder::Lexicographic => None,
        };

        if emptied.is_none() || options.run_to_fixpoint {
            'outer: loop {
                stats.iterations += 1;
                let mut changed = false;
                let mut order: Vec<usize> = (0..states).collect();
                if let Some(rng) = rng.as_mut() {
                    order.shuffle(rng);
                }
                for &a in &order {
                    let table = &tables[a];
                    let k = table.successors.len();
                    let mut terms: Vec<usize> = (0..table.gammas.len()).collect();
                    if let Some(rng) = rng.as_mut() {
                        terms.shuffle(rng);
                    }
                    for t in terms {
                        if !alive[a][t] {
                            continue;
                        }
                        let tset = &table.tsets[t * k..(t + 1) * k];
                        let missing = table.successors.iter().zip(tset).find(|&(&b, &m)| {
                            let idx = tables[b].index[m as usize];
                            idx == 0 || !alive[b][idx as usize - 1]
                        });
                        if let Some((&b, &m)) = missing {
                            alive[a][t] = false;
                            counts[a] -= 1;
                            changed = true;
                            removals.push(Removal {
                                pass: stats.iterations,
                                state: self.abstract_graph.state(a),
                                gamma: self.members(a, table.gammas[t]),
                                successor: self.abstract_graph.state(b),
                                successor_gamma: self.members(b, m),
                            });
                            if counts[a] == 0 {
                                emptied.get_or_insert(a);
                                if !options.run_to_fixpoint {
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }

        stats.removals = removals.len();
        stats.final_terms = counts.iter().sum();
        let surviving_counts = (0..states)
            .map(|a| {
                (
                    self.abstract_graph.space().label(&self.abstract_graph.state(a)),
                    counts[a],
                )
            })
            .collect();
        let holds = emptied.is_none();
        let family = (holds || options.run_to_fixpoint).then(|| self.family(&tables, &alive));
        let witness = emptied.map(|a| self.witness(a, &tables, &removals, options.rule));
        CheckResult {
            holds,
            options,
            stats,
            surviving_counts,
            family,
            witness,
            removals,
        }
    }

    fn family(&self, tables: &[TermTable], alive: &[Vec<bool>]) -> StepTermFamily {
        let mut terms = BTreeMap::new();
        for (a, table) in tables.iter().enumerate() {
            let set = table
                .gammas
                .iter()
                .zip(&alive[a])
                .filter(|(_, &live)| live)
                .map(|(&g, _)| self.members(a, g))
                .collect();
            terms.insert(self.abstract_graph.state(a), set);
        }
        StepTermFamily { terms }
    }

    fn witness(&self, a: usize, tables: &[TermTable], removals: &[Removal], rule: ValidityRule) -> FailureWitness {
        let state = self.abstract_graph.state(a);
        if tables[a].gammas.is_empty() {
            let full: Vec<GlobalState> = self.members(a, u32::MAX);
            let root_cause = self.make_step_term(&state, &full, rule).ok();
            return FailureWitness {
                message: format!("abstract state {state} has no valid step term"),
                state,
                chain: Vec::new(),
                root_cause,
            };
        }
        let by_term: HashMap<(&GlobalState, &Vec<GlobalState>), &Removal> =
            removals.iter().map(|r| ((&r.state, &r.gamma), r)).collect();
        let mut chain = Vec::new();
        let mut current = removals.iter().rev().find(|r| r.state == state);
        let mut seen = BTreeSet::new();
        let mut root_cause = None;
        while let Some(r) = current {
            if !seen.insert((r.state.clone(), r.gamma.clone())) {
                break;
            }
            chain.push(r.clone());
            current = by_term.get(&(&r.successor, &r.successor_gamma)).copied();
            if current.is_none() {
                root_cause = self.make_step_term(&r.successor, &r.successor_gamma, rule).ok();
            }
        }
        FailureWitness {
            message: format!("every step term of abstract state {state} was removed"),
            state,
            chain,
            root_cause,
        }
    }

    /// A concrete path whose merged image is the abstract path `gamma`, built
    /// by chaining surviving terms forward and choosing states backwards.
    pub fn witness_path(&self, family: &StepTermFamily, gamma: &[GlobalState]) -> Result<Vec<GlobalState>> {
        if gamma.is_empty() {
            return Ok(Vec::new());
        }
        let path: Vec<usize> = gamma.iter().map(|s| self.abstract_index(s)).collect::<Result<_>>()?;
        for w in path.windows(2) {
            if !self.abstract_graph.successors(w[0]).contains(&(w[1] as u32)) {
                return Err(Error::NotAPath(format!(
                    "{} -> {}",
                    self.abstract_graph.state(w[0]),
                    self.abstract_graph.state(w[1])
                )));
            }
        }
        let lookup = |a: usize| -> Result<BTreeSet<u32>> {
            let state = self.abstract_graph.state(a);
            let set = family
                .get(&state)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::NotClosed(format!("no surviving term at {state}")))?;
            set.iter().map(|g| self.gamma_mask(a, g)).collect()
        };
        let mut gammas = vec![*lookup(path[0])?.iter().next().expect("non-empty")];
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (successors, masks) = self.member_masks(a);
            let i = successors.iter().position(|&s| s == b).expect("edge checked");
            let t = Self::tset_of(&masks, *gammas.last().expect("non-empty"), successors.len())[i];
            if t == 0 || !lookup(b)?.contains(&t) {
                return Err(Error::NotClosed(format!(
                    "successor term of {} towards {} is not in the family",
                    self.abstract_graph.state(a),
                    self.abstract_graph.state(b)
                )));
            }
            gammas.push(t);
        }
        let pick = |a: usize, mask: u32| -> Vec<usize> {
            self.classes[a]
                .iter()
                .enumerate()
                .filter(|(j, _)| mask & (1 << j) != 0)
                .map(|(_, &c)| c)
                .collect()
        };
        // Backwards: an entry state per step, each reaching the next through its class.
        let p = path.len() - 1;
        let mut entries = vec![pick(path[p], gammas[p])[0]];
        for i in (0..p).rev() {
            let next = *entries.last().expect("non-empty");
            let from = pick(path[i], gammas[i])
                .into_iter()
                .find(|&c| self.exits[c].contains(&next))
                .ok_or_else(|| {
                    Error::NotClosed(format!(
                        "no member of the term at {} reaches {}",
                        gamma[i],
                        gamma[i + 1]
                    ))
                })?;
            entries.push(from);
        }
        entries.reverse();
        let mut out = vec![entries[0]];
        for i in 0..p {
            let bridge = self
                .bridge(entries[i], entries[i + 1])
                .expect("exit lies beyond the class");
            out.extend_from_slice(&bridge[1..]);
        }
        Ok(out.into_iter().map(|c| self.concrete_graph.state(c)).collect())
    }

    /// Shortest path from `from` to `to` whose inner states stay in the class of `from`.
    fn bridge(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let class = self.image[from];
        let mut parent: HashMap<usize, usize> = HashMap::from([(from, from)]);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &w in self.concrete_graph.successors(v) {
                let w = w as usize;
                if w == to {
                    let mut path = vec![to, v];
                    let mut cur = v;
                    while cur != from {
                        cur = parent[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                if self.image[w] == class && !parent.contains_key(&w) {
                    parent.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        None
    }
}

pub fn concrete_class(concrete: &Mvn, mapping: &AbstractionMapping, state: &GlobalState) -> Result<ConcreteClass> {
    let target = crate::model::StateSpace::new(mapping.target_max_levels());
    if !target.contains(state) {
        return Err(Error::StateOutOfSpace(state.to_string()));
    }
    let members = concrete
        .state_space()
        .iter()
        .filter(|s| abstract_state(mapping, s) == *state)
        .collect();
    Ok(ConcreteClass {
        state: state.clone(),
        members,
    })
}

pub fn consec_closure(concrete: &Mvn, mapping: &AbstractionMapping, state: &GlobalState) -> Result<ConsecClosure> {
    if !concrete.state_space().contains(state) {
        return Err(Error::StateOutOfSpace(state.to_string()));
    }
    let image = abstract_state(mapping, state);
    let mut seen = BTreeSet::from([state.clone()]);
    let mut queue = VecDeque::from([state.clone()]);
    while let Some(s) = queue.pop_front() {
        for t in crate::semantics::async_next(concrete, &s) {
            if abstract_state(mapping, &t) == image && seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    Ok(ConsecClosure {
        source: state.clone(),
        states: seen.into_iter().collect(),
    })
}

pub fn make_step_term(
    abstract_model: &Mvn,
    concrete: &Mvn,
    mapping: &AbstractionMapping,
    state: &GlobalState,
    gamma: &[GlobalState],
) -> Result<StepTermOutcome> {
    AbstractionCheck::new(abstract_model, concrete, mapping)?.make_step_term(state, gamma, ValidityRule::default())
}

pub fn all_step_terms(
    abstract_model: &Mvn,
    concrete: &Mvn,
    mapping: &AbstractionMapping,
    state: &GlobalState,
) -> Result<Vec<StepTerm>> {
    AbstractionCheck::new(abstract_model, concrete, mapping)?.all_step_terms(state, ValidityRule::default())
}

/// Does `abstract_model` asynchronously abstract `concrete` under `mapping`?
pub fn check_asyn_abs(abstract_model: &Mvn, concrete: &Mvn, mapping: &AbstractionMapping) -> Result<CheckResult> {
    check_asyn_abs_with(abstract_model, concrete, mapping, CheckOptions::default())
}

pub fn check_asyn_abs_with(
    abstract_model: &Mvn,
    concrete: &Mvn,
    mapping: &AbstractionMapping,
    options: CheckOptions,
) -> Result<CheckResult> {
    Ok(AbstractionCheck::new(abstract_model, concrete, mapping)?.run(options))
}

pub fn witness_path(
    abstract_model: &Mvn,
    concrete: &Mvn,
    mapping: &AbstractionMapping,
    family: &StepTermFamily,
    gamma: &[GlobalState],
) -> Result<Vec<GlobalState>> {
    AbstractionCheck::new(abstract_model, concrete, mapping)?.witness_path(family, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn st(s: &str) -> GlobalState {
        s.parse().unwrap()
    }

    fn seq(states: &[&str]) -> Vec<GlobalState> {
        states.iter().map(|s| st(s)).collect()
    }

    fn pl2_check() -> AbstractionCheck {
        AbstractionCheck::new(&fixtures::apl2(), &fixtures::pl2(), &fixtures::cro_mapping()).unwrap()
    }

    #[test]
    fn classes_and_closures() {
        let c = pl2_check();
        assert_eq!(c.concrete_class(&st("01")).unwrap().members, seq(&["01", "02"]));
        assert_eq!(c.concrete_class(&st("10")).unwrap().members, seq(&["10"]));
        assert_eq!(c.consec_closure(&st("01")).unwrap().states, seq(&["01", "02"]));
        assert_eq!(c.consec_closure(&st("00")).unwrap().states, seq(&["00"]));
        assert_eq!(c.consec_closure(&st("10")).unwrap().states, seq(&["10"]));
        let pl2 = fixtures::pl2();
        let rho = fixtures::cro_mapping();
        assert_eq!(
            concrete_class(&pl2, &rho, &st("11")).unwrap().members,
            seq(&["11", "12"])
        );
        assert_eq!(
            consec_closure(&pl2, &rho, &st("12")).unwrap().states,
            seq(&["11", "12"])
        );
    }

    #[test]
    fn identity_components_give_singletons() {
        let mtrp = fixtures::mtrp();
        let phi = fixtures::trp_mapping();
        // TrpE and TrpR are identities, so classes are products of the two merged pairs.
        for s in crate::model::StateSpace::new(phi.target_max_levels()).iter() {
            let size = concrete_class(&mtrp, &phi, &s).unwrap().members.len();
            let expect = (if s.level(2) == 1 { 2 } else { 1 }) * (if s.level(3) == 1 { 2 } else { 1 });
            assert_eq!(size, expect);
        }
    }

    #[test]
    fn pl2_step_terms() {
        let c = pl2_check();
        let rule = ValidityRule::Existential;
        match c.make_step_term(&st("00"), &seq(&["00"]), rule).unwrap() {
            StepTermOutcome::Valid(t) => {
                assert_eq!(t.successors, vec![(st("01"), seq(&["01"])), (st("10"), seq(&["10"]))]);
            }
            other => panic!("{other:?}"),
        }
        for r in [ValidityRule::Existential, ValidityRule::Universal] {
            assert!(c.make_step_term(&st("10"), &seq(&["10"]), r).unwrap().is_valid());
            assert!(c.make_step_term(&st("01"), &seq(&["01"]), r).unwrap().is_valid());
        }
        assert_eq!(c.all_step_terms(&st("01"), rule).unwrap().len(), 3);
        assert!(matches!(
            c.make_step_term(&st("01"), &seq(&["10"]), rule),
            Err(Error::GammaOutOfClass { .. })
        ));
        assert!(matches!(
            c.make_step_term(&st("01"), &[], rule),
            Err(Error::GammaOutOfClass { .. })
        ));
    }

    #[test]
    fn atrp_point_term() {
        let terms = all_step_terms(
            &fixtures::atrp(),
            &fixtures::mtrp(),
            &fixtures::trp_mapping(),
            &st("0011"),
        )
        .unwrap();
        assert!(terms.iter().any(|t| t.gamma == seq(&["0011"])));
    }

    #[test]
    fn apl2_abstracts_pl2() {
        let r = check_asyn_abs(&fixtures::apl2(), &fixtures::pl2(), &fixtures::cro_mapping()).unwrap();
        assert!(r.holds);
        assert!(r.witness.is_none());
        let family = r.family.unwrap();
        assert!(family.terms.values().all(|s| !s.is_empty()));
        assert!(r.stats.iterations <= r.stats.initial_terms + 1);
        assert_eq!(r.stats.k, 2);
        assert_eq!(r.stats.n, 2);
    }

    #[test]
    fn mutated_apl2() {
        let pl2 = fixtures::pl2();
        let rho = fixtures::cro_mapping();
        // Next CI on row (1,1) flipped to 1 only removes the edge 11 -> 01.
        let mut m = fixtures::apl2();
        let ci = m.entity_index("CI").unwrap();
        m.tables[ci].rows.insert(vec![1, 1], 1);
        assert!(check_asyn_abs(&m, &pl2, &rho).unwrap().holds);
        assert!(crate::oracle::oracle_check(&m, &pl2, &rho).unwrap());
        // Next CI on row (1,0) flipped to 0 makes 10 leave a concrete point attractor.
        let mut m = fixtures::apl2();
        m.tables[ci].rows.insert(vec![1, 0], 0);
        let r = check_asyn_abs(&m, &pl2, &rho).unwrap();
        assert!(!r.holds);
        // 00 <-> 10 now branches at 00, so the trace set is infinite.
        assert!(matches!(
            crate::oracle::oracle_check(&m, &pl2, &rho),
            Err(Error::Unsupported(_))
        ));
        let w = r.witness.unwrap();
        assert!(w.root_cause.is_some());
    }

    #[test]
    fn witness_paths() {
        let c = pl2_check();
        let family = c.run(CheckOptions::default()).family.unwrap();
        assert_eq!(
            c.witness_path(&family, &seq(&["00", "01"])).unwrap(),
            seq(&["00", "01"])
        );
        let alpha = c.witness_path(&family, &seq(&["11", "01"])).unwrap();
        let image: Vec<GlobalState> = alpha.iter().map(|s| abstract_state(c.mapping(), s)).collect();
        let mut merged = image.clone();
        merged.dedup();
        assert_eq!(merged, seq(&["11", "01"]));
        for w in alpha.windows(2) {
            assert!(c.concrete_graph().successor_states(&w[0]).unwrap().contains(&w[1]));
        }
        let single = c.witness_path(&family, &seq(&["10"])).unwrap();
        assert_eq!(single, seq(&["10"]));
        assert!(matches!(
            c.witness_path(&family, &seq(&["01", "00"])),
            Err(Error::NotAPath(_))
        ));
        assert!(matches!(
            c.witness_path(&StepTermFamily::default(), &seq(&["00"])),
            Err(Error::NotClosed(_))
        ));
    }

    #[test]
    fn preconditions() {
        let pl2 = fixtures::pl2();
        assert!(matches!(
            check_asyn_abs(&pl2, &pl2, &AbstractionMapping::identity(&pl2)),
            Err(Error::ImproperMapping)
        ));
        assert!(matches!(
            check_asyn_abs(&fixtures::atrp(), &pl2, &fixtures::cro_mapping()),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn shuffled_orders_agree() {
        let base = CheckOptions {
            run_to_fixpoint: true,
            ..CheckOptions::default()
        };
        let set = crate::abstraction::enumerate_candidates(&fixtures::mtrp(), &fixtures::trp_mapping()).unwrap();
        for cand in set.iter() {
            let c = AbstractionCheck::new(&cand, &fixtures::mtrp(), &fixtures::trp_mapping()).unwrap();
            let reference = c.run(base);
            for seed in 0..3 {
                let r = c.run(CheckOptions {
                    order: SweepOrder::Shuffled(seed),
                    ..base
                });
                assert_eq!(r.holds, reference.holds);
                assert_eq!(r.family, reference.family);
            }
        }
    }

    #[test]
    fn rule_names() {
        assert_eq!("universal".parse::<ValidityRule>().unwrap(), ValidityRule::Universal);
        assert!("x".parse::<ValidityRule>().is_err());
    }
}
