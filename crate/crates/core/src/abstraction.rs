//! State and abstraction mappings, abstracted states and traces, synchronous
//! abstraction checking and candidate abstraction models.
//!
//! A state mapping compresses one entity's range `0..=m` onto a strictly
//! smaller range `0..=n` (`n >= 1`). An abstraction mapping holds one state
//! mapping or the identity per entity and acts on global states pointwise.
//! Abstracting a trace applies the mapping to every state and then merges
//! consecutive equal states, so a loop whose states all share one image
//! collapses into a finite trace.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::model::{GlobalState, Mvn, NextStateTable, TupleIter};
use crate::modelio::serialize_model_with_header;
use crate::traces::{sync_traces, LassoTrace, TraceSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("mapping must cover every level 0..={source_max}")]
    NotTotal { source_max: u8 },
    #[error("mapping is not surjective onto 0..={codomain_max}: level {missing} is never hit")]
    NonSurjective { codomain_max: u8, missing: u8 },
    #[error("codomain must be larger than one level")]
    CodomainTooSmall,
    #[error("codomain 0..={codomain_max} must be strictly smaller than the source range 0..={source_max}")]
    NotCompressing { source_max: u8, codomain_max: u8 },
    #[error("mapping has {got} entity slots, model has {want} entities")]
    Arity { got: usize, want: usize },
}

/// Surjective compression of one entity's levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMapping {
    image: Vec<u8>,
    codomain_max: u8,
}

impl StateMapping {
    /// `image[level]` is the abstract level of `level`; `image.len()` must be `source_max + 1`.
    pub fn new(source_max: u8, image: Vec<u8>) -> std::result::Result<Self, MappingError> {
        if image.len() != source_max as usize + 1 {
            return Err(MappingError::NotTotal { source_max });
        }
        let codomain_max = image.iter().copied().max().unwrap_or(0);
        if codomain_max < 1 {
            return Err(MappingError::CodomainTooSmall);
        }
        if let Some(missing) = (0..=codomain_max).find(|v| !image.contains(v)) {
            return Err(MappingError::NonSurjective { codomain_max, missing });
        }
        if codomain_max >= source_max {
            return Err(MappingError::NotCompressing {
                source_max,
                codomain_max,
            });
        }
        Ok(StateMapping { image, codomain_max })
    }

    pub fn apply(&self, level: u8) -> u8 {
        self.image[level as usize]
    }

    pub fn image(&self) -> &[u8] {
        &self.image
    }

    pub fn source_max(&self) -> u8 {
        (self.image.len() - 1) as u8
    }

    pub fn codomain_max(&self) -> u8 {
        self.codomain_max
    }

    pub fn is_order_preserving(&self) -> bool {
        self.image.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntityMapping {
    Identity,
    Compress(StateMapping),
}

/// One mapping per entity, applied pointwise to global states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractionMapping {
    source_max: Vec<u8>,
    slots: Vec<EntityMapping>,
}

impl AbstractionMapping {
    pub fn new(model: &Mvn, slots: Vec<EntityMapping>) -> std::result::Result<Self, MappingError> {
        if slots.len() != model.entity_count() {
            return Err(MappingError::Arity {
                got: slots.len(),
                want: model.entity_count(),
            });
        }
        for (slot, e) in slots.iter().zip(&model.entities) {
            if let EntityMapping::Compress(m) = slot {
                if m.source_max() != e.max_level {
                    return Err(MappingError::NotTotal {
                        source_max: e.max_level,
                    });
                }
            }
        }
        Ok(AbstractionMapping {
            source_max: model.max_levels(),
            slots,
        })
    }

    /// All-identity mapping. Not proper, so the abstraction checks reject it.
    pub fn identity(model: &Mvn) -> Self {
        AbstractionMapping {
            source_max: model.max_levels(),
            slots: vec![EntityMapping::Identity; model.entity_count()],
        }
    }

    pub fn slots(&self) -> &[EntityMapping] {
        &self.slots
    }

    /// At least one entity is compressed.
    pub fn is_proper(&self) -> bool {
        self.slots.iter().any(|s| matches!(s, EntityMapping::Compress(_)))
    }

    pub fn source_max_levels(&self) -> &[u8] {
        &self.source_max
    }

    pub fn target_max_levels(&self) -> Vec<u8> {
        self.slots
            .iter()
            .zip(&self.source_max)
            .map(|(s, &m)| match s {
                EntityMapping::Identity => m,
                EntityMapping::Compress(sm) => sm.codomain_max(),
            })
            .collect()
    }

    pub fn apply_level(&self, entity: usize, level: u8) -> u8 {
        match &self.slots[entity] {
            EntityMapping::Identity => level,
            EntityMapping::Compress(m) => m.apply(level),
        }
    }

    /// Entities whose state mapping is not monotone.
    pub fn non_monotone_entities(&self) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, EntityMapping::Compress(m) if !m.is_order_preserving()))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn abstract_state(&self, state: &GlobalState) -> GlobalState {
        abstract_state(self, state)
    }
}

/// Pointwise image of a global state.
pub fn abstract_state(mapping: &AbstractionMapping, state: &GlobalState) -> GlobalState {
    GlobalState::new(
        state
            .levels()
            .iter()
            .enumerate()
            .map(|(i, &v)| mapping.apply_level(i, v))
            .collect(),
    )
}

fn merge_consecutive(states: impl IntoIterator<Item = GlobalState>) -> Vec<GlobalState> {
    let mut out: Vec<GlobalState> = Vec::new();
    for s in states {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

/// Pointwise image of the denoted sequence with consecutive duplicates merged.
pub fn abstract_trace(mapping: &AbstractionMapping, trace: &LassoTrace) -> LassoTrace {
    let prefix: Vec<GlobalState> = trace.prefix.iter().map(|s| abstract_state(mapping, s)).collect();
    let cycle: Vec<GlobalState> = trace.cycle.iter().map(|s| abstract_state(mapping, s)).collect();
    if cycle.is_empty() {
        return LassoTrace::finite(merge_consecutive(prefix));
    }
    if cycle.iter().all(|s| *s == cycle[0]) {
        let head = cycle[0].clone();
        return LassoTrace::finite(merge_consecutive(prefix.into_iter().chain([head])));
    }
    // After one full unrolling the sequence continues with exactly those loop
    // states that differ from their cyclic predecessor.
    let n = cycle.len();
    let reduced: Vec<GlobalState> = (0..n)
        .filter(|&i| cycle[i] != cycle[(i + n - 1) % n])
        .map(|i| cycle[i].clone())
        .collect();
    let head = merge_consecutive(prefix.into_iter().chain(cycle));
    LassoTrace::lasso(head, reduced).canonical()
}

pub fn abstract_trace_set(mapping: &AbstractionMapping, traces: &TraceSet) -> TraceSet {
    traces.iter().map(|t| abstract_trace(mapping, t)).collect()
}

/// Preconditions shared by every abstraction check: a proper mapping from
/// `concrete` onto `abstract_model`, and identical network structure.
pub fn check_abstraction_inputs(abstract_model: &Mvn, concrete: &Mvn, mapping: &AbstractionMapping) -> Result<()> {
    abstract_model.ensure_valid()?;
    concrete.ensure_valid()?;
    if !abstract_model.same_structure(concrete) {
        return Err(Error::StructureMismatch(format!(
            "{} and {} differ in entities or neighbourhoods",
            abstract_model.name, concrete.name
        )));
    }
    if !mapping.is_proper() {
        return Err(Error::ImproperMapping);
    }
    if mapping.source_max_levels() != concrete.max_levels().as_slice() {
        return Err(Error::MappingMismatch(format!(
            "mapping domain does not match the ranges of {}",
            concrete.name
        )));
    }
    if mapping.target_max_levels() != abstract_model.max_levels() {
        return Err(Error::MappingMismatch(format!(
            "mapping codomain does not match the ranges of {}",
            abstract_model.name
        )));
    }
    Ok(())
}

/// Synchronous abstraction: every (merged) synchronous trace of the abstract
/// model is the abstraction of a synchronous trace of the concrete one.
pub fn check_sync_abstraction(abstract_model: &Mvn, concrete: &Mvn, mapping: &AbstractionMapping) -> Result<bool> {
    check_abstraction_inputs(abstract_model, concrete, mapping)?;
    let identity = AbstractionMapping::identity(abstract_model);
    let own = abstract_trace_set(&identity, &sync_traces(abstract_model)?);
    let image = abstract_trace_set(mapping, &sync_traces(concrete)?);
    Ok(own.is_subset(&image))
}

/// One abstract table row whose output is open to choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceRow {
    pub entity: usize,
    pub inputs: Vec<u8>,
    /// Ascending abstract outputs of the concrete rows over `inputs`.
    pub options: Vec<u8>,
}

/// Every abstract model with the concrete structure whose table rows pick an
/// output from the abstract images of the matching concrete rows.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    concrete_name: String,
    base: Mvn,
    rows: Vec<ChoiceRow>,
}

impl CandidateSet {
    /// Number of candidates: product of the option counts (saturating).
    pub fn len(&self) -> u64 {
        self.rows
            .iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(r.options.len() as u64))
            .unwrap_or(u64::MAX)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> &[ChoiceRow] {
        &self.rows
    }

    /// Rows with more than one option.
    pub fn ambiguous_rows(&self) -> impl Iterator<Item = &ChoiceRow> {
        self.rows.iter().filter(|r| r.options.len() > 1)
    }

    /// Candidate `index`; the first ambiguous row is the most significant digit
    /// and option 0 is the smallest abstract output.
    pub fn get(&self, index: u64) -> Option<Mvn> {
        if index >= self.len() {
            return None;
        }
        let picks = self.picks(index);
        let mut model = self.base.clone();
        model.name = format!("{}_cand{}", self.concrete_name, index);
        for (row, pick) in self.rows.iter().zip(picks) {
            model.tables[row.entity]
                .rows
                .insert(row.inputs.clone(), row.options[pick]);
        }
        Some(model)
    }

    fn picks(&self, mut index: u64) -> Vec<usize> {
        let mut picks = vec![0; self.rows.len()];
        for (i, row) in self.rows.iter().enumerate().rev() {
            let k = row.options.len() as u64;
            picks[i] = (index % k) as usize;
            index /= k;
        }
        picks
    }

    /// Candidate built from an explicit option index per row.
    pub fn with_picks(&self, picks: &[usize]) -> Mvn {
        let mut model = self.base.clone();
        for (row, &pick) in self.rows.iter().zip(picks) {
            model.tables[row.entity]
                .rows
                .insert(row.inputs.clone(), row.options[pick % row.options.len()]);
        }
        model
    }

    pub fn iter(&self) -> impl Iterator<Item = Mvn> + '_ {
        (0..self.len()).filter_map(move |i| self.get(i))
    }

    /// `.mvn` text of candidate `index` with a comment header naming its origin.
    pub fn source(&self, index: u64) -> Option<String> {
        let model = self.get(index)?;
        let mut header = vec![format!(
            "candidate {} of {} for {}",
            index,
            self.len(),
            self.concrete_name
        )];
        for (row, pick) in self.rows.iter().zip(self.picks(index)) {
            if row.options.len() > 1 {
                header.push(format!(
                    "{} {:?}: chose {} from {:?}",
                    model.entities[row.entity].name, row.inputs, row.options[pick], row.options
                ));
            }
        }
        Some(serialize_model_with_header(&model, &header))
    }
}

/// Candidate abstract models of `concrete` under `mapping`.
pub fn enumerate_candidates(concrete: &Mvn, mapping: &AbstractionMapping) -> Result<CandidateSet> {
    concrete.ensure_valid()?;
    if mapping.source_max_levels() != concrete.max_levels().as_slice() {
        return Err(Error::MappingMismatch(format!(
            "mapping domain does not match the ranges of {}",
            concrete.name
        )));
    }
    let target = mapping.target_max_levels();
    let mut base = concrete.clone();
    base.name = format!("{}_abstract", concrete.name);
    for (e, &m) in base.entities.iter_mut().zip(&target) {
        e.max_level = m;
    }
    let mut rows = Vec::new();
    for entity in 0..concrete.entity_count() {
        let inputs = &concrete.neighbourhoods[entity].inputs;
        if inputs.is_empty() {
            base.tables[entity] = NextStateTable::constant(0);
            continue;
        }
        let abstract_ranges: Vec<u8> = inputs.iter().map(|&j| target[j]).collect();
        let mut choices: Vec<BTreeSet<u8>> = vec![BTreeSet::new(); TupleIter::new(&abstract_ranges).count()];
        let strides = strides(&abstract_ranges);
        for (row, &out) in &concrete.tables[entity].rows {
            let slot: usize = row
                .iter()
                .zip(inputs)
                .zip(&strides)
                .map(|((&v, &j), &s)| mapping.apply_level(j, v) as usize * s)
                .sum();
            choices[slot].insert(mapping.apply_level(entity, out));
        }
        let mut table = NextStateTable::default();
        for (u, options) in TupleIter::new(&abstract_ranges).zip(choices) {
            let options: Vec<u8> = options.into_iter().collect();
            table.rows.insert(u.clone(), options[0]);
            rows.push(ChoiceRow {
                entity,
                inputs: u,
                options,
            });
        }
        base.tables[entity] = table;
    }
    Ok(CandidateSet {
        concrete_name: concrete.name.clone(),
        base,
        rows,
    })
}

fn strides(ranges: &[u8]) -> Vec<usize> {
    let mut strides = vec![0; ranges.len()];
    let mut acc = 1;
    for i in (0..ranges.len()).rev() {
        strides[i] = acc;
        acc *= ranges[i] as usize + 1;
    }
    strides
}
