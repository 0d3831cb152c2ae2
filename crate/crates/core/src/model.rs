//! Multi-valued network value types and structural validation.
//!
//! A model is a list of entities, each with a discrete level range
//! `0..=max_level`, a neighbourhood (the ordered list of entities its next
//! level depends on) and a next-state table over the neighbourhood levels.
//! Entities with an empty neighbourhood are input entities: they keep their
//! level forever.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest level any entity may take.
pub const MAX_LEVEL: u8 = 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub name: String,
    pub max_level: u8,
}

impl Entity {
    pub fn new(name: impl Into<String>, max_level: u8) -> Self {
        Entity {
            name: name.into(),
            max_level,
        }
    }

    /// Number of levels, `max_level + 1`.
    pub fn range_size(&self) -> usize {
        self.max_level as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Neighbourhood {
    /// Entity indices, in table column order.
    pub inputs: Vec<usize>,
}

impl Neighbourhood {
    pub fn new(inputs: Vec<usize>) -> Self {
        Neighbourhood { inputs }
    }

    pub fn is_input_entity(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Next-state table: input tuple (one level per neighbourhood input) to output level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NextStateTable {
    pub rows: BTreeMap<Vec<u8>, u8>,
}

impl NextStateTable {
    pub fn new(rows: BTreeMap<Vec<u8>, u8>) -> Self {
        NextStateTable { rows }
    }

    /// The single-row table carried by input entities.
    pub fn constant(level: u8) -> Self {
        let mut rows = BTreeMap::new();
        rows.insert(Vec::new(), level);
        NextStateTable { rows }
    }

    pub fn lookup(&self, inputs: &[u8]) -> Option<u8> {
        self.rows.get(inputs).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mvn {
    pub name: String,
    pub entities: Vec<Entity>,
    pub neighbourhoods: Vec<Neighbourhood>,
    pub tables: Vec<NextStateTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    NoEntities,
    DuplicateEntity,
    LevelBound,
    ShapeMismatch,
    UnknownInput,
    DuplicateInput,
    MissingRow,
    MalformedRow,
    OutputOutOfRange,
}

/// One violated model invariant, located by entity and (where relevant) table row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub entity: Option<String>,
    pub row: Option<Vec<u8>>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.entity, &self.row) {
            (Some(e), Some(r)) => write!(f, "{e} row {r:?}: {}", self.message),
            (Some(e), None) => write!(f, "{e}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl Mvn {
    pub fn new(
        name: impl Into<String>,
        entities: Vec<Entity>,
        neighbourhoods: Vec<Neighbourhood>,
        tables: Vec<NextStateTable>,
    ) -> Self {
        Mvn {
            name: name.into(),
            entities,
            neighbourhoods,
            tables,
        }
    }

    /// Builds the model and rejects it unless `validate` comes back empty.
    pub fn try_new(
        name: impl Into<String>,
        entities: Vec<Entity>,
        neighbourhoods: Vec<Neighbourhood>,
        tables: Vec<NextStateTable>,
    ) -> Result<Self> {
        let model = Mvn::new(name, entities, neighbourhoods, tables);
        model.ensure_valid()?;
        Ok(model)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.name == name)
    }

    pub fn is_input_entity(&self, entity: usize) -> bool {
        self.neighbourhoods[entity].is_input_entity()
    }

    pub fn max_levels(&self) -> Vec<u8> {
        self.entities.iter().map(|e| e.max_level).collect()
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace::new(self.max_levels())
    }

    /// Product of the entity range sizes, saturating at `u64::MAX`.
    pub fn state_space_size(&self) -> u64 {
        self.entities
            .iter()
            .try_fold(1u64, |acc, e| acc.checked_mul(e.range_size() as u64))
            .unwrap_or(u64::MAX)
    }

    /// Level entity `entity` would take if updated in `state`.
    pub fn next_level(&self, entity: usize, state: &GlobalState) -> u8 {
        let inputs = &self.neighbourhoods[entity].inputs;
        if inputs.is_empty() {
            return state.level(entity);
        }
        let key: Vec<u8> = inputs.iter().map(|&j| state.level(j)).collect();
        self.tables[entity]
            .lookup(&key)
            .expect("next-state table is total on a validated model")
    }

    /// True when both models declare the same entity names and neighbourhoods.
    pub fn same_structure(&self, other: &Mvn) -> bool {
        self.entities.len() == other.entities.len()
            && self.entities.iter().zip(&other.entities).all(|(a, b)| a.name == b.name)
            && self.neighbourhoods == other.neighbourhoods
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            let joined: Vec<String> = diags.iter().map(ToString::to_string).collect();
            Err(Error::InvalidModel(joined.join("; ")))
        }
    }

    /// Every violated invariant; empty for a valid model.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let diag = |kind, entity: Option<&str>, row: Option<Vec<u8>>, message: String| Diagnostic {
            kind,
            entity: entity.map(str::to_owned),
            row,
            message,
        };

        if self.entities.is_empty() {
            out.push(diag(
                DiagnosticKind::NoEntities,
                None,
                None,
                "model has no entities".into(),
            ));
            return out;
        }
        let k = self.entities.len();
        if self.neighbourhoods.len() != k || self.tables.len() != k {
            out.push(diag(
                DiagnosticKind::ShapeMismatch,
                None,
                None,
                format!(
                    "{} entities but {} neighbourhoods and {} tables",
                    k,
                    self.neighbourhoods.len(),
                    self.tables.len()
                ),
            ));
            return out;
        }

        let mut seen = HashSet::new();
        for e in &self.entities {
            if !seen.insert(e.name.as_str()) {
                out.push(diag(
                    DiagnosticKind::DuplicateEntity,
                    Some(&e.name),
                    None,
                    "entity declared more than once".into(),
                ));
            }
            if e.max_level < 1 || e.max_level > MAX_LEVEL {
                out.push(diag(
                    DiagnosticKind::LevelBound,
                    Some(&e.name),
                    None,
                    format!("max level {} outside 1..={MAX_LEVEL}", e.max_level),
                ));
            }
        }

        for (i, (nb, table)) in self.neighbourhoods.iter().zip(&self.tables).enumerate() {
            let name = self.entities[i].name.as_str();
            let mut structural_ok = true;
            let mut seen_inputs = HashSet::new();
            for &j in &nb.inputs {
                if j >= k {
                    out.push(diag(
                        DiagnosticKind::UnknownInput,
                        Some(name),
                        None,
                        format!("neighbourhood refers to entity index {j}"),
                    ));
                    structural_ok = false;
                } else if !seen_inputs.insert(j) {
                    out.push(diag(
                        DiagnosticKind::DuplicateInput,
                        Some(name),
                        None,
                        format!("{} listed twice in neighbourhood", self.entities[j].name),
                    ));
                    structural_ok = false;
                }
            }
            if !structural_ok {
                continue;
            }
            let ranges: Vec<u8> = nb.inputs.iter().map(|&j| self.entities[j].max_level).collect();
            for (row, &output) in &table.rows {
                let in_range = row.len() == ranges.len() && row.iter().zip(&ranges).all(|(&v, &m)| v <= m);
                if !in_range {
                    out.push(diag(
                        DiagnosticKind::MalformedRow,
                        Some(name),
                        Some(row.clone()),
                        "row does not match the neighbourhood ranges".into(),
                    ));
                } else if output > self.entities[i].max_level {
                    out.push(diag(
                        DiagnosticKind::OutputOutOfRange,
                        Some(name),
                        Some(row.clone()),
                        format!("output {} exceeds max level {}", output, self.entities[i].max_level),
                    ));
                }
            }
            for row in TupleIter::new(&ranges) {
                if !table.rows.contains_key(&row) {
                    out.push(diag(
                        DiagnosticKind::MissingRow,
                        Some(name),
                        Some(row),
                        "table is not total: row missing".into(),
                    ));
                }
            }
        }
        out
    }
}

/// A global state: one level per entity, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState(Vec<u8>);

impl GlobalState {
    pub fn new(levels: Vec<u8>) -> Self {
        GlobalState(levels)
    }

    pub fn levels(&self) -> &[u8] {
        &self.0
    }

    pub fn level(&self, entity: usize) -> u8 {
        self.0[entity]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy of this state with one entity's level replaced.
    pub fn with_level(&self, entity: usize, level: u8) -> Self {
        let mut levels = self.0.clone();
        levels[entity] = level;
        GlobalState(levels)
    }

    /// Label with `.` separators, used whenever some level needs two digits.
    pub fn dotted(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(u8::to_string).collect();
        parts.join(".")
    }

    /// `name=level` pairs, e.g. `CI=1 Cro=2`.
    pub fn named(&self, model: &Mvn) -> String {
        let parts: Vec<String> = model
            .entities
            .iter()
            .zip(&self.0)
            .map(|(e, v)| format!("{}={}", e.name, v))
            .collect();
        parts.join(" ")
    }
}

impl fmt::Display for GlobalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&v| v < 10) {
            for v in &self.0 {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            f.write_str(&self.dotted())
        }
    }
}

impl Serialize for GlobalState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for GlobalState {
    type Err = Error;

    /// Accepts `"012"` (one digit per entity) or `"0.12.3"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::StateOutOfSpace(s.to_owned());
        let levels = if s.contains('.') {
            s.split('.')
                .map(|p| p.parse::<u8>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad))
                .collect::<Result<Vec<_>>>()?
        };
        if levels.is_empty() {
            return Err(bad());
        }
        Ok(GlobalState(levels))
    }
}

/// Dense mixed-radix indexing of the global state space.
///
/// Index order equals lexicographic order of the level tuples, first entity
/// most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    max_levels: Vec<u8>,
    strides: Vec<usize>,
    size: usize,
}

impl StateSpace {
    pub fn new(max_levels: Vec<u8>) -> Self {
        let mut strides = vec![0; max_levels.len()];
        let mut size = 1usize;
        for i in (0..max_levels.len()).rev() {
            strides[i] = size;
            size = size.saturating_mul(max_levels[i] as usize + 1);
        }
        StateSpace {
            max_levels,
            strides,
            size,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn max_levels(&self) -> &[u8] {
        &self.max_levels
    }

    pub fn contains(&self, state: &GlobalState) -> bool {
        state.len() == self.max_levels.len() && state.levels().iter().zip(&self.max_levels).all(|(v, m)| v <= m)
    }

    pub fn index(&self, state: &GlobalState) -> Option<usize> {
        if !self.contains(state) {
            return None;
        }
        Some(
            state
                .levels()
                .iter()
                .zip(&self.strides)
                .map(|(&v, &s)| v as usize * s)
                .sum(),
        )
    }

    pub fn state(&self, mut index: usize) -> GlobalState {
        let mut levels = Vec::with_capacity(self.max_levels.len());
        for &s in &self.strides {
            levels.push((index / s) as u8);
            index %= s;
        }
        GlobalState(levels)
    }

    pub fn iter(&self) -> impl Iterator<Item = GlobalState> + '_ {
        (0..self.size).map(move |i| self.state(i))
    }

    /// Display label; dotted when any entity has more than ten levels.
    pub fn label(&self, state: &GlobalState) -> String {
        if self.max_levels.iter().any(|&m| m >= 10) {
            state.dotted()
        } else {
            state.to_string()
        }
    }
}

/// Lexicographic enumeration of all tuples with `tuple[i] <= max[i]`.
pub(crate) struct TupleIter {
    max: Vec<u8>,
    next: Option<Vec<u8>>,
}

impl TupleIter {
    pub(crate) fn new(max: &[u8]) -> Self {
        TupleIter {
            max: max.to_vec(),
            next: Some(vec![0; max.len()]),
        }
    }
}

impl Iterator for TupleIter {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if succ[i] < self.max[i] {
                succ[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}
