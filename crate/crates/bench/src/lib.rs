//! Inputs shared by the benchmarks.

use mvnabs_core::{fixtures, AbstractionMapping, Entity, Mvn, Neighbourhood, NextStateTable};

pub struct Pair {
    pub name: &'static str,
    pub abstract_model: Mvn,
    pub concrete: Mvn,
    pub mapping: AbstractionMapping,
}

pub fn fixture_pairs() -> Vec<Pair> {
    vec![
        Pair {
            name: "apl2_pl2",
            abstract_model: fixtures::apl2(),
            concrete: fixtures::pl2(),
            mapping: fixtures::cro_mapping(),
        },
        Pair {
            name: "atrp_mtrp",
            abstract_model: fixtures::atrp(),
            concrete: fixtures::mtrp(),
            mapping: fixtures::trp_mapping(),
        },
    ]
}

/// A ring of `n` ternary entities, each copying a threshold of its predecessor.
pub fn ring(n: usize) -> Mvn {
    let entities = (0..n).map(|i| Entity::new(format!("g{i}"), 2)).collect();
    let neighbourhoods = (0..n).map(|i| Neighbourhood::new(vec![(i + n - 1) % n])).collect();
    let tables = (0..n)
        .map(|i| {
            let flip = if i == 0 { 2 } else { 0 };
            NextStateTable::new(
                (0..=2u8)
                    .map(|v| (vec![v], if flip == 2 { 2 - v } else { v }))
                    .collect(),
            )
        })
        .collect();
    Mvn::new(format!("Ring{n}"), entities, neighbourhoods, tables)
}
