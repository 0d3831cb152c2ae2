//! The reference models: the lambda switch pair (PL2 and its Boolean
//! abstraction APL2) and the tryptophan pair (MTRP and ATRP), with their
//! abstraction mappings.

use crate::abstraction::AbstractionMapping;
use crate::model::Mvn;
use crate::modelio::{parse_mapping, parse_model};

pub const PL2_SRC: &str = include_str!("../fixtures/pl2.mvn");
pub const APL2_SRC: &str = include_str!("../fixtures/apl2.mvn");
pub const CRO_MAP_SRC: &str = include_str!("../fixtures/cro.map");
pub const MTRP_SRC: &str = include_str!("../fixtures/mtrp.mvn");
pub const ATRP_SRC: &str = include_str!("../fixtures/atrp.mvn");
pub const TRP_MAP_SRC: &str = include_str!("../fixtures/trp.map");

pub const ALL_MODEL_SOURCES: [&str; 4] = [PL2_SRC, APL2_SRC, MTRP_SRC, ATRP_SRC];

pub fn pl2() -> Mvn {
    parse_model(PL2_SRC).expect("PL2 fixture parses")
}

pub fn apl2() -> Mvn {
    parse_model(APL2_SRC).expect("APL2 fixture parses")
}

pub fn mtrp() -> Mvn {
    parse_model(MTRP_SRC).expect("MTRP fixture parses")
}

pub fn atrp() -> Mvn {
    parse_model(ATRP_SRC).expect("ATRP fixture parses")
}

/// `Cro: 0->0, 1->1, 2->1` over PL2.
pub fn cro_mapping() -> AbstractionMapping {
    parse_mapping(CRO_MAP_SRC, &pl2()).expect("Cro mapping fixture parses")
}

/// Identity on TrpE and TrpR, `0->0, 1->1, 2->1` on TrpExt and Trp.
pub fn trp_mapping() -> AbstractionMapping {
    parse_mapping(TRP_MAP_SRC, &mtrp()).expect("Trp mapping fixture parses")
}
