//! Multi-valued network models, their synchronous and asynchronous state
//! graphs, trace sets, and a decision procedure for asynchronous abstraction
//! between a coarse model and a finer one.

pub mod abstraction;
pub mod checker;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod modelio;
pub mod oracle;
pub mod scc;
pub mod semantics;
pub mod traces;

pub use abstraction::{
    abstract_state, abstract_trace, abstract_trace_set, check_sync_abstraction, enumerate_candidates,
    AbstractionMapping, CandidateSet, EntityMapping, MappingError, StateMapping,
};
pub use checker::{
    check_asyn_abs, check_asyn_abs_with, AbstractionCheck, CheckOptions, CheckResult, StepTermFamily, SweepOrder,
    ValidityRule,
};
pub use error::{Error, Result};
pub use model::{Diagnostic, Entity, GlobalState, Mvn, Neighbourhood, NextStateTable, StateSpace};
pub use modelio::{
    export_dot, export_report, parse_mapping, parse_model, serialize_mapping, serialize_model, ParseError,
};
pub use oracle::{differential_suite, oracle_check, reachability_soundness_suite};
pub use semantics::{
    async_next, build_state_graph, sync_step, Attractor, AttractorKind, AttractorSet, Semantics, StateGraph,
};
pub use traces::{async_traces, sync_traces, LassoTrace, TraceSet};
