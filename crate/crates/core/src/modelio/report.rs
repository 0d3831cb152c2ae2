use serde::Serialize;

/// Pretty JSON. Struct fields keep declaration order and maps are sorted,
/// so output is stable across runs.
pub fn export_report<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

/// Keys of the returned value are sorted.
pub fn to_json_value<T: Serialize + ?Sized>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::semantics::{build_state_graph, Semantics};
    use crate::traces::{LassoTrace, TraceSet};

    #[test]
    fn empty_trace_set() {
        assert_eq!(
            serde_json::to_string(&to_json_value(&TraceSet::new())).unwrap(),
            r#"{"traces":[]}"#
        );
    }

    #[test]
    fn lasso_keys() {
        let t = LassoTrace::lasso(
            vec!["00".parse().unwrap()],
            vec!["01".parse().unwrap(), "02".parse().unwrap()],
        );
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"prefix":["00"],"loop":["01","02"]}"#
        );
    }

    #[test]
    fn pl2_attractor_report() {
        let set = build_state_graph(&fixtures::pl2(), Semantics::Async)
            .unwrap()
            .attractors();
        let v = to_json_value(&set);
        assert_eq!(v["attractors"].as_array().unwrap().len(), 2);
        assert_eq!(export_report(&set), export_report(&set));
    }
}
