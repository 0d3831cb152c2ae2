use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mvnabs_bench::{fixture_pairs, ring};
use mvnabs_core::oracle::{differential_suite_with, SuiteConfig};
use mvnabs_core::{async_traces, build_state_graph, check_asyn_abs, enumerate_candidates, Semantics};

fn state_graphs(c: &mut Criterion) {
    for n in [6, 9] {
        let m = ring(n);
        c.bench_function(&format!("async_graph_ring{n}"), |b| {
            b.iter(|| build_state_graph(black_box(&m), Semantics::Async).unwrap())
        });
        c.bench_function(&format!("async_attractors_ring{n}"), |b| {
            let g = build_state_graph(&m, Semantics::Async).unwrap();
            b.iter(|| black_box(&g).attractors())
        });
    }
}

fn checker(c: &mut Criterion) {
    for pair in fixture_pairs() {
        c.bench_function(&format!("check_{}", pair.name), |b| {
            b.iter(|| {
                check_asyn_abs(&pair.abstract_model, &pair.concrete, &pair.mapping)
                    .unwrap()
                    .holds
            })
        });
        c.bench_function(&format!("traces_{}", pair.name), |b| {
            b.iter(|| async_traces(&pair.concrete).unwrap().len())
        });
    }
    let pair = &fixture_pairs()[1];
    c.bench_function("mtrp_all_candidates", |b| {
        b.iter(|| {
            let set = enumerate_candidates(&pair.concrete, &pair.mapping).unwrap();
            set.iter()
                .filter(|m| check_asyn_abs(m, &pair.concrete, &pair.mapping).unwrap().holds)
                .count()
        })
    });
}

fn suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("differential");
    group.sample_size(10);
    group.bench_function("suite_100", |b| {
        b.iter(|| {
            differential_suite_with(SuiteConfig {
                seed: 1,
                count: 100,
                require_finite: false,
            })
            .passed()
        })
    });
    group.finish();
}

criterion_group!(benches, state_graphs, checker, suite);
criterion_main!(benches);
