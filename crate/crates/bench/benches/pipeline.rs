use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qbforge::deciders::{decide_mc_nae2, decide_monotone_12};
use qbforge::gadgets::{build_named, verify_contract, GadgetKind};
use qbforge::io::{generate_instance, parse_qext, serialize_qext, GeneratorConfig};
use qbforge::oracle::{decide_forall_exists, Budget};
use qbforge::reductions::{run_route, Route};
use qbforge::{QuantifiedFormula, Semantics, VariableAllocator};

fn instance(class: Option<&str>, p: usize, q: usize, m: usize, sem: Semantics) -> QuantifiedFormula {
    generate_instance(&GeneratorConfig {
        seed: 7,
        universals: p,
        existentials: q,
        clauses: m,
        class: class.map(str::to_string),
        semantics: sem,
        ..GeneratorConfig::default()
    })
    .expect("benchmark instance")
}

fn gadgets(c: &mut Criterion) {
    let mut g = c.benchmark_group("gadget-contract");
    for kind in [GadgetKind::Q1, GadgetKind::Q3, GadgetKind::E, GadgetKind::Ne] {
        let gadget = build_named(kind, &mut VariableAllocator::starting_at(1)).unwrap();
        g.bench_function(kind.name(), |b| b.iter(|| verify_contract(black_box(&gadget), Budget::default()).unwrap()));
    }
    g.finish();
}

fn deciders(c: &mut Criterion) {
    let mut g = c.benchmark_group("decider");
    for q in [30, 300, 3000] {
        let mc = instance(Some("mc-nae2"), 0, q, 0, Semantics::Nae);
        g.bench_with_input(BenchmarkId::new("mc-nae2", q), &mc, |b, f| b.iter(|| decide_mc_nae2(f).unwrap()));
        let m12 = instance(Some("mono-12"), q, q, 0, Semantics::Nae);
        g.bench_with_input(BenchmarkId::new("mono-12", q), &m12, |b, f| b.iter(|| decide_monotone_12(f).unwrap()));
    }
    let small = instance(Some("mono-12"), 6, 6, 0, Semantics::Nae);
    g.bench_function("oracle/mono-12-6", |b| b.iter(|| decide_forall_exists(black_box(&small), Budget::default()).unwrap()));
    g.finish();
}

fn reductions(c: &mut Criterion) {
    let mut g = c.benchmark_group("route");
    g.sample_size(20);
    let nae = instance(None, 2, 3, 3, Semantics::Nae);
    let mono14 = instance(Some("mono14"), 3, 3, 0, Semantics::Nae);
    let sat3 = instance(Some("3sat3-raw"), 0, 30, 0, Semantics::Sat);
    for (name, src) in [("nae-to-b2222", &nae), ("nae-to-mono14", &nae), ("mono14-to-mono13", &mono14), ("3sat3-to-ae:1021", &sat3)] {
        let route = Route::parse(name).unwrap();
        g.bench_function(name, |b| b.iter(|| run_route(route, black_box(src)).unwrap()));
    }
    g.finish();
}

fn io(c: &mut Criterion) {
    let f = run_route(Route::NaeToB2222, &instance(None, 2, 3, 3, Semantics::Nae)).unwrap().target().clone();
    let text = serialize_qext(&f);
    c.bench_function("qext/serialize", |b| b.iter(|| serialize_qext(black_box(&f))));
    c.bench_function("qext/parse", |b| b.iter(|| parse_qext(black_box(&text)).unwrap()));
}

criterion_group!(benches, gadgets, deciders, reductions, io);
criterion_main!(benches);
