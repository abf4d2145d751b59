use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use strata_core::adapter::mem::{MemSchema, MemTable};
use strata_core::exec::{ExecOptions, Executor};
use strata_core::*;

/// `facts(k, v)` with `n` rows over 100 keys and `dims(k, label)` with one
/// row per key.
fn catalog(n: i64) -> Catalog {
    let int = |name| Field::new(name, ScalarType::Int64, false);
    let facts = MemTable::new(
        "bench",
        "facts",
        RowType::new(vec![int("k"), int("v")]),
        (0..n)
            .map(|i| vec![Value::Int(i % 100), Value::Int((i * 7919) % 1000)])
            .collect(),
    );
    let dims = MemTable::new(
        "bench",
        "dims",
        RowType::new(vec![int("k"), Field::new("label", ScalarType::String, false)]),
        (0..100)
            .map(|i| vec![Value::Int(i), Value::str(format!("d{i}"))])
            .collect(),
    );
    let mut cat = Catalog::new("bench");
    cat.add_schema(Arc::new(MemSchema::new(
        "bench",
        vec![Arc::new(facts) as TableRef, Arc::new(dims)],
    )))
    .unwrap();
    cat
}

fn run(session: &Session, plan: &Rel) -> usize {
    session.execute(plan).unwrap().len()
}

fn queries(c: &mut Criterion) {
    let mut group = c.benchmark_group("execute");
    for n in [1_000i64, 10_000] {
        let session = Session::new(catalog(n));
        for (name, q) in [
            ("filter", "SELECT v FROM facts WHERE v > 500"),
            ("aggregate", "SELECT k, COUNT(*), SUM(v) FROM facts GROUP BY k"),
            ("sort", "SELECT k, v FROM facts ORDER BY v DESC, k"),
            ("join", "SELECT d.label, f.v FROM facts f JOIN dims d ON f.k = d.k"),
        ] {
            let plan = session.prepare(q).unwrap().plan;
            group.bench_with_input(BenchmarkId::new(name, n), &plan, |b, p| {
                b.iter(|| run(&session, black_box(p)))
            });
        }
    }
    group.finish();
}

fn join_algorithms(c: &mut Criterion) {
    let cat = catalog(2_000);
    let session = Session::new(cat.clone());
    let plan = session
        .prepare("SELECT d.label, f.v FROM facts f JOIN dims d ON f.k = d.k")
        .unwrap()
        .plan;
    let mut group = c.benchmark_group("join");
    for (name, force_nested_loop) in [("hash", false), ("nested_loop", true)] {
        let exec = Executor::new(&cat, ExecOptions { force_nested_loop });
        group.bench_function(name, |b| b.iter(|| exec.execute(black_box(&plan)).unwrap().count()));
    }
    group.finish();
}

criterion_group!(benches, queries, join_algorithms);
criterion_main!(benches);
