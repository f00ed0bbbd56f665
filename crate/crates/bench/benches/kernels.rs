use std::hint::black_box;

use bmst_core::channel::{evidence_into, transmit_awgn};
use bmst_core::message::{add_node_direct, add_node_transform, equal_node, Scratch};
use bmst_core::rng::{substream, Purpose};
use bmst_core::{GroupVector, LabeledConstellation};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn messages(q: usize, deg: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..q * deg).map(|i| 1.0 + ((i * 7919) % 13) as f64).collect();
    for m in v.chunks_mut(q) {
        let s: f64 = m.iter().sum();
        m.iter_mut().for_each(|x| *x /= s);
    }
    v
}

fn add_nodes(c: &mut Criterion) {
    let mut g = c.benchmark_group("add_node");
    for q in [2usize, 4, 8, 16] {
        let ins = messages(q, 4);
        let mut outs = vec![0.0; ins.len()];
        let mut s = Scratch::default();
        g.bench_with_input(BenchmarkId::new("direct", q), &q, |b, &q| {
            b.iter(|| add_node_direct(black_box(&ins), q, &mut outs, &mut s))
        });
        g.bench_with_input(BenchmarkId::new("transform", q), &q, |b, &q| {
            b.iter(|| add_node_transform(black_box(&ins), q, &mut outs, &mut s))
        });
    }
    g.finish();
}

fn equal_nodes(c: &mut Criterion) {
    let mut g = c.benchmark_group("equal_node");
    for deg in [2usize, 4, 9] {
        let ins = messages(4, deg);
        let mut outs = vec![0.0; ins.len()];
        let mut s = Scratch::default();
        g.bench_with_input(BenchmarkId::from_parameter(deg), &deg, |b, _| {
            b.iter(|| equal_node(black_box(&ins), 4, &mut outs, None, &mut s))
        });
    }
    g.finish();
}

fn evidence(c: &mut Criterion) {
    let mut g = c.benchmark_group("evidence_1000");
    for name in ["BPSK", "8-PSK", "16-QAM"] {
        let con = LabeledConstellation::builtin(name).unwrap();
        let mut rng = substream(1, Purpose::Data, 0, 0);
        let x = GroupVector::random(con.q(), 1000, &mut rng);
        let y = transmit_awgn(&con, &x, 0.5, &mut rng).unwrap();
        let w = vec![0; 1000];
        let mut out = vec![0.0; 1000 * con.q()];
        g.bench_function(name, |b| b.iter(|| evidence_into(&con, black_box(&y), &w, &mut out)));
    }
    g.finish();
}

criterion_group!(benches, add_nodes, equal_nodes, evidence);
criterion_main!(benches);
