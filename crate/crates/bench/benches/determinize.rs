use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use catdet::determinize::{classical_subset_construction, det_span, mdet, DEFAULT_POWERSET_CAP};
use catdet::gen::{classical_nfa, span_automaton, AutomatonParams};

fn determinization(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let spans: Vec<_> = (0..50).map(|_| span_automaton(&mut rng, &AutomatonParams::default())).collect();
    let wide = AutomatonParams { max_states: 8, ..Default::default() };
    let wide: Vec<_> = (0..10).map(|_| span_automaton(&mut rng, &wide)).collect();
    let nfas: Vec<_> = (0..50).map(|_| classical_nfa(&mut rng, 8, 3, 0.3)).collect();
    let nfa_spans: Vec<_> = nfas.iter().map(|n| n.to_span_automaton().unwrap()).collect();

    c.bench_function("det_span/random x50", |b| {
        b.iter(|| spans.iter().map(|a| det_span(black_box(a), DEFAULT_POWERSET_CAP).unwrap()).count())
    });
    c.bench_function("det_span/8 states x10", |b| {
        b.iter(|| wide.iter().map(|a| det_span(black_box(a), DEFAULT_POWERSET_CAP).unwrap()).count())
    });
    c.bench_function("mdet/expand len 4 x50", |b| {
        b.iter(|| spans.iter().map(|a| mdet(black_box(a)).unwrap().expand(4096, 4).unwrap()).count())
    });
    c.bench_function("classical/subset construction x50", |b| {
        b.iter(|| nfas.iter().map(|n| classical_subset_construction(black_box(n), DEFAULT_POWERSET_CAP).unwrap()).count())
    });
    c.bench_function("classical/categorical x50", |b| {
        b.iter(|| nfa_spans.iter().map(|a| det_span(black_box(a), DEFAULT_POWERSET_CAP).unwrap()).count())
    });
}

criterion_group!(benches, determinization);
criterion_main!(benches);
