//! Criterion benchmarks for determinization live in `benches/`.
