//! Criterion benchmarks for the `halfplane` crate live in `benches/`.
