//! Criterion benchmarks for the engine live in `benches/`.
