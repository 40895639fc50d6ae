//! Criterion benchmarks for taxsim live under `benches/`.
