//! Criterion benchmarks for the Monte Carlo kernels; see `benches/`.
