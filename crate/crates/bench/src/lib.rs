//! Criterion benchmarks for `ortho-asym`; see `benches/`.
