//! Criterion benchmarks for the simulator kernels and training step; see `benches/`.
