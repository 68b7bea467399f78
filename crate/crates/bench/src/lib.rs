//! Benchmarks for the numerical kernels of `wdro-core`; see `benches/`.
