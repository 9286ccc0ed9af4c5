//! Benchmarks for the hot kernels of `uhisr-core`; see `benches/`.
