//! Benchmark crate; see `benches/solvers.rs`.
