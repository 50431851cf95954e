//! Benchmark-only crate; see `benches/mixhit.rs`.
