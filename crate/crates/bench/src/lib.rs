//! Benchmark-only crate; see `benches/fbf.rs`.
