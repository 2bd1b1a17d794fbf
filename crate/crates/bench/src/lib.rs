//! Benchmarks live in benches/engines.rs.
