//! Benchmark harness and instance bundles behind the `wmcgrad` binary.

pub mod bench;
pub mod instances;
