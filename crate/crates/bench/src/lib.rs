//! Benchmark-only crate; the targets live under `benches/`.
//! Run with `cargo bench -p mimocap-bench`.
