//! Criterion benchmarks for locc-spectrum live under `benches/`.
