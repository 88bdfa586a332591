//! Criterion benchmarks for `vide-core`; see `benches/`.
