//! Benchmarks for the antscape interpreter and GP engine. See `benches/`.
