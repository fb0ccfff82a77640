//! Benchmarks for the pricing library live in `benches/`.
