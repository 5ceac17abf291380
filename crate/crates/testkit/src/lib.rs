//! Test support: random instance generators and brute-force oracles.
//!
//! Oracles here recompute results straight from their definitions and share
//! no code with the implementations they check.

pub mod gen;
pub mod metrics_oracle;
pub mod simplify_oracle;
