//! Graph coloring over small finite fields via determinantal rank criteria
//! and gcd witness polynomials, plus a compiler from finite-field decision
//! trees to straight-line programs with a multiplicative-complexity bound
//! check.
//!
//! Entry points:
//!
//! - [`field::FieldCtx`] builds GF(p^n) deterministically from `p^n` specs.
//! - [`coloring::decide_colorable`] decides colorability by scanning
//!   projections of the graph's coloring array, with
//!   [`coloring::brute_force_colorable`] as an independent oracle.
//! - [`witness`] turns lines in array space into per-assignment witness
//!   polynomials whose roots mark rank-deficient points.
//! - [`tree`] is the decision-tree IR with its rewrite passes (pruning,
//!   division elimination, width reduction by retraction).
//! - [`slp`] builds and validates straight-line programs: tree-derived
//!   characteristic polynomials, binary powering and baby-step/giant-step
//!   evaluation.

pub mod cli;
pub mod coloring;
pub mod field;
pub mod graph;
pub mod linalg;
pub mod poly;
pub mod slp;
pub mod tree;
pub mod witness;
