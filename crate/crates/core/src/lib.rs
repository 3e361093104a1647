//! Exact and approximate gradients of weighted model counts.
//!
//! The crate is organized around a CNF formula with Bernoulli literal
//! weights:
//!
//! - [`logic`]: formulas, weight maps, DIMACS IO, fuzzy relaxations, and the
//!   categorical chain encoding.
//! - [`sat`]: a CDCL solver with parity (XOR) constraints, most probable
//!   explanation, and top-k model search.
//! - [`compile`]: compilation to decision-DNNF for exact counts and exact
//!   gradients, plus brute-force oracles.
//! - [`sample`]: deterministic random streams and interpretation, exact
//!   weighted-model, hash-based, and uniform model samplers.
//! - [`estimate`]: the gradient estimators and sample-complexity bounds.
//! - [`optimize`]: logit-parametrized ascent on the log weighted model count.
//! - [`gen`]: seeded instance generators used by tests and benchmarks.

pub mod compile;
pub mod error;
pub mod estimate;
pub mod gen;
pub mod grad;
pub mod logic;
pub mod optimize;
pub mod sample;
pub mod sat;

pub use error::{Error, Result};
pub use grad::{cosine_similarity, Cosine, GradTarget, GradientVector};
pub use logic::{
    encode_categorical, fuzzy_eval, is_implicant, parse_dimacs, serialize_dimacs, CnfFormula,
    Implicant, Interpretation, Literal, ParsedInstance, TNorm, Variable, WeightMap,
};
