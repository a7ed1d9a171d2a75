//! Exact probabilistic verification of machine-learning models by reduction
//! to weighted model integration (WMI) over linear real arithmetic.
//!
//! The pipeline, bottom to top:
//!
//! * [`logic`]: variables, canonical linear atoms, quantifier-free formulas
//!   with a three-valued evaluator, if-then-else term elaboration, and a
//!   textual s-expression format.
//! * [`lp`]: exact simplex over arbitrary-precision rationals, used for
//!   feasibility checks, boundedness tests and variable bounds.
//! * [`enumeration`]: total truth assignments of a formula over its atom
//!   universe, pruned by boolean entailment and exact LRA feasibility.
//! * [`integration`]: sparse rational polynomials and exact integration over
//!   convex polytopes (vertex enumeration, fan triangulation, closed-form
//!   monomial integrals over simplices).
//! * [`weights`]: piecewise-polynomial weight functions as DAGs with a
//!   support formula, restriction to assignments, products and
//!   self-composition.
//! * [`wmi`]: the weighted model integration engine and conditional
//!   probabilities, exact over rationals.
//! * [`models`]: encoders turning ReLU networks, density-estimation trees,
//!   forests thereof, sum-product networks and ensembles into formulas and
//!   weights; greedy density-tree training.
//! * [`properties`]: probabilistic property encoders (local and noise
//!   robustness, equivalence, demographic parity, individual fairness,
//!   monotonicity).
//! * [`bounds`]: interval bound propagation used to simplify encodings
//!   before enumeration without changing any computed probability.
//! * [`verifier`]: the top-level verification loop with incremental
//!   partitioning, early exit and a sampling-based partition heuristic.
//! * [`oracle`]: Monte Carlo estimators with confidence intervals, used to
//!   cross-validate the exact engine (never as a solver backend).
//! * [`io`]: JSON model/task formats and typed CSV datasets.
//! * [`gen`]: seeded data and problem generators for benchmarks.
//! * [`train`]: small float-only reference trainers for benchmark models;
//!   not part of the verified surface.

pub mod bounds;
pub mod enumeration;
pub mod gen;
pub mod guide;
pub mod integration;
pub mod io;
pub mod logic;
pub mod lp;
pub mod models;
pub mod oracle;
pub mod properties;
pub mod rational;
pub mod train;
pub mod verifier;
pub mod weights;
pub mod wmi;

mod error;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
