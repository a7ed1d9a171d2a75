//! Exact polynomial integration over convex polyhedral regions.
//!
//! [`Polynomial`] is a sparse rational multivariate polynomial;
//! [`Polytope`] integrates one over the closed relaxation of a set of
//! linear constraints by enumerating vertices, fanning the region into
//! simplices and applying the closed-form monomial moments of the standard
//! simplex. Degenerate (lower-dimensional) regions integrate to zero.

mod polynomial;
mod polytope;

pub use polynomial::{emit_polynomial, polynomial_from_sexp, Monomial, Polynomial};
pub use polytope::{integrate_over, Polytope};
