//! Variables, linear expressions, canonical atoms, formulas and terms.

pub mod atom;
mod assignment;
mod formula;
mod linexpr;
mod term;
pub mod text;
mod var;

pub use assignment::{Assignment, Valuation};
pub use atom::{Atom, Constraint, ConstraintRel, LraAtom, Rel};
pub use formula::{rename_atom, CmpOp, Formula, FormulaNode};
pub use linexpr::LinearExpr;
pub use term::{
    elaborate_terms, elaborate_terms_named, fresh_renaming, Elaboration, Term, TermCond,
    TermFormula,
};
pub use var::{Sort, Variable};
