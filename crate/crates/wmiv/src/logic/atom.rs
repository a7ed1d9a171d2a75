//! Canonical atoms of the SMT(LRA) fragment.
//!
//! A linear atom is stored as `sum(a_i * x_i) rel b` with integer
//! coefficients, `rel` restricted to one of `<=`, `<`, `=`,
//! `gcd(a_1..a_n, b) = 1` and a positive coefficient on the
//! lowest-ordered variable. Construction rewrites `>=`, `>` and negative
//! leading signs into negated literals over canonical atoms, so
//! `(x + y <= 1)` and `(2x + 2y <= 2)` are the same atom and `(x > 1)` is
//! the negation of `(x <= 1)`.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, Integer};
use num_traits::{Signed, Zero};

use crate::logic::{LinearExpr, Variable};
use crate::rational::Rat;

/// Relation of a canonical linear atom.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Rel {
    Le,
    Lt,
    Eq,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Eq => "=",
        }
    }
}

/// Canonical linear atom `sum(a_i * x_i) rel b`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LraAtom {
    coeffs: Vec<(Variable, BigInt)>,
    rhs: BigInt,
    rel: Rel,
}

impl LraAtom {
    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn coeffs(&self) -> &[(Variable, BigInt)] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &BigInt {
        &self.rhs
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.coeffs.iter().map(|(v, _)| v)
    }

    /// Left-hand side as a rational linear expression (no constant part).
    pub fn lhs_expr(&self) -> LinearExpr {
        LinearExpr::combination(
            self.coeffs
                .iter()
                .map(|(v, c)| (Rat::from_integer(c.clone()), v)),
            Rat::zero(),
        )
    }

    /// `lhs - rhs` as a linear expression; the atom holds iff this is
    /// `rel` 0.
    pub fn gap_expr(&self) -> LinearExpr {
        self.lhs_expr() - LinearExpr::constant(Rat::from_integer(self.rhs.clone()))
    }

    /// Truth value at a total real-valued point, `None` if a variable is
    /// missing.
    pub fn eval(&self, point: &BTreeMap<Variable, Rat>) -> Option<bool> {
        let lhs = self.lhs_expr().eval(point)?;
        let rhs = Rat::from_integer(self.rhs.clone());
        Some(match self.rel {
            Rel::Le => lhs <= rhs,
            Rel::Lt => lhs < rhs,
            Rel::Eq => lhs == rhs,
        })
    }
}

/// An atom: boolean proposition or canonical linear atom. Boolean atoms
/// order before linear ones, which fixes the branching order of the
/// assignment enumerator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Bool(Variable),
    Lra(LraAtom),
}

impl Atom {
    pub fn is_bool(&self) -> bool {
        matches!(self, Atom::Bool(_))
    }

    pub fn as_lra(&self) -> Option<&LraAtom> {
        match self {
            Atom::Bool(_) => None,
            Atom::Lra(a) => Some(a),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Bool(v) => write!(f, "{v}"),
            Atom::Lra(a) => write!(f, "{} {} {}", a.lhs_expr(), a.rel.symbol(), a.rhs),
        }
    }
}

/// Result of canonicalizing a comparison: a constant truth value or a
/// literal over a canonical atom.
#[derive(Clone, Debug)]
pub enum CanonLit {
    Const(bool),
    Lit(Atom, bool),
}

/// Canonicalizes `diff rel 0`. Only `<=`, `<` and `=` are accepted here;
/// the formula layer rewrites the remaining comparisons.
pub fn canonicalize(diff: &LinearExpr, rel: Rel) -> CanonLit {
    if diff.is_constant() {
        let c = diff.constant_part();
        let truth = match rel {
            Rel::Le => c <= &Rat::zero(),
            Rel::Lt => c < &Rat::zero(),
            Rel::Eq => c.is_zero(),
        };
        return CanonLit::Const(truth);
    }

    // Scale to integers: multiply by the lcm of all denominators.
    let mut lcm = BigInt::from(1);
    for (_, c) in diff.terms() {
        lcm = lcm.lcm(c.denom());
    }
    lcm = lcm.lcm(diff.constant_part().denom());
    let mut coeffs: Vec<(Variable, BigInt)> = diff
        .terms()
        .map(|(v, c)| (v.clone(), (c * Rat::from_integer(lcm.clone())).to_integer()))
        .collect();
    let mut rhs = -(diff.constant_part() * Rat::from_integer(lcm.clone())).to_integer();

    // Divide out the common content.
    let mut g = rhs.abs();
    for (_, c) in &coeffs {
        g = g.gcd(c);
    }
    if !g.is_zero() && g != BigInt::from(1) {
        for (_, c) in &mut coeffs {
            *c /= &g;
        }
        rhs /= &g;
    }

    let leading_negative = coeffs[0].1.is_negative();
    if !leading_negative {
        return CanonLit::Lit(Atom::Lra(LraAtom { coeffs, rhs, rel }), true);
    }
    for (_, c) in &mut coeffs {
        *c = -c.clone();
    }
    rhs = -rhs;
    match rel {
        // -e = -b  is the same atom.
        Rel::Eq => CanonLit::Lit(Atom::Lra(LraAtom { coeffs, rhs, rel }), true),
        // e <= b  <=>  not(-e < -b)
        Rel::Le => CanonLit::Lit(
            Atom::Lra(LraAtom {
                coeffs,
                rhs,
                rel: Rel::Lt,
            }),
            false,
        ),
        // e < b  <=>  not(-e <= -b)
        Rel::Lt => CanonLit::Lit(
            Atom::Lra(LraAtom {
                coeffs,
                rhs,
                rel: Rel::Le,
            }),
            false,
        ),
    }
}

/// A linear constraint `expr rel 0` produced by applying a polarity to an
/// atom; the form consumed by the feasibility checker and the integrator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Constraint {
    pub expr: LinearExpr,
    pub rel: ConstraintRel,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConstraintRel {
    Le,
    Lt,
    Eq,
    Ne,
}

impl LraAtom {
    /// The constraint asserted by this atom under the given polarity.
    pub fn constraint(&self, polarity: bool) -> Constraint {
        let gap = self.gap_expr();
        match (self.rel, polarity) {
            (Rel::Le, true) => Constraint {
                expr: gap,
                rel: ConstraintRel::Le,
            },
            (Rel::Le, false) => Constraint {
                expr: -gap,
                rel: ConstraintRel::Lt,
            },
            (Rel::Lt, true) => Constraint {
                expr: gap,
                rel: ConstraintRel::Lt,
            },
            (Rel::Lt, false) => Constraint {
                expr: -gap,
                rel: ConstraintRel::Le,
            },
            (Rel::Eq, true) => Constraint {
                expr: gap,
                rel: ConstraintRel::Eq,
            },
            (Rel::Eq, false) => Constraint {
                expr: gap,
                rel: ConstraintRel::Ne,
            },
        }
    }
}
