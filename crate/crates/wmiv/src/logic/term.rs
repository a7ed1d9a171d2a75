//! Real-valued terms with if-then-else nodes, and their eager elaboration
//! into plain formulas.
//!
//! Elaboration replaces every ite node by a fresh real variable `t`
//! guarded by two implications: `cond -> t = then` and
//! `not cond -> t = else`. Identical ite nodes share one fresh variable.
//! For any total assignment to the original variables the elaborated
//! constraints admit exactly one extension to the fresh variables.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::logic::{CmpOp, Formula, LinearExpr, Valuation, Variable};
use crate::rational::Rat;

/// A term: linear expression, scaled sum of terms, or if-then-else.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Expr(LinearExpr),
    Add(Vec<Term>),
    Scale(Rat, Box<Term>),
    Ite(Box<TermCond>, Box<Term>, Box<Term>),
}

/// Condition of an ite term: a plain formula or a comparison of terms.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TermCond {
    Formula(Formula),
    Cmp(Term, CmpOp, Term),
}

impl Term {
    pub fn expr(e: LinearExpr) -> Self {
        Term::Expr(e)
    }

    pub fn var(v: &Variable) -> Self {
        Term::Expr(LinearExpr::var(v))
    }

    pub fn constant(c: Rat) -> Self {
        Term::Expr(LinearExpr::constant(c))
    }

    pub fn ite(cond: TermCond, then: Term, els: Term) -> Self {
        Term::Ite(Box::new(cond), Box::new(then), Box::new(els))
    }

    pub fn sub(a: Term, b: Term) -> Self {
        match (a, b) {
            (Term::Expr(x), Term::Expr(y)) => Term::Expr(x - y),
            (a, b) => Term::Add(vec![a, Term::Scale(-Rat::from_integer(1.into()), Box::new(b))]),
        }
    }

    /// `|a - b|` as an ite term.
    pub fn abs_diff(a: Term, b: Term) -> Self {
        let cond = TermCond::Cmp(a.clone(), CmpOp::Lt, b.clone());
        Term::ite(cond, Term::sub(b.clone(), a.clone()), Term::sub(a, b))
    }

    /// Binary maximum as an ite term.
    pub fn max2(a: Term, b: Term) -> Self {
        let cond = TermCond::Cmp(a.clone(), CmpOp::Lt, b.clone());
        Term::ite(cond, b, a.clone())
    }

    /// Maximum of one or more terms, folded pairwise left to right.
    pub fn max_of(terms: Vec<Term>) -> Option<Self> {
        let mut it = terms.into_iter();
        let first = it.next()?;
        Some(it.fold(first, Term::max2))
    }

    /// Evaluation with exact ite semantics; `None` on a missing variable.
    pub fn eval(&self, point: &Valuation) -> Option<Rat> {
        match self {
            Term::Expr(e) => e.eval(&point.reals),
            Term::Add(ts) => {
                let mut acc = Rat::from_integer(0.into());
                for t in ts {
                    acc += t.eval(point)?;
                }
                Some(acc)
            }
            Term::Scale(k, t) => Some(k * t.eval(point)?),
            Term::Ite(c, a, b) => {
                if c.eval(point)? {
                    a.eval(point)
                } else {
                    b.eval(point)
                }
            }
        }
    }
}

impl TermCond {
    pub fn eval(&self, point: &Valuation) -> Option<bool> {
        match self {
            TermCond::Formula(f) => f.eval_point(point),
            TermCond::Cmp(a, op, b) => {
                let (x, y) = (a.eval(point)?, b.eval(point)?);
                Some(match op {
                    CmpOp::Le => x <= y,
                    CmpOp::Lt => x < y,
                    CmpOp::Ge => x >= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                })
            }
        }
    }
}

/// A formula whose atoms may compare ite terms.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TermFormula {
    Pure(Formula),
    Cmp(Term, CmpOp, Term),
    Not(Box<TermFormula>),
    And(Vec<TermFormula>),
    Or(Vec<TermFormula>),
    Implies(Box<TermFormula>, Box<TermFormula>),
    Iff(Box<TermFormula>, Box<TermFormula>),
}

impl TermFormula {
    pub fn cmp(a: Term, op: CmpOp, b: Term) -> Self {
        TermFormula::Cmp(a, op, b)
    }
}

/// Result of term elaboration.
#[derive(Clone, Debug)]
pub struct Elaboration {
    /// Guard implications followed by the rewritten core formula.
    pub formula: Formula,
    /// Fresh variables, in introduction order.
    pub fresh: Vec<Variable>,
    /// The guard implications alone.
    pub definitions: Vec<Formula>,
}

struct Elaborator {
    defs: Vec<Formula>,
    fresh: Vec<Variable>,
    memo: HashMap<Term, LinearExpr>,
    prefix: String,
}

impl Elaborator {
    fn term(&mut self, t: &Term) -> LinearExpr {
        match t {
            Term::Expr(e) => e.clone(),
            Term::Add(ts) => ts
                .iter()
                .map(|t| self.term(t))
                .fold(LinearExpr::zero(), |a, b| a + b),
            Term::Scale(k, t) => self.term(t) * k.clone(),
            Term::Ite(cond, then, els) => {
                if let Some(e) = self.memo.get(t) {
                    return e.clone();
                }
                let c = self.cond(cond);
                let then_e = self.term(then);
                let else_e = self.term(els);
                let fresh = Variable::real(format!("{}{}", self.prefix, self.fresh.len()));
                let fe = LinearExpr::var(&fresh);
                self.defs
                    .push(Formula::implies(c.clone(), Formula::eq_expr(&fe, &then_e)));
                self.defs.push(Formula::implies(
                    Formula::not(c),
                    Formula::eq_expr(&fe, &else_e),
                ));
                self.fresh.push(fresh);
                self.memo.insert(t.clone(), fe.clone());
                fe
            }
        }
    }

    fn cond(&mut self, c: &TermCond) -> Formula {
        match c {
            TermCond::Formula(f) => f.clone(),
            TermCond::Cmp(a, op, b) => {
                let (x, y) = (self.term(a), self.term(b));
                Formula::cmp(&x, *op, &y)
            }
        }
    }

    fn formula(&mut self, tf: &TermFormula) -> Formula {
        match tf {
            TermFormula::Pure(f) => f.clone(),
            TermFormula::Cmp(a, op, b) => {
                let (x, y) = (self.term(a), self.term(b));
                Formula::cmp(&x, *op, &y)
            }
            TermFormula::Not(f) => Formula::not(self.formula(f)),
            TermFormula::And(fs) => Formula::and(fs.iter().map(|f| self.formula(f)).collect::<Vec<_>>()),
            TermFormula::Or(fs) => Formula::or(fs.iter().map(|f| self.formula(f)).collect::<Vec<_>>()),
            TermFormula::Implies(a, b) => {
                let (x, y) = (self.formula(a), self.formula(b));
                Formula::implies(x, y)
            }
            TermFormula::Iff(a, b) => {
                let (x, y) = (self.formula(a), self.formula(b));
                Formula::iff(x, y)
            }
        }
    }
}

/// Eagerly elaborates all ite terms, returning the conjunction of the
/// guard implications with the rewritten formula.
pub fn elaborate_terms(tf: &TermFormula) -> Elaboration {
    elaborate_terms_named(tf, "t")
}

/// Same as [`elaborate_terms`] with a custom fresh-variable name prefix.
pub fn elaborate_terms_named(tf: &TermFormula, prefix: &str) -> Elaboration {
    let mut el = Elaborator {
        defs: Vec::new(),
        fresh: Vec::new(),
        memo: HashMap::new(),
        prefix: prefix.to_string(),
    };
    let core = el.formula(tf);
    let formula = Formula::and(el.defs.iter().cloned().chain([core]));
    Elaboration {
        formula,
        fresh: el.fresh,
        definitions: el.defs,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Expr(e) => write!(f, "{e}"),
            Term::Add(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Term::Scale(k, t) => write!(f, "{k}*{t}"),
            Term::Ite(c, a, b) => write!(f, "ite({c:?}; {a}; {b})"),
        }
    }
}

/// Renaming map `v -> v'` over a set of variables, preserving relative
/// order so canonical atoms keep their leading sign.
pub fn fresh_renaming<'a>(vars: impl IntoIterator<Item = &'a Variable>) -> BTreeMap<Variable, Variable> {
    let ordered: std::collections::BTreeSet<&Variable> = vars.into_iter().collect();
    ordered.into_iter().map(|v| (v.clone(), v.primed())).collect()
}
