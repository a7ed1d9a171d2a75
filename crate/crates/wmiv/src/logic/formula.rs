//! Quantifier-free formulas over canonical atoms.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::logic::atom::{canonicalize, Atom, CanonLit, Rel};
use crate::logic::{Assignment, LinearExpr, Valuation, Variable};
use crate::rational::Rat;
use crate::{Error, Result};

/// Comparison operators accepted at construction; everything is rewritten
/// into literals over canonical `<=`, `<`, `=` atoms.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

/// Structure of a formula node, exposed for read-only traversal.
#[derive(PartialEq, Eq, Hash, Debug)]
pub enum FormulaNode {
    True,
    False,
    Atom(Atom),
    Not(Formula),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Formula, Formula),
    Iff(Formula, Formula),
}

/// An immutable formula; cheap to clone, shared substructure.
#[derive(Clone, Eq, Debug)]
pub struct Formula(Arc<FormulaNode>);

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl std::hash::Hash for Formula {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl Formula {
    fn node(node: FormulaNode) -> Self {
        Formula(Arc::new(node))
    }

    pub fn view(&self) -> &FormulaNode {
        &self.0
    }

    pub fn tt() -> Self {
        Formula::node(FormulaNode::True)
    }

    pub fn ff() -> Self {
        Formula::node(FormulaNode::False)
    }

    pub fn is_true(&self) -> bool {
        matches!(self.view(), FormulaNode::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self.view(), FormulaNode::False)
    }

    pub fn atom(a: Atom) -> Self {
        Formula::node(FormulaNode::Atom(a))
    }

    /// Boolean proposition as a formula.
    pub fn prop(v: &Variable) -> Self {
        debug_assert!(v.is_bool(), "propositional atoms must be boolean variables");
        Formula::atom(Atom::Bool(v.clone()))
    }

    pub fn lit(a: Atom, polarity: bool) -> Self {
        let f = Formula::atom(a);
        if polarity {
            f
        } else {
            Formula::not(f)
        }
    }

    fn from_canon(c: CanonLit) -> Self {
        match c {
            CanonLit::Const(true) => Formula::tt(),
            CanonLit::Const(false) => Formula::ff(),
            CanonLit::Lit(a, p) => Formula::lit(a, p),
        }
    }

    pub fn not(f: Formula) -> Self {
        match f.view() {
            FormulaNode::True => Formula::ff(),
            FormulaNode::False => Formula::tt(),
            FormulaNode::Not(g) => g.clone(),
            _ => Formula::node(FormulaNode::Not(f)),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut out = Vec::new();
        for f in parts {
            match f.view() {
                FormulaNode::True => {}
                FormulaNode::False => return Formula::ff(),
                _ => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::tt(),
            1 => out.pop().unwrap(),
            _ => Formula::node(FormulaNode::And(out)),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut out = Vec::new();
        for f in parts {
            match f.view() {
                FormulaNode::False => {}
                FormulaNode::True => return Formula::tt(),
                _ => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::ff(),
            1 => out.pop().unwrap(),
            _ => Formula::node(FormulaNode::Or(out)),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        match (a.view(), b.view()) {
            (FormulaNode::True, _) => b,
            (FormulaNode::False, _) => Formula::tt(),
            (_, FormulaNode::True) => Formula::tt(),
            (_, FormulaNode::False) => Formula::not(a),
            _ => Formula::node(FormulaNode::Implies(a, b)),
        }
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        match (a.view(), b.view()) {
            (FormulaNode::True, _) => b,
            (FormulaNode::False, _) => Formula::not(b),
            (_, FormulaNode::True) => a,
            (_, FormulaNode::False) => Formula::not(a),
            _ => Formula::node(FormulaNode::Iff(a, b)),
        }
    }

    /// Comparison of two linear expressions, canonicalized into literals.
    /// `!=` becomes the disjunction of the strict comparisons.
    pub fn cmp(lhs: &LinearExpr, op: CmpOp, rhs: &LinearExpr) -> Self {
        let diff = lhs.clone() - rhs.clone();
        match op {
            CmpOp::Le => Formula::from_canon(canonicalize(&diff, Rel::Le)),
            CmpOp::Lt => Formula::from_canon(canonicalize(&diff, Rel::Lt)),
            CmpOp::Ge => Formula::from_canon(canonicalize(&(-diff), Rel::Le)),
            CmpOp::Gt => Formula::from_canon(canonicalize(&(-diff), Rel::Lt)),
            CmpOp::Eq => Formula::from_canon(canonicalize(&diff, Rel::Eq)),
            CmpOp::Ne => Formula::or([
                Formula::cmp(lhs, CmpOp::Lt, rhs),
                Formula::cmp(lhs, CmpOp::Gt, rhs),
            ]),
        }
    }

    pub fn le(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Formula::cmp(lhs, CmpOp::Le, rhs)
    }

    pub fn lt(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Formula::cmp(lhs, CmpOp::Lt, rhs)
    }

    pub fn ge(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Formula::cmp(lhs, CmpOp::Ge, rhs)
    }

    pub fn gt(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Formula::cmp(lhs, CmpOp::Gt, rhs)
    }

    pub fn eq_expr(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Formula::cmp(lhs, CmpOp::Eq, rhs)
    }

    /// `lo <= v <= hi`; rejects empty intervals.
    pub fn interval(v: &Variable, lo: &Rat, hi: &Rat) -> Result<Self> {
        if lo > hi {
            return Err(Error::EmptyInterval {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        let x = LinearExpr::var(v);
        Ok(Formula::and([
            Formula::ge(&x, &LinearExpr::constant(lo.clone())),
            Formula::le(&x, &LinearExpr::constant(hi.clone())),
        ]))
    }

    /// All atoms syntactically present, canonical, deduplicated.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut set = BTreeSet::new();
        self.collect_atoms(&mut set);
        set
    }

    fn collect_atoms(&self, set: &mut BTreeSet<Atom>) {
        match self.view() {
            FormulaNode::True | FormulaNode::False => {}
            FormulaNode::Atom(a) => {
                set.insert(a.clone());
            }
            FormulaNode::Not(f) => f.collect_atoms(set),
            FormulaNode::And(fs) | FormulaNode::Or(fs) => {
                for f in fs {
                    f.collect_atoms(set);
                }
            }
            FormulaNode::Implies(a, b) | FormulaNode::Iff(a, b) => {
                a.collect_atoms(set);
                b.collect_atoms(set);
            }
        }
    }

    /// All variables, of both sorts.
    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut vars = BTreeSet::new();
        for a in self.atoms() {
            match a {
                Atom::Bool(v) => {
                    vars.insert(v);
                }
                Atom::Lra(l) => {
                    vars.extend(l.variables().cloned());
                }
            }
        }
        vars
    }

    /// Three-valued (Kleene) evaluation under a partial atom assignment.
    pub fn eval3(&self, asg: &Assignment) -> Option<bool> {
        match self.view() {
            FormulaNode::True => Some(true),
            FormulaNode::False => Some(false),
            FormulaNode::Atom(a) => asg.get(a),
            FormulaNode::Not(f) => f.eval3(asg).map(|b| !b),
            FormulaNode::And(fs) => {
                let mut all_true = true;
                for f in fs {
                    match f.eval3(asg) {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all_true = false,
                    }
                }
                if all_true {
                    Some(true)
                } else {
                    None
                }
            }
            FormulaNode::Or(fs) => {
                let mut all_false = true;
                for f in fs {
                    match f.eval3(asg) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => all_false = false,
                    }
                }
                if all_false {
                    Some(false)
                } else {
                    None
                }
            }
            FormulaNode::Implies(a, b) => match (a.eval3(asg), b.eval3(asg)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
            FormulaNode::Iff(a, b) => match (a.eval3(asg), b.eval3(asg)) {
                (Some(x), Some(y)) => Some(x == y),
                _ => None,
            },
        }
    }

    /// Classical evaluation at a total point; `None` if a variable is
    /// missing from the valuation.
    pub fn eval_point(&self, point: &Valuation) -> Option<bool> {
        match self.view() {
            FormulaNode::True => Some(true),
            FormulaNode::False => Some(false),
            FormulaNode::Atom(Atom::Bool(v)) => point.bools.get(v).copied(),
            FormulaNode::Atom(Atom::Lra(a)) => a.eval(&point.reals),
            FormulaNode::Not(f) => f.eval_point(point).map(|b| !b),
            FormulaNode::And(fs) => {
                let mut acc = true;
                for f in fs {
                    acc &= f.eval_point(point)?;
                }
                Some(acc)
            }
            FormulaNode::Or(fs) => {
                let mut acc = false;
                for f in fs {
                    acc |= f.eval_point(point)?;
                }
                Some(acc)
            }
            FormulaNode::Implies(a, b) => {
                let (a, b) = (a.eval_point(point)?, b.eval_point(point)?);
                Some(!a || b)
            }
            FormulaNode::Iff(a, b) => {
                let (a, b) = (a.eval_point(point)?, b.eval_point(point)?);
                Some(a == b)
            }
        }
    }

    /// Renames variables throughout, re-canonicalizing atoms.
    pub fn rename(&self, map: &std::collections::BTreeMap<Variable, Variable>) -> Formula {
        match self.view() {
            FormulaNode::True => Formula::tt(),
            FormulaNode::False => Formula::ff(),
            FormulaNode::Atom(a) => rename_atom(a, map),
            FormulaNode::Not(f) => Formula::not(f.rename(map)),
            FormulaNode::And(fs) => Formula::and(fs.iter().map(|f| f.rename(map))),
            FormulaNode::Or(fs) => Formula::or(fs.iter().map(|f| f.rename(map))),
            FormulaNode::Implies(a, b) => Formula::implies(a.rename(map), b.rename(map)),
            FormulaNode::Iff(a, b) => Formula::iff(a.rename(map), b.rename(map)),
        }
    }
}

/// Positive-literal form of a renamed atom.
pub fn rename_atom(a: &Atom, map: &std::collections::BTreeMap<Variable, Variable>) -> Formula {
    match a {
        Atom::Bool(v) => Formula::prop(map.get(v).unwrap_or(v)),
        Atom::Lra(l) => {
            let gap = l.gap_expr().rename(map);
            Formula::from_canon(canonicalize(&gap, l.rel()))
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::logic::text::emit(self))
    }
}
