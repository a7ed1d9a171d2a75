//! Interval boxes over real variables: extraction from preconditions and
//! sound entailment checks.
//!
//! A [`BoundingBox`] assigns each variable a closed interval with optional
//! infinite ends. Boxes are extracted from the conjunctive skeleton of a
//! precondition — single-variable atoms in closed form, everything else by
//! exact per-variable optimization — and later pushed through system
//! encodings to decide conditions before enumeration ever sees them.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::logic::{
    Atom, Constraint, ConstraintRel, Formula, FormulaNode, LinearExpr, LraAtom, Rel, Variable,
};
use crate::lp::{self, LpOutcome, LpRel};
use crate::models::{Gate, TreeTerm};
use crate::rational::Rat;
use crate::{Error, Result};

/// A closed interval with optional infinite endpoints (`None` = unbounded).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

impl Interval {
    pub fn unbounded() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn new(lo: Rat, hi: Rat) -> Result<Self> {
        if lo > hi {
            return Err(Error::EmptyInterval {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        Ok(Interval {
            lo: Some(lo),
            hi: Some(hi),
        })
    }

    pub fn point(x: Rat) -> Self {
        Interval {
            lo: Some(x.clone()),
            hi: Some(x),
        }
    }

    pub fn at_least(lo: Rat) -> Self {
        Interval {
            lo: Some(lo),
            hi: None,
        }
    }

    pub fn at_most(hi: Rat) -> Self {
        Interval {
            lo: None,
            hi: Some(hi),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    pub fn contains(&self, x: &Rat) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo <= x) && self.hi.as_ref().is_none_or(|hi| x <= hi)
    }

    /// Tightens with another interval; fails if the result is empty.
    pub fn intersect(&self, other: &Interval) -> Result<Interval> {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if l > h {
                return Err(Error::EmptyInterval {
                    lo: l.to_string(),
                    hi: h.to_string(),
                });
            }
        }
        Ok(Interval { lo, hi })
    }

    /// Interval sum.
    pub fn add(&self, other: &Interval) -> Interval {
        let end = |a: &Option<Rat>, b: &Option<Rat>| match (a, b) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Interval {
            lo: end(&self.lo, &other.lo),
            hi: end(&self.hi, &other.hi),
        }
    }

    /// Scaling by a rational; negative factors swap the ends.
    pub fn scale(&self, k: &Rat) -> Interval {
        if k.is_zero() {
            return Interval::point(Rat::zero());
        }
        let mul = |e: &Option<Rat>| e.as_ref().map(|x| x * k);
        if k > &Rat::zero() {
            Interval {
                lo: mul(&self.lo),
                hi: mul(&self.hi),
            }
        } else {
            Interval {
                lo: mul(&self.hi),
                hi: mul(&self.lo),
            }
        }
    }

    pub fn shift(&self, k: &Rat) -> Interval {
        Interval {
            lo: self.lo.as_ref().map(|x| x + k),
            hi: self.hi.as_ref().map(|x| x + k),
        }
    }

    /// The image under `max(·, 0)`, the rectifier.
    pub fn relu(&self) -> Interval {
        let clamp = |e: &Option<Rat>| match e {
            Some(x) if x < &Rat::zero() => Some(Rat::zero()),
            Some(x) => Some(x.clone()),
            None => None,
        };
        Interval {
            lo: clamp(&self.lo).or(Some(Rat::zero())),
            hi: self.hi.as_ref().and(clamp(&self.hi)),
        }
    }

    /// The smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            _ => None,
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            _ => None,
        };
        Interval { lo, hi }
    }
}

/// Per-variable closed intervals; variables not mentioned are unbounded.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BoundingBox {
    map: BTreeMap<Variable, Interval>,
}

impl BoundingBox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: &Variable) -> Interval {
        self.map.get(v).cloned().unwrap_or_else(Interval::unbounded)
    }

    pub fn set(&mut self, v: &Variable, iv: Interval) {
        self.map.insert(v.clone(), iv);
    }

    /// Tightens the interval of `v`; fails if it empties.
    pub fn tighten(&mut self, v: &Variable, iv: &Interval) -> Result<()> {
        let merged = self.get(v).intersect(iv)?;
        self.map.insert(v.clone(), merged);
        Ok(())
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.map.keys()
    }

    pub fn interval_entries(&self) -> impl Iterator<Item = (&Variable, &Interval)> {
        self.map.iter()
    }

    /// Bounded intervals for the given variables, or an error naming the
    /// first unbounded one. Callers that need to sample or integrate over
    /// the box use this.
    pub fn finite_intervals(&self, vars: &[Variable]) -> Result<Vec<(Variable, Rat, Rat)>> {
        vars.iter()
            .map(|v| {
                let iv = self.get(v);
                match (iv.lo, iv.hi) {
                    (Some(lo), Some(hi)) => Ok((v.clone(), lo, hi)),
                    _ => Err(Error::UnboundedRegion {
                        var: v.name().to_string(),
                    }),
                }
            })
            .collect()
    }

    /// Range of a linear expression over the box, by interval arithmetic.
    pub fn expr_range(&self, e: &LinearExpr) -> Interval {
        let mut acc = Interval::point(e.constant_part().clone());
        for (v, c) in e.terms() {
            acc = acc.add(&self.get(v).scale(c));
        }
        acc
    }

    /// Sound three-valued status of a linear atom over the box:
    /// `Some(b)` only when every point of the box gives the atom value `b`.
    pub fn atom_status(&self, atom: &LraAtom) -> Option<bool> {
        let range = self.expr_range(&atom.lhs_expr());
        let rhs = Rat::from_integer(atom.rhs().clone());
        match atom.rel() {
            Rel::Le => {
                if range.hi.as_ref().is_some_and(|hi| hi <= &rhs) {
                    Some(true)
                } else if range.lo.as_ref().is_some_and(|lo| lo > &rhs) {
                    Some(false)
                } else {
                    None
                }
            }
            Rel::Lt => {
                if range.hi.as_ref().is_some_and(|hi| hi < &rhs) {
                    Some(true)
                } else if range.lo.as_ref().is_some_and(|lo| lo >= &rhs) {
                    Some(false)
                } else {
                    None
                }
            }
            Rel::Eq => {
                let pinned = range.lo.as_ref() == Some(&rhs) && range.hi.as_ref() == Some(&rhs);
                if pinned {
                    Some(true)
                } else if !range
                    .lo
                    .as_ref()
                    .is_none_or(|lo| lo <= &rhs)
                    || !range.hi.as_ref().is_none_or(|hi| &rhs <= hi)
                {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

/// Extracts a sound bounding box from `delta_pre ∧ support`: literal
/// conjuncts give linear constraints; single-variable ones tighten in
/// closed form, the rest through per-variable exact optimization.
/// Disjunctive parts are ignored (the box stays sound).
pub fn bounds_from_precondition(delta_pre: &Formula, support: &Formula) -> Result<BoundingBox> {
    let mut literals = Vec::new();
    collect_conjunct_literals(delta_pre, &mut literals);
    collect_conjunct_literals(support, &mut literals);

    let mut constraints: Vec<Constraint> = Vec::new();
    for (atom, polarity) in &literals {
        if let Atom::Lra(a) = atom {
            constraints.push(a.constraint(*polarity));
        }
    }
    if !lp::constraints_sat(&constraints) {
        return Err(Error::UnsatPrecondition);
    }

    let mut bbox = BoundingBox::new();
    let mut lp_vars: BTreeSet<Variable> = BTreeSet::new();
    for c in &constraints {
        if let Some((v, iv)) = constraint_interval(c) {
            bbox.tighten(v, &iv).map_err(|_| Error::UnsatPrecondition)?;
        } else {
            lp_vars.extend(c.expr.variables().cloned());
        }
    }

    // LP rows: the closed relaxation of every collected constraint.
    let rows: Vec<(LinearExpr, LpRel)> = constraints
        .iter()
        .filter_map(|c| match c.rel {
            ConstraintRel::Le | ConstraintRel::Lt => Some((c.expr.clone(), LpRel::Le)),
            ConstraintRel::Eq => Some((c.expr.clone(), LpRel::Eq)),
            ConstraintRel::Ne => None,
        })
        .collect();
    for v in &lp_vars {
        let obj = LinearExpr::var(v);
        if let LpOutcome::Optimal { value, .. } = lp::maximize(&obj, &rows) {
            bbox.tighten(v, &Interval::at_most(value))
                .map_err(|_| Error::UnsatPrecondition)?;
        }
        if let LpOutcome::Optimal { value, .. } = lp::minimize(&obj, &rows) {
            bbox.tighten(v, &Interval::at_least(value))
                .map_err(|_| Error::UnsatPrecondition)?;
        }
    }
    Ok(bbox)
}

/// The interval a single-variable constraint `k + a·v (rel) 0` pins, as
/// a closed (sound) relaxation. `None` for multi-variable constraints
/// and disequalities.
fn constraint_interval(c: &Constraint) -> Option<(&Variable, Interval)> {
    let vars: Vec<&Variable> = c.expr.variables().collect();
    if vars.len() != 1 || c.rel == ConstraintRel::Ne {
        return None;
    }
    let v = vars[0];
    let a = c.expr.coeff(v);
    let bound = -c.expr.constant_part().clone() / &a;
    let iv = match (c.rel, a > Rat::zero()) {
        (ConstraintRel::Le | ConstraintRel::Lt, true) => Interval::at_most(bound),
        (ConstraintRel::Le | ConstraintRel::Lt, false) => Interval::at_least(bound),
        (ConstraintRel::Eq, _) => Interval::point(bound),
        (ConstraintRel::Ne, _) => unreachable!(),
    };
    Some((v, iv))
}

/// Collects atom literals from the conjunctive skeleton of a formula.
fn collect_conjunct_literals(f: &Formula, out: &mut Vec<(Atom, bool)>) {
    match f.view() {
        FormulaNode::And(parts) => {
            for p in parts {
                collect_conjunct_literals(p, out);
            }
        }
        FormulaNode::Atom(a) => out.push((a.clone(), true)),
        FormulaNode::Not(g) => {
            if let FormulaNode::Atom(a) = g.view() {
                out.push((a.clone(), false));
            }
        }
        _ => {}
    }
}

/// `Some((atom, polarity))` when `f` is a single atom or its negation.
fn as_literal(f: &Formula) -> Option<(&Atom, bool)> {
    match f.view() {
        FormulaNode::Atom(a) => Some((a, true)),
        FormulaNode::Not(g) => match g.view() {
            FormulaNode::Atom(a) => Some((a, false)),
            _ => None,
        },
        _ => None,
    }
}

/// Sound three-valued truth of a formula over the box: `Some(b)` only
/// when every point of the box, under every boolean assignment, gives
/// the formula value `b`.
pub fn formula_status(bbox: &BoundingBox, f: &Formula) -> Option<bool> {
    match f.view() {
        FormulaNode::True => Some(true),
        FormulaNode::False => Some(false),
        FormulaNode::Atom(Atom::Lra(a)) => bbox.atom_status(a),
        FormulaNode::Atom(Atom::Bool(_)) => None,
        FormulaNode::Not(g) => formula_status(bbox, g).map(|b| !b),
        FormulaNode::And(parts) => {
            let mut all_true = true;
            for p in parts {
                match formula_status(bbox, p) {
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
        FormulaNode::Or(parts) => {
            let mut all_false = true;
            for p in parts {
                match formula_status(bbox, p) {
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
        FormulaNode::Implies(a, b) => match (formula_status(bbox, a), formula_status(bbox, b)) {
            (Some(false), _) | (_, Some(true)) => Some(true),
            (Some(true), Some(false)) => Some(false),
            _ => None,
        },
        FormulaNode::Iff(a, b) => match (formula_status(bbox, a), formula_status(bbox, b)) {
            (Some(x), Some(y)) => Some(x == y),
            _ => None,
        },
    }
}

/// The box tightened by assuming a literal-shaped condition has the
/// given truth value. Only single-variable constraints refine anything;
/// `None` means the refined box is empty, so that branch is unreachable.
fn refine(bbox: &BoundingBox, cond: &Formula, value: bool) -> Option<BoundingBox> {
    if formula_status(bbox, cond) == Some(!value) {
        return None;
    }
    let mut out = bbox.clone();
    if let Some((Atom::Lra(a), lit_pol)) = as_literal(cond) {
        let want = if lit_pol { value } else { !value };
        if let Some((v, iv)) = constraint_interval(&a.constraint(want)) {
            match out.get(v).intersect(&iv) {
                Ok(merged) => out.set(v, merged),
                Err(_) => return None,
            }
        }
    }
    Some(out)
}

/// Interval of a piecewise-constant tree over the box: the hull of the
/// reachable leaves, each branch taken under its refined box. `None`
/// when no leaf is reachable.
fn tree_range(bbox: &BoundingBox, tree: &TreeTerm) -> Option<Interval> {
    match tree {
        TreeTerm::Leaf(c) => Some(Interval::point(c.clone())),
        TreeTerm::Split { cond, then, els } => {
            let t = refine(bbox, cond, true).and_then(|b| tree_range(&b, then));
            let e = refine(bbox, cond, false).and_then(|b| tree_range(&b, els));
            match (t, e) {
                (Some(a), Some(b)) => Some(a.hull(&b)),
                (a, None) => a,
                (None, b) => b,
            }
        }
    }
}

/// Pushes the box through gates in dependency order, tightening each
/// defined variable: affine images by interval arithmetic, guarded
/// definitions by the hull of the reachable branches (each under its
/// refined box — exact for rectifier gates testing their own input's
/// sign), trees by the hull of reachable leaves. Threshold gates define
/// booleans and carry no interval.
pub fn propagate_bounds(gates: &[Gate], bbox: &mut BoundingBox) -> Result<()> {
    for gate in gates {
        match gate {
            Gate::Affine { var, expr } => {
                let iv = bbox.expr_range(expr);
                bbox.tighten(var, &iv)
                    .map_err(|_| Error::UnsatPrecondition)?;
            }
            Gate::Guarded {
                cond,
                var,
                then,
                els,
            } => {
                let t = refine(bbox, cond, true).map(|b| b.expr_range(then));
                let e = refine(bbox, cond, false).map(|b| b.expr_range(els));
                let iv = match (t, e) {
                    (Some(a), Some(b)) => a.hull(&b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => return Err(Error::UnsatPrecondition),
                };
                bbox.tighten(var, &iv)
                    .map_err(|_| Error::UnsatPrecondition)?;
            }
            Gate::Tree { var, tree } => match tree_range(bbox, tree) {
                Some(iv) => bbox
                    .tighten(var, &iv)
                    .map_err(|_| Error::UnsatPrecondition)?,
                None => return Err(Error::UnsatPrecondition),
            },
            Gate::Threshold { .. } => {}
        }
    }
    Ok(())
}

/// Replaces every box-decided inequality atom by its constant, leaving
/// equality atoms in place. Used on subformulas that do not anchor the
/// box (guard structures, postconditions); smart constructors collapse
/// the surrounding implications.
pub fn simplify_formula(bbox: &BoundingBox, f: &Formula, decided: &mut usize) -> Formula {
    match f.view() {
        FormulaNode::True | FormulaNode::False => f.clone(),
        FormulaNode::Atom(Atom::Lra(a)) if a.rel() != Rel::Eq => match bbox.atom_status(a) {
            Some(true) => {
                *decided += 1;
                Formula::tt()
            }
            Some(false) => {
                *decided += 1;
                Formula::ff()
            }
            None => f.clone(),
        },
        FormulaNode::Atom(_) => f.clone(),
        FormulaNode::Not(g) => Formula::not(simplify_formula(bbox, g, decided)),
        FormulaNode::And(parts) => {
            Formula::and(parts.iter().map(|p| simplify_formula(bbox, p, decided)))
        }
        FormulaNode::Or(parts) => {
            Formula::or(parts.iter().map(|p| simplify_formula(bbox, p, decided)))
        }
        FormulaNode::Implies(a, b) => Formula::implies(
            simplify_formula(bbox, a, decided),
            simplify_formula(bbox, b, decided),
        ),
        FormulaNode::Iff(a, b) => Formula::iff(
            simplify_formula(bbox, a, decided),
            simplify_formula(bbox, b, decided),
        ),
    }
}

/// Simplifies a support formula: conjunct literals are kept verbatim —
/// they are the constraints the box was extracted from, so keeping them
/// pins the encoded region — while non-literal parts (gate guards,
/// threshold definitions) have their decided conditions frozen.
pub fn simplify_support(bbox: &BoundingBox, f: &Formula, decided: &mut usize) -> Formula {
    match f.view() {
        FormulaNode::And(parts) => {
            Formula::and(parts.iter().map(|p| simplify_support(bbox, p, decided)))
        }
        _ if as_literal(f).is_some() => f.clone(),
        _ => simplify_formula(bbox, f, decided),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn interval_atoms_give_a_closed_form_box() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let pre = Formula::and([
            Formula::interval(&x, &int(-1), &int(1)).unwrap(),
            Formula::interval(&y, &int(-1), &int(1)).unwrap(),
        ]);
        let bbox = bounds_from_precondition(&pre, &Formula::tt()).unwrap();
        assert_eq!(bbox.get(&x), Interval::new(int(-1), int(1)).unwrap());
        assert_eq!(bbox.get(&y), Interval::new(int(-1), int(1)).unwrap());
    }

    #[test]
    fn coupled_constraints_are_tightened_by_optimization() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let mut sum = LinearExpr::zero();
        sum.add_term(&int(1), &x);
        sum.add_term(&int(1), &y);
        let pre = Formula::and([
            Formula::ge(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
            Formula::ge(&LinearExpr::var(&y), &LinearExpr::constant(int(0))),
            Formula::le(&sum, &LinearExpr::constant(int(1))),
        ]);
        let bbox = bounds_from_precondition(&pre, &Formula::tt()).unwrap();
        assert_eq!(bbox.get(&x), Interval::new(int(0), int(1)).unwrap());
        assert_eq!(bbox.get(&y), Interval::new(int(0), int(1)).unwrap());
    }

    #[test]
    fn disjunctive_preconditions_fall_back_to_the_support() {
        let x = Variable::real("x");
        let pre = Formula::or([
            Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
            Formula::ge(&LinearExpr::var(&x), &LinearExpr::constant(int(1))),
        ]);
        let support = Formula::interval(&x, &int(-5), &int(5)).unwrap();
        let bbox = bounds_from_precondition(&pre, &support).unwrap();
        assert_eq!(bbox.get(&x), Interval::new(int(-5), int(5)).unwrap());
    }

    #[test]
    fn contradictory_skeleton_is_reported_unsat() {
        let x = Variable::real("x");
        let pre = Formula::and([
            Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
            Formula::ge(&LinearExpr::var(&x), &LinearExpr::constant(int(1))),
        ]);
        let err = bounds_from_precondition(&pre, &Formula::tt()).unwrap_err();
        assert!(matches!(err, Error::UnsatPrecondition));
    }

    #[test]
    fn unconstrained_variables_stay_unbounded() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let pre = Formula::interval(&x, &int(0), &int(1)).unwrap();
        let bbox = bounds_from_precondition(&pre, &Formula::tt()).unwrap();
        assert_eq!(bbox.get(&y), Interval::unbounded());
        assert!(bbox.finite_intervals(&[x.clone()]).is_ok());
        assert!(matches!(
            bbox.finite_intervals(&[y.clone()]).unwrap_err(),
            Error::UnboundedRegion { .. }
        ));
    }

    #[test]
    fn expression_ranges_use_interval_arithmetic() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let mut bbox = BoundingBox::new();
        bbox.set(&x, Interval::new(int(0), int(1)).unwrap());
        bbox.set(&y, Interval::new(int(-2), int(3)).unwrap());
        // 2x - y + 1 over the box: [2*0 - 3 + 1, 2*1 + 2 + 1] = [-2, 5].
        let mut e = LinearExpr::constant(int(1));
        e.add_term(&int(2), &x);
        e.add_term(&int(-1), &y);
        assert_eq!(bbox.expr_range(&e), Interval::new(int(-2), int(5)).unwrap());
    }

    fn lra_atom(f: &Formula) -> LraAtom {
        match f.atoms().into_iter().next().unwrap() {
            Atom::Lra(a) => a,
            Atom::Bool(_) => unreachable!("expected a linear atom"),
        }
    }

    #[test]
    fn atom_status_is_sound_and_three_valued() {
        let x = Variable::real("x");
        let mut bbox = BoundingBox::new();
        bbox.set(&x, Interval::new(int(0), int(1)).unwrap());

        let le_two = lra_atom(&Formula::le(
            &LinearExpr::var(&x),
            &LinearExpr::constant(int(2)),
        ));
        assert_eq!(bbox.atom_status(&le_two), Some(true));

        let lt_zero = lra_atom(&Formula::lt(
            &LinearExpr::var(&x),
            &LinearExpr::constant(int(0)),
        ));
        assert_eq!(bbox.atom_status(&lt_zero), Some(false));

        let le_half = lra_atom(&Formula::le(
            &LinearExpr::var(&x),
            &LinearExpr::constant(rat(1, 2)),
        ));
        assert_eq!(bbox.atom_status(&le_half), None);
    }

    #[test]
    fn relu_image_clamps_to_nonnegatives() {
        let neg = Interval::new(int(-2), int(-1)).unwrap();
        assert_eq!(neg.relu(), Interval::new(int(0), int(0)).unwrap());
        let cross = Interval::new(int(-1), int(2)).unwrap();
        assert_eq!(cross.relu(), Interval::new(int(0), int(2)).unwrap());
        let pos = Interval::new(int(1), int(2)).unwrap();
        assert_eq!(pos.relu(), pos);
    }

    #[test]
    fn guarded_propagation_matches_the_rectifier_image() {
        let x = Variable::real("x");
        let h = Variable::real("h");
        let y = Variable::real("y");
        // h = x - 1, y = ite(h > 0; h; 0) over x ∈ [-1, 2].
        let gates = [
            Gate::Affine {
                var: h.clone(),
                expr: LinearExpr::var(&x) - LinearExpr::constant(int(1)),
            },
            Gate::Guarded {
                cond: Formula::gt(&LinearExpr::var(&h), &LinearExpr::constant(int(0))),
                var: y.clone(),
                then: LinearExpr::var(&h),
                els: LinearExpr::zero(),
            },
        ];
        let mut bbox = BoundingBox::new();
        bbox.set(&x, Interval::new(int(-1), int(2)).unwrap());
        propagate_bounds(&gates, &mut bbox).unwrap();
        assert_eq!(bbox.get(&h), Interval::new(int(-2), int(1)).unwrap());
        assert_eq!(bbox.get(&h).relu(), bbox.get(&y));
        assert_eq!(bbox.get(&y), Interval::new(int(0), int(1)).unwrap());

        // A box on the active side pins y to the affine branch exactly.
        let mut active = BoundingBox::new();
        active.set(&x, Interval::new(int(2), int(3)).unwrap());
        propagate_bounds(&gates, &mut active).unwrap();
        assert_eq!(active.get(&y), Interval::new(int(1), int(2)).unwrap());
    }

    #[test]
    fn tree_propagation_hulls_only_reachable_leaves() {
        let x = Variable::real("x");
        let s = Variable::real("s");
        let gate = Gate::Tree {
            var: s.clone(),
            tree: TreeTerm::Split {
                cond: Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
                then: Box::new(TreeTerm::Leaf(int(7))),
                els: Box::new(TreeTerm::Split {
                    cond: Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(int(5))),
                    then: Box::new(TreeTerm::Leaf(int(1))),
                    els: Box::new(TreeTerm::Leaf(int(3))),
                }),
            },
        };
        let mut bbox = BoundingBox::new();
        bbox.set(&x, Interval::new(int(1), int(2)).unwrap());
        propagate_bounds(std::slice::from_ref(&gate), &mut bbox).unwrap();
        assert_eq!(bbox.get(&s), Interval::point(int(1)));

        let mut wide = BoundingBox::new();
        wide.set(&x, Interval::new(int(1), int(9)).unwrap());
        propagate_bounds(std::slice::from_ref(&gate), &mut wide).unwrap();
        assert_eq!(wide.get(&s), Interval::new(int(1), int(3)).unwrap());
    }

    #[test]
    fn formula_status_combines_three_valued_connectives() {
        let x = Variable::real("x");
        let b = Variable::bool("b");
        let mut bbox = BoundingBox::new();
        bbox.set(&x, Interval::new(int(0), int(1)).unwrap());
        let xe = LinearExpr::var(&x);
        let sure = Formula::le(&xe, &LinearExpr::constant(int(2)));
        let never = Formula::gt(&xe, &LinearExpr::constant(int(3)));
        let open = Formula::le(&xe, &LinearExpr::constant(rat(1, 2)));

        assert_eq!(formula_status(&bbox, &sure), Some(true));
        assert_eq!(formula_status(&bbox, &never), Some(false));
        assert_eq!(formula_status(&bbox, &open), None);
        assert_eq!(formula_status(&bbox, &Formula::prop(&b)), None);
        assert_eq!(
            formula_status(&bbox, &Formula::and([sure.clone(), open.clone()])),
            None
        );
        assert_eq!(
            formula_status(&bbox, &Formula::or([never.clone(), sure.clone()])),
            Some(true)
        );
        assert_eq!(
            formula_status(&bbox, &Formula::implies(open.clone(), sure.clone())),
            Some(true)
        );
        assert_eq!(
            formula_status(&bbox, &Formula::iff(sure.clone(), never.clone())),
            Some(false)
        );
        assert_eq!(
            formula_status(&bbox, &Formula::iff(sure, open)),
            None
        );
    }

    #[test]
    fn support_simplification_freezes_guards_but_keeps_anchors() {
        let x = Variable::real("x");
        let h = Variable::real("h");
        let y = Variable::real("y");
        let xe = LinearExpr::var(&x);
        let he = LinearExpr::var(&h);
        // Support: x ∈ [2, 3] (anchors), h = x − 1 (anchor equality), and
        // the guarded definition of y with a decided guard h > 0.
        let guard = Formula::gt(&he, &LinearExpr::constant(int(0)));
        let gate_formula = Formula::and([
            Formula::implies(guard.clone(), Formula::eq_expr(&LinearExpr::var(&y), &he)),
            Formula::implies(
                Formula::not(guard),
                Formula::eq_expr(&LinearExpr::var(&y), &LinearExpr::zero()),
            ),
        ]);
        let support = Formula::and([
            Formula::interval(&x, &int(2), &int(3)).unwrap(),
            Formula::eq_expr(&he, &(xe - LinearExpr::constant(int(1)))),
            gate_formula,
        ]);

        let bbox = bounds_from_precondition(&Formula::tt(), &support).unwrap();
        // The linear program bounds h through the anchored equality.
        assert_eq!(bbox.get(&h), Interval::new(int(1), int(2)).unwrap());

        let mut decided = 0;
        let simplified = simplify_support(&bbox, &support, &mut decided);
        assert_eq!(decided, 2); // the guard and its negation
        assert!(simplified.atoms().len() < support.atoms().len());
        // The collapsed form keeps both equalities and the box anchors.
        let kept = simplified.atoms();
        assert!(kept
            .iter()
            .filter(|a| matches!(a, Atom::Lra(l) if l.rel() == Rel::Eq))
            .count()
            >= 2);
    }
}
