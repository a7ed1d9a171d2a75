//! Enumeration of the total truth assignments (TTA) of a formula.
//!
//! The enumerator walks the atom universe depth-first in a fixed order
//! (boolean atoms, then linear atoms in canonical order; `true` branch
//! first), pruning branches whose partial assignment already falsifies
//! the formula under three-valued evaluation or whose linear literals
//! are infeasible. No clausal translation is performed; entailment is
//! read off the formula structure directly. The emitted assignments are
//! exactly the total assignments that satisfy the formula and are
//! feasible over the reals.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crate::logic::{Assignment, Atom, Constraint, ConstraintRel, Formula};
use crate::lp::constraints_sat;

/// Visits every total truth assignment of `delta` over its atoms plus
/// `extra_atoms`. Returns `false` if the visitor aborted the walk.
pub fn for_each_tta<F>(delta: &Formula, extra_atoms: &BTreeSet<Atom>, visit: F) -> bool
where
    F: FnMut(&Assignment) -> ControlFlow<()>,
{
    for_each_tta_opt(delta, extra_atoms, true, visit)
}

/// As [`for_each_tta`], with branch pruning switchable for testing; with
/// pruning off every one of the `2^n` branches is checked at its leaf.
pub fn for_each_tta_opt<F>(
    delta: &Formula,
    extra_atoms: &BTreeSet<Atom>,
    prune: bool,
    visit: F,
) -> bool
where
    F: FnMut(&Assignment) -> ControlFlow<()>,
{
    let mut universe: Vec<Atom> = delta.atoms().into_iter().collect();
    for a in extra_atoms {
        if !universe.contains(a) {
            universe.push(a.clone());
        }
    }
    // Boolean atoms first, then linear atoms in canonical order.
    universe.sort();

    let mut walker = Walker {
        delta,
        universe,
        asg: Assignment::new(),
        convex: Vec::new(),
        diseq: Vec::new(),
        prune,
        visit,
    };
    walker.walk(0).is_continue()
}

/// Collects the total truth assignments of `delta` (with extra atoms
/// from the weight conditions, if any).
pub fn enumerate_tta(delta: &Formula, extra_atoms: &BTreeSet<Atom>) -> Vec<Assignment> {
    let mut out = Vec::new();
    for_each_tta(delta, extra_atoms, |a| {
        out.push(a.clone());
        ControlFlow::Continue(())
    });
    out
}

/// The linear constraints asserted by the assignment's literals.
pub fn assignment_constraints(asg: &Assignment) -> Vec<Constraint> {
    asg.lra_literals().map(|(a, pol)| a.constraint(pol)).collect()
}

struct Walker<'a, F> {
    delta: &'a Formula,
    universe: Vec<Atom>,
    asg: Assignment,
    convex: Vec<Constraint>,
    diseq: Vec<Constraint>,
    prune: bool,
    visit: F,
}

impl<F> Walker<'_, F>
where
    F: FnMut(&Assignment) -> ControlFlow<()>,
{
    fn walk(&mut self, idx: usize) -> ControlFlow<()> {
        if idx == self.universe.len() {
            return self.leaf();
        }
        let atom = self.universe[idx].clone();
        for value in [true, false] {
            self.asg.set(atom.clone(), value);
            let mut pushed_convex = false;
            let mut pushed_diseq = false;
            if let Atom::Lra(l) = &atom {
                let c = l.constraint(value);
                if c.rel == ConstraintRel::Ne {
                    self.diseq.push(c);
                    pushed_diseq = true;
                } else {
                    self.convex.push(c);
                    pushed_convex = true;
                }
            }

            let viable = !self.prune || self.viable(pushed_convex);
            if viable {
                self.walk(idx + 1)?;
            }

            if pushed_convex {
                self.convex.pop();
            }
            if pushed_diseq {
                self.diseq.pop();
            }
        }
        self.asg.unset(&atom);
        ControlFlow::Continue(())
    }

    /// Cheap checks on the current partial assignment. Disequalities are
    /// deferred to the leaf; they only matter when the convex part pins a
    /// hyperplane.
    fn viable(&mut self, new_convex: bool) -> bool {
        if self.delta.eval3(&self.asg) == Some(false) {
            return false;
        }
        if new_convex && !constraints_sat(&self.convex) {
            return false;
        }
        true
    }

    fn leaf(&mut self) -> ControlFlow<()> {
        if self.delta.eval3(&self.asg) != Some(true) {
            return ControlFlow::Continue(());
        }
        let full_check_needed = !self.prune || !self.diseq.is_empty();
        if full_check_needed {
            let all: Vec<Constraint> = self
                .convex
                .iter()
                .chain(self.diseq.iter())
                .cloned()
                .collect();
            if !constraints_sat(&all) {
                return ControlFlow::Continue(());
            }
        }
        (self.visit)(&self.asg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{LinearExpr, Variable};
    use crate::rational::int;

    fn unit_square_with_guard() -> (Formula, Variable, Variable, Variable) {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let a = Variable::bool("A");
        let f = Formula::and([
            Formula::interval(&x, &int(0), &int(1)).unwrap(),
            Formula::interval(&y, &int(0), &int(1)).unwrap(),
            Formula::implies(
                Formula::prop(&a),
                Formula::le(
                    &(LinearExpr::var(&x) + LinearExpr::var(&y)),
                    &LinearExpr::constant(int(1)),
                ),
            ),
        ]);
        (f, x, y, a)
    }

    #[test]
    fn guarded_unit_square_has_three_assignments() {
        let (f, x, y, a) = unit_square_with_guard();
        let ttas = enumerate_tta(&f, &BTreeSet::new());
        assert_eq!(ttas.len(), 3);

        // Polarities of (A, x + y <= 1) across the three assignments.
        let sum = Formula::le(
            &(LinearExpr::var(&x) + LinearExpr::var(&y)),
            &LinearExpr::constant(int(1)),
        );
        let crate::logic::FormulaNode::Atom(sum_atom) = sum.view() else {
            panic!("expected atom");
        };
        let mut combos: Vec<(bool, bool)> = ttas
            .iter()
            .map(|m| {
                (
                    m.get(&Atom::Bool(a.clone())).unwrap(),
                    m.get(sum_atom).unwrap(),
                )
            })
            .collect();
        combos.sort();
        assert_eq!(combos, vec![(false, false), (false, true), (true, true)]);
    }

    #[test]
    fn strict_two_sided_escape_has_two_assignments() {
        // (x < 0) or (x > 1)
        let x = Variable::real("x");
        let f = Formula::or([
            Formula::lt(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
            Formula::gt(&LinearExpr::var(&x), &LinearExpr::constant(int(1))),
        ]);
        assert_eq!(f.atoms().len(), 2);
        assert_eq!(enumerate_tta(&f, &BTreeSet::new()).len(), 2);
    }

    #[test]
    fn infeasible_combination_is_dropped() {
        // (x < 0) and (x > 0) has no feasible assignment.
        let x = Variable::real("x");
        let f = Formula::and([
            Formula::lt(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
            Formula::gt(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
        ]);
        assert!(enumerate_tta(&f, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn boolean_mix_counts_satisfying_rows() {
        let x = Variable::real("x");
        let a = Variable::bool("A");
        let f = Formula::or([
            Formula::prop(&a),
            Formula::lt(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
        ]);
        assert_eq!(enumerate_tta(&f, &BTreeSet::new()).len(), 3);
    }

    #[test]
    fn extra_atoms_split_assignments() {
        let x = Variable::real("x");
        let f = Formula::interval(&x, &int(0), &int(2)).unwrap();
        let half = Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(int(1)));
        let crate::logic::FormulaNode::Atom(h) = half.view() else {
            panic!()
        };
        let mut extra = BTreeSet::new();
        extra.insert(h.clone());
        assert_eq!(enumerate_tta(&f, &BTreeSet::new()).len(), 1);
        assert_eq!(enumerate_tta(&f, &extra).len(), 2);
    }

    #[test]
    fn pruning_does_not_change_the_set()
    {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let b = Variable::bool("B");
        let f = Formula::and([
            Formula::interval(&x, &int(-1), &int(1)).unwrap(),
            Formula::or([
                Formula::prop(&b),
                Formula::lt(&LinearExpr::var(&x), &LinearExpr::var(&y)),
            ]),
            Formula::le(&LinearExpr::var(&y), &LinearExpr::constant(int(0))),
        ]);
        let mut pruned = Vec::new();
        for_each_tta_opt(&f, &BTreeSet::new(), true, |a| {
            pruned.push(a.clone());
            ControlFlow::Continue(())
        });
        let mut brute = Vec::new();
        for_each_tta_opt(&f, &BTreeSet::new(), false, |a| {
            brute.push(a.clone());
            ControlFlow::Continue(())
        });
        assert_eq!(pruned, brute);
        assert!(!pruned.is_empty());
    }

    #[test]
    fn visitor_can_abort() {
        let a = Variable::bool("A");
        let f = Formula::or([Formula::prop(&a), Formula::not(Formula::prop(&a))]);
        let mut seen = 0;
        let completed = for_each_tta(&f, &BTreeSet::new(), |_| {
            seen += 1;
            ControlFlow::Break(())
        });
        assert!(!completed);
        assert_eq!(seen, 1);
    }

    #[test]
    fn equality_atom_negation_is_a_disequality() {
        // x in [0,1] with atom (x = 1/2) in the universe: both polarities
        // are feasible, the negative one away from the hyperplane.
        let x = Variable::real("x");
        let f = Formula::interval(&x, &int(0), &int(1)).unwrap();
        let eq = Formula::eq_expr(
            &LinearExpr::var(&x),
            &LinearExpr::constant(crate::rational::rat(1, 2)),
        );
        let crate::logic::FormulaNode::Atom(ea) = eq.view() else {
            panic!()
        };
        let mut extra = BTreeSet::new();
        extra.insert(ea.clone());
        assert_eq!(enumerate_tta(&f, &extra).len(), 2);

        // Pinning x to 1/2 makes the negative polarity infeasible.
        let pinned = Formula::and([f, eq.clone()]);
        assert_eq!(enumerate_tta(&pinned, &BTreeSet::new()).len(), 1);
    }
}
