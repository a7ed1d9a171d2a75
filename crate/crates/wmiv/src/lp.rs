//! Exact linear programming and LRA feasibility over rationals.
//!
//! A dense two-phase simplex with Bland's rule (termination guaranteed,
//! no numerical tolerance anywhere). Free variables are split into
//! differences of nonnegatives. On top of it:
//!
//! * satisfiability of conjunctions of linear literals, where strict
//!   inequalities are handled by maximizing a shared slack `eps` subject
//!   to `lhs + eps <= rhs` (satisfiable iff the optimum is positive), and
//!   a disequality is satisfiable iff the convex part does not entail the
//!   corresponding equality;
//! * exact Gaussian elimination of equality constraints, eliminating the
//!   freshest (highest-id) variable of each pivot so that variables
//!   introduced by encoders are removed before the original ones.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::logic::{Constraint, ConstraintRel, LinearExpr, Variable};
use crate::rational::Rat;

/// Row relation of an LP constraint `expr rel 0`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LpRel {
    Le,
    Eq,
}

/// Result of an optimization.
#[derive(Clone, Debug)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal {
        value: Rat,
        point: BTreeMap<Variable, Rat>,
    },
}

/// Maximizes `objective` subject to rows `expr <= 0` / `expr = 0`.
pub fn maximize(objective: &LinearExpr, rows: &[(LinearExpr, LpRel)]) -> LpOutcome {
    Tableau::solve(objective, rows)
}

/// Minimizes `objective`; same conventions as [`maximize`].
pub fn minimize(objective: &LinearExpr, rows: &[(LinearExpr, LpRel)]) -> LpOutcome {
    match maximize(&(-objective.clone()), rows) {
        LpOutcome::Optimal { value, point } => LpOutcome::Optimal {
            value: -value,
            point,
        },
        other => other,
    }
}

/// A feasible point of the closed system, if any.
pub fn feasible_point(rows: &[(LinearExpr, LpRel)]) -> Option<BTreeMap<Variable, Rat>> {
    match maximize(&LinearExpr::zero(), rows) {
        LpOutcome::Optimal { point, .. } => Some(point),
        LpOutcome::Unbounded => unreachable!("constant objective cannot be unbounded"),
        LpOutcome::Infeasible => None,
    }
}

struct Tableau {
    // rows x cols, col layout: structural columns then artificials,
    // rightmost column is the rhs.
    a: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    obj: Vec<Rat>,
    n_structural: usize,
}

impl Tableau {
    fn solve(objective: &LinearExpr, rows: &[(LinearExpr, LpRel)]) -> LpOutcome {
        // Collect variables.
        let mut vars: Vec<Variable> = rows
            .iter()
            .flat_map(|(e, _)| e.variables().cloned())
            .chain(objective.variables().cloned())
            .collect();
        vars.sort();
        vars.dedup();
        let nv = vars.len();
        let col_of = |v: &Variable, vars: &[Variable]| vars.binary_search(v).unwrap();

        let n_le = rows.iter().filter(|(_, r)| *r == LpRel::Le).count();
        // Columns: u_i, v_i (free split), slacks, artificials.
        let n_structural = 2 * nv + n_le;
        let m = rows.len();
        let n_total = n_structural + m;

        let mut a = vec![vec![Rat::zero(); n_total + 1]; m];
        let mut basis = vec![0usize; m];
        let mut slack_idx = 0usize;
        for (i, (expr, rel)) in rows.iter().enumerate() {
            // expr <= 0  becomes  coeffs . x <= -constant
            let mut rhs = -expr.constant_part().clone();
            let mut coef = vec![Rat::zero(); n_total];
            for (v, c) in expr.terms() {
                let j = col_of(v, &vars);
                coef[2 * j] = c.clone();
                coef[2 * j + 1] = -c.clone();
            }
            if *rel == LpRel::Le {
                coef[2 * nv + slack_idx] = Rat::one();
                slack_idx += 1;
            }
            if rhs.is_negative() {
                for c in &mut coef {
                    *c = -c.clone();
                }
                rhs = -rhs;
            }
            coef[n_structural + i] = Rat::one();
            a[i][..n_total].clone_from_slice(&coef);
            a[i][n_total] = rhs;
            basis[i] = n_structural + i;
        }

        let mut t = Tableau {
            a,
            basis,
            obj: vec![Rat::zero(); n_total + 1],
            n_structural,
        };

        // Phase 1: maximize -(sum of artificials); feasible iff optimum 0.
        let mut phase1_cost = vec![Rat::zero(); n_total];
        for j in n_structural..n_total {
            phase1_cost[j] = -Rat::one();
        }
        t.set_objective(&phase1_cost);
        if t.run() == Run::Unbounded {
            unreachable!("phase 1 objective is bounded above by zero");
        }
        if !t.obj[n_total].is_zero() {
            return LpOutcome::Infeasible;
        }
        t.evict_artificials();

        // Phase 2.
        let mut cost = vec![Rat::zero(); n_total];
        for (v, c) in objective.terms() {
            let j = col_of(v, &vars);
            cost[2 * j] = c.clone();
            cost[2 * j + 1] = -c.clone();
        }
        t.set_objective(&cost);
        if t.run() == Run::Unbounded {
            return LpOutcome::Unbounded;
        }

        let mut point = BTreeMap::new();
        let mut z = vec![Rat::zero(); t.n_structural];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < t.n_structural {
                z[b] = t.a[i][t.a[i].len() - 1].clone();
            }
        }
        for (j, v) in vars.iter().enumerate() {
            point.insert(v.clone(), z[2 * j].clone() - z[2 * j + 1].clone());
        }
        let value = t.obj[n_total].clone() + objective.constant_part();
        LpOutcome::Optimal { value, point }
    }

    /// Rebuilds the reduced-cost row for cost vector `c`.
    fn set_objective(&mut self, c: &[Rat]) {
        let ncols = self.obj.len();
        let mut obj = vec![Rat::zero(); ncols];
        for j in 0..ncols {
            let mut r = if j < c.len() { -c[j].clone() } else { Rat::zero() };
            for (i, &b) in self.basis.iter().enumerate() {
                if b < c.len() && !c[b].is_zero() {
                    r += &c[b] * &self.a[i][j];
                }
            }
            obj[j] = r;
        }
        // Note sign: obj[j] = c_B B^-1 A_j - c_j; the rhs cell carries the
        // current objective value.
        self.obj = obj;
    }

    fn run(&mut self) -> Run {
        let ncols = self.obj.len() - 1;
        loop {
            // Bland: first column with negative reduced cost.
            let Some(enter) = (0..ncols).find(|&j| self.obj[j].is_negative()) else {
                return Run::Optimal;
            };
            // Ratio test; Bland tie-break on smallest basis index.
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][enter];
                if aij.is_positive() {
                    let ratio = &self.a[i][ncols] / aij;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Run::Unbounded;
            };
            self.pivot(row, enter);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let ncols = self.obj.len();
        let p = self.a[row][col].clone();
        for x in &mut self.a[row] {
            *x /= &p;
        }
        for i in 0..self.a.len() {
            if i != row && !self.a[i][col].is_zero() {
                let f = self.a[i][col].clone();
                for j in 0..ncols {
                    let d = &self.a[row][j] * &f;
                    self.a[i][j] -= d;
                }
            }
        }
        if !self.obj[col].is_zero() {
            let f = self.obj[col].clone();
            for j in 0..ncols {
                let d = &self.a[row][j] * &f;
                self.obj[j] -= d;
            }
        }
        self.basis[row] = col;
    }

    /// After phase 1, pivots basic artificials out or deletes redundant
    /// rows so that phase 2 never re-enters them.
    fn evict_artificials(&mut self) {
        let ncols = self.obj.len() - 1;
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= self.n_structural {
                if let Some(col) = (0..self.n_structural).find(|&j| !self.a[i][j].is_zero()) {
                    self.pivot(i, col);
                } else {
                    self.a.remove(i);
                    self.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        // Zero out artificial columns so they never re-enter.
        for row in self.a.iter_mut() {
            for j in self.n_structural..ncols {
                row[j] = Rat::zero();
            }
        }
    }
}

#[derive(PartialEq, Eq)]
enum Run {
    Optimal,
    Unbounded,
}

/// Exact Gaussian elimination of `expr = 0` rows. Returns substitutions
/// `v -> rhs` in elimination order, with fully substituted right-hand
/// sides, or `None` if the system is inconsistent. Each pivot is the
/// highest-id variable of its row.
pub fn solve_equalities(eqs: &[LinearExpr]) -> Option<Vec<(Variable, LinearExpr)>> {
    match reduce_equalities(eqs, &std::collections::BTreeSet::new()) {
        EqReduction::Inconsistent => None,
        EqReduction::Reduced { subst, residual } => {
            debug_assert!(residual.is_empty());
            Some(subst)
        }
    }
}

/// Result of [`reduce_equalities`].
pub enum EqReduction {
    /// The system contains a ground contradiction such as `1 = 0`.
    Inconsistent,
    /// Triangularized system: `subst` eliminates one pivot variable per
    /// row, and `residual` holds the rows whose variables all lie in the
    /// protected set, fully substituted.
    Reduced {
        subst: Vec<(Variable, LinearExpr)>,
        residual: Vec<LinearExpr>,
    },
}

/// Gaussian elimination of `expr = 0` rows that never pivots on a
/// variable in `keep`. Rows mentioning only protected variables are
/// returned as residual constraints instead of being solved. Pivots
/// prefer the highest-id eligible variable of each row.
pub fn reduce_equalities(
    eqs: &[LinearExpr],
    keep: &std::collections::BTreeSet<Variable>,
) -> EqReduction {
    let mut subst: Vec<(Variable, LinearExpr)> = Vec::new();
    let mut residual: Vec<LinearExpr> = Vec::new();
    for eq in eqs {
        let mut e = eq.clone();
        for (v, rhs) in &subst {
            e = e.substitute(v, rhs);
        }
        if e.is_constant() {
            if e.constant_part().is_zero() {
                continue;
            }
            return EqReduction::Inconsistent;
        }
        let Some(pivot) = e.variables().filter(|v| !keep.contains(v)).last().cloned() else {
            residual.push(e);
            continue;
        };
        let c = e.coeff(&pivot);
        let mut rhs = e.substitute(&pivot, &LinearExpr::zero());
        rhs = rhs * (-Rat::one() / c);
        for (_, prev_rhs) in subst.iter_mut() {
            *prev_rhs = prev_rhs.substitute(&pivot, &rhs);
        }
        subst.push((pivot, rhs));
    }
    // Residual rows mention only protected variables and each pivot is
    // unprotected, so later substitutions cannot touch them: they are
    // final as pushed.
    EqReduction::Reduced { subst, residual }
}

/// Satisfiability of a conjunction of linear constraints over the reals,
/// exact, including strict inequalities and disequalities.
pub fn constraints_sat(cons: &[Constraint]) -> bool {
    let mut eqs = Vec::new();
    let mut closed = Vec::new();
    let mut strict = Vec::new();
    let mut diseq = Vec::new();
    for c in cons {
        match c.rel {
            ConstraintRel::Eq => eqs.push(c.expr.clone()),
            ConstraintRel::Le => closed.push(c.expr.clone()),
            ConstraintRel::Lt => strict.push(c.expr.clone()),
            ConstraintRel::Ne => diseq.push(c.expr.clone()),
        }
    }
    let Some(subst) = solve_equalities(&eqs) else {
        return false;
    };
    let apply = |e: &LinearExpr| -> LinearExpr {
        let mut out = e.clone();
        for (v, rhs) in &subst {
            out = out.substitute(v, rhs);
        }
        out
    };
    let mut closed_r = Vec::new();
    for e in &closed {
        let e = apply(e);
        if e.is_constant() {
            if e.constant_part().is_positive() {
                return false;
            }
        } else {
            closed_r.push(e);
        }
    }
    let mut strict_r = Vec::new();
    for e in &strict {
        let e = apply(e);
        if e.is_constant() {
            if !e.constant_part().is_negative() {
                return false;
            }
        } else {
            strict_r.push(e);
        }
    }
    if !system_sat(&closed_r, &strict_r) {
        return false;
    }
    for e in &diseq {
        let e = apply(e);
        if e.is_constant() {
            if e.constant_part().is_zero() {
                return false;
            }
            continue;
        }
        // Finitely many hyperplanes cannot cover a convex set unless one
        // of them contains it, so disequalities are checked one by one.
        let mut lt = strict_r.clone();
        lt.push(e.clone());
        let mut gt = strict_r.clone();
        gt.push(-e.clone());
        if !system_sat(&closed_r, &lt) && !system_sat(&closed_r, &gt) {
            return false;
        }
    }
    true
}

/// Satisfiability of `closed <= 0` and `strict < 0` rows.
fn system_sat(closed: &[LinearExpr], strict: &[LinearExpr]) -> bool {
    let mut rows: Vec<(LinearExpr, LpRel)> =
        closed.iter().map(|e| (e.clone(), LpRel::Le)).collect();
    if strict.is_empty() {
        return feasible_point(&rows).is_some();
    }
    let eps = Variable::real("eps!");
    for e in strict {
        rows.push((e.clone() + LinearExpr::var(&eps), LpRel::Le));
    }
    rows.push((
        LinearExpr::var(&eps) - LinearExpr::constant(Rat::one()),
        LpRel::Le,
    ));
    match maximize(&LinearExpr::var(&eps), &rows) {
        LpOutcome::Optimal { value, .. } => value.is_positive(),
        LpOutcome::Unbounded => unreachable!("eps is bounded above by one"),
        LpOutcome::Infeasible => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Rel;
    use crate::rational::{int, rat};

    fn le0(e: LinearExpr) -> (LinearExpr, LpRel) {
        (e, LpRel::Le)
    }

    #[test]
    fn maximizes_simple_polytope() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        // max x + y  s.t.  x <= 3, y <= 2, x + y <= 4
        let rows = vec![
            le0(LinearExpr::var(&x) - LinearExpr::constant(int(3))),
            le0(LinearExpr::var(&y) - LinearExpr::constant(int(2))),
            le0(LinearExpr::var(&x) + LinearExpr::var(&y) - LinearExpr::constant(int(4))),
        ];
        match maximize(&(LinearExpr::var(&x) + LinearExpr::var(&y)), &rows) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, int(4));
                assert_eq!(
                    point[&x].clone() + point[&y].clone(),
                    int(4)
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_coordinates_are_reachable() {
        let x = Variable::real("x");
        // max x s.t. x <= -5
        let rows = vec![le0(LinearExpr::var(&x) + LinearExpr::constant(int(5)))];
        match maximize(&LinearExpr::var(&x), &rows) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, int(-5));
                assert_eq!(point[&x], int(-5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        let x = Variable::real("x");
        assert!(matches!(
            maximize(&LinearExpr::var(&x), &[]),
            LpOutcome::Unbounded
        ));
        let rows = vec![
            le0(LinearExpr::var(&x) - LinearExpr::constant(int(1))),
            le0(-LinearExpr::var(&x) + LinearExpr::constant(int(2))),
        ];
        assert!(matches!(
            maximize(&LinearExpr::var(&x), &rows),
            LpOutcome::Infeasible
        ));
    }

    #[test]
    fn equality_rows_are_respected() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        // max y  s.t.  x = 2, y <= x
        let rows = vec![
            (LinearExpr::var(&x) - LinearExpr::constant(int(2)), LpRel::Eq),
            le0(LinearExpr::var(&y) - LinearExpr::var(&x)),
        ];
        match maximize(&LinearExpr::var(&y), &rows) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, int(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn objective_constant_offset_is_kept() {
        let x = Variable::real("x");
        let rows = vec![le0(LinearExpr::var(&x) - LinearExpr::constant(int(1)))];
        let obj = LinearExpr::var(&x) + LinearExpr::constant(int(10));
        match maximize(&obj, &rows) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, int(11)),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn strict(e: LinearExpr) -> Constraint {
        Constraint {
            expr: e,
            rel: ConstraintRel::Lt,
        }
    }

    fn closed(e: LinearExpr) -> Constraint {
        Constraint {
            expr: e,
            rel: ConstraintRel::Le,
        }
    }

    #[test]
    fn strict_cycles_are_unsat() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let z = Variable::real("z");
        // x < y and y < x
        assert!(!constraints_sat(&[
            strict(LinearExpr::var(&x) - LinearExpr::var(&y)),
            strict(LinearExpr::var(&y) - LinearExpr::var(&x)),
        ]));
        // x < y, y < z, x < z
        assert!(constraints_sat(&[
            strict(LinearExpr::var(&x) - LinearExpr::var(&y)),
            strict(LinearExpr::var(&y) - LinearExpr::var(&z)),
            strict(LinearExpr::var(&x) - LinearExpr::var(&z)),
        ]));
    }

    #[test]
    fn closed_touching_point_is_sat_strict_is_not() {
        let x = Variable::real("x");
        // x <= 1 and x >= 1
        assert!(constraints_sat(&[
            closed(LinearExpr::var(&x) - LinearExpr::constant(int(1))),
            closed(-LinearExpr::var(&x) + LinearExpr::constant(int(1))),
        ]));
        // x < 1 and x >= 1
        assert!(!constraints_sat(&[
            strict(LinearExpr::var(&x) - LinearExpr::constant(int(1))),
            closed(-LinearExpr::var(&x) + LinearExpr::constant(int(1))),
        ]));
    }

    #[test]
    fn unbounded_strict_side_is_sat() {
        let x = Variable::real("x");
        // x < 5 alone: eps can grow but is capped; still satisfiable.
        assert!(constraints_sat(&[strict(
            LinearExpr::var(&x) - LinearExpr::constant(int(5))
        )]));
    }

    #[test]
    fn disequalities_respect_entailment() {
        let x = Variable::real("x");
        let pin = |v: &Variable, c: Rat| -> Vec<Constraint> {
            vec![
                closed(LinearExpr::var(v) - LinearExpr::constant(c.clone())),
                closed(-LinearExpr::var(v) + LinearExpr::constant(c)),
            ]
        };
        // x pinned to 0 and x != 0
        let mut cons = pin(&x, int(0));
        cons.push(Constraint {
            expr: LinearExpr::var(&x),
            rel: ConstraintRel::Ne,
        });
        assert!(!constraints_sat(&cons));
        // 0 <= x <= 1 and x != 1/2
        let cons = vec![
            closed(-LinearExpr::var(&x)),
            closed(LinearExpr::var(&x) - LinearExpr::constant(int(1))),
            Constraint {
                expr: LinearExpr::var(&x) - LinearExpr::constant(rat(1, 2)),
                rel: ConstraintRel::Ne,
            },
        ];
        assert!(constraints_sat(&cons));
    }

    #[test]
    fn equality_elimination_prefers_freshest_variable() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        // x - 2y = 0: y is fresher, so y := x/2.
        let subst = solve_equalities(&[LinearExpr::var(&x) - LinearExpr::term(int(2), &y)])
            .unwrap();
        assert_eq!(subst.len(), 1);
        assert_eq!(subst[0].0, y);
        assert_eq!(subst[0].1.coeff(&x), rat(1, 2));
    }

    #[test]
    fn inconsistent_equalities_are_detected() {
        let x = Variable::real("x");
        assert!(solve_equalities(&[
            LinearExpr::var(&x) - LinearExpr::constant(int(1)),
            LinearExpr::var(&x) - LinearExpr::constant(int(2)),
        ])
        .is_none());
    }

    #[test]
    fn chained_substitutions_are_closed() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let z = Variable::real("z");
        // z = y + 1, y = x + 1  =>  z rhs must not mention y.
        let subst = solve_equalities(&[
            LinearExpr::var(&z) - LinearExpr::var(&y) - LinearExpr::constant(int(1)),
            LinearExpr::var(&y) - LinearExpr::var(&x) - LinearExpr::constant(int(1)),
        ])
        .unwrap();
        for (_, rhs) in &subst {
            assert_eq!(rhs.coeff(&y), int(0));
            assert_eq!(rhs.coeff(&z), int(0));
        }
        let zr = subst.iter().find(|(v, _)| *v == z).unwrap();
        assert_eq!(zr.1.coeff(&x), int(1));
        assert_eq!(zr.1.constant_part(), &int(2));
    }

    #[test]
    fn atom_constraints_compose_with_sat_check() {
        // not(x < 0) and (x <= 1): satisfiable; adding (x > 1) breaks it
        // only in the strict sense.
        let x = Variable::real("x");
        let ge0 = crate::logic::atom::canonicalize(&-LinearExpr::var(&x), Rel::Le);
        let crate::logic::atom::CanonLit::Lit(crate::logic::Atom::Lra(a), false) = ge0 else {
            panic!("expected negated literal");
        };
        let c1 = a.constraint(false); // x >= 0
        let c2 = closed(LinearExpr::var(&x) - LinearExpr::constant(int(1)));
        assert!(constraints_sat(&[c1.clone(), c2.clone()]));
        let c3 = strict(-LinearExpr::var(&x) + LinearExpr::constant(int(1))); // x > 1
        assert!(!constraints_sat(&[c1, c2, c3]));
    }
}
