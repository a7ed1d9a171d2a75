//! The model-integration engine.
//!
//! `wmi(Δ, ⟨w, χ⟩)` enumerates the total truth assignments of `Δ ∧ χ`
//! extended with the weight's condition atoms, collapses the weight to a
//! polynomial on each assignment, and integrates that polynomial over the
//! assignment's solution set. Equality literals are functional definitions
//! (fresh quantities defined from earlier ones), so each one eliminates a
//! variable by exact substitution before integration; the remaining
//! inequalities span a full-dimensional region whenever the assignment
//! carries mass. Boundary assignments — where a closed and a strict version
//! of the same hyperplane pin the region to a slice — integrate to zero, as
//! do disequalities, which only remove measure-zero sets.
//!
//! The `_measured` variants take the set of variables that carry the
//! measure (the distribution's own dimensions). Equality literals then
//! only eliminate *auxiliary* variables — network pre-activations, gate
//! outputs and other defined quantities — and an assignment whose
//! equalities pin a relation between the measured variables themselves is
//! a lower-dimensional slice of the integration domain and contributes
//! zero.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use num_traits::{Signed, Zero};

use crate::enumeration::{assignment_constraints, for_each_tta};
use crate::integration::integrate_over;
use crate::logic::{Assignment, Constraint, ConstraintRel, Formula, Variable};
use crate::lp::EqReduction;
use crate::rational::Rat;
use crate::weights::{Weight, WeightFunction};
use crate::{Error, Result};

/// Counters from one engine run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WmiStats {
    /// Total truth assignments visited.
    pub assignments: u64,
    /// Polytope integrations performed (assignments whose restricted
    /// weight was not structurally zero).
    pub integrations: u64,
}

impl WmiStats {
    pub fn absorb(&mut self, other: WmiStats) {
        self.assignments += other.assignments;
        self.integrations += other.integrations;
    }
}

/// An exact weighted model integral together with its run counters.
#[derive(Clone, Debug)]
pub struct WmiOutcome {
    pub value: Rat,
    pub stats: WmiStats,
}

/// Computes `WMI(Δ, ⟨w, χ⟩)`: the weighted volume of `Δ ∧ χ`. Every
/// equality literal is treated as a functional definition and may
/// eliminate any of its variables.
pub fn wmi(delta: &Formula, wf: &WeightFunction) -> Result<WmiOutcome> {
    wmi_measured(delta, wf, &BTreeSet::new())
}

/// [`wmi`] with an explicit set of measured variables that equality
/// literals must not eliminate.
pub fn wmi_measured(
    delta: &Formula,
    wf: &WeightFunction,
    measured: &BTreeSet<Variable>,
) -> Result<WmiOutcome> {
    let full = Formula::and([delta.clone(), wf.support.clone()]);
    let extras = wf.weight.condition_atoms();

    let mut total = Rat::zero();
    let mut stats = WmiStats::default();
    let mut failure: Option<Error> = None;
    for_each_tta(&full, &extras, |asg| {
        stats.assignments += 1;
        match assignment_mass(asg, &wf.weight, measured, &mut stats) {
            Ok(mass) => {
                total += mass;
                ControlFlow::Continue(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(WmiOutcome {
            value: total,
            stats,
        }),
    }
}

/// Convenience wrapper returning only the value.
pub fn wmi_value(delta: &Formula, wf: &WeightFunction) -> Result<Rat> {
    Ok(wmi(delta, wf)?.value)
}

/// `P(Γ | Δ) = WMI(Γ ∧ Δ) / WMI(Δ)`; the denominator must carry mass.
pub fn conditional_probability(
    gamma: &Formula,
    delta: &Formula,
    wf: &WeightFunction,
) -> Result<Rat> {
    conditional_probability_measured(gamma, delta, wf, &BTreeSet::new())
}

/// [`conditional_probability`] with an explicit measured-variable set.
pub fn conditional_probability_measured(
    gamma: &Formula,
    delta: &Formula,
    wf: &WeightFunction,
    measured: &BTreeSet<Variable>,
) -> Result<Rat> {
    let denom = wmi_measured(delta, wf, measured)?.value;
    if denom.is_zero() {
        return Err(Error::NullCondition);
    }
    let joint = Formula::and([gamma.clone(), delta.clone()]);
    let numer = wmi_measured(&joint, wf, measured)?.value;
    Ok(numer / denom)
}

/// Per-assignment masses, for inspection and additivity checks.
pub fn contributions(delta: &Formula, wf: &WeightFunction) -> Result<Vec<(Assignment, Rat)>> {
    let full = Formula::and([delta.clone(), wf.support.clone()]);
    let extras = wf.weight.condition_atoms();
    let mut out = Vec::new();
    let mut stats = WmiStats::default();
    let mut failure: Option<Error> = None;
    for_each_tta(&full, &extras, |asg| {
        match assignment_mass(asg, &wf.weight, &BTreeSet::new(), &mut stats) {
            Ok(mass) => {
                out.push((asg.clone(), mass));
                ControlFlow::Continue(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Mass of one total truth assignment: restrict the weight, eliminate the
/// equality-defined variables, integrate what remains.
fn assignment_mass(
    asg: &Assignment,
    weight: &Weight,
    measured: &BTreeSet<Variable>,
    stats: &mut WmiStats,
) -> Result<Rat> {
    let mut poly = weight.restrict(asg)?;
    if poly.is_zero() {
        return Ok(Rat::zero());
    }

    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for c in assignment_constraints(asg) {
        match c.rel {
            ConstraintRel::Eq => equalities.push(c.expr),
            ConstraintRel::Le | ConstraintRel::Lt => inequalities.push(c),
            // Disequalities exclude a measure-zero set; they were already
            // honoured by the enumerator's feasibility check.
            ConstraintRel::Ne => {}
        }
    }

    if !equalities.is_empty() {
        let subst = match crate::lp::reduce_equalities(&equalities, measured) {
            EqReduction::Inconsistent => return Ok(Rat::zero()),
            // A leftover relation purely between measured variables pins
            // the region to a slice of the integration domain: measure
            // zero.
            EqReduction::Reduced { residual, .. } if !residual.is_empty() => {
                return Ok(Rat::zero())
            }
            EqReduction::Reduced { subst, .. } => subst,
        };
        for (v, rhs) in &subst {
            for c in &mut inequalities {
                c.expr = c.expr.substitute(v, rhs);
            }
            poly = poly.substitute(v, rhs);
        }
    }

    let (ground, spatial): (Vec<Constraint>, Vec<Constraint>) = inequalities
        .into_iter()
        .partition(|c| c.expr.is_constant());
    for c in &ground {
        let k = c.expr.constant_part();
        let holds = match c.rel {
            ConstraintRel::Le => !k.is_positive(),
            ConstraintRel::Lt => k.is_negative(),
            _ => unreachable!("ground constraints here are inequalities"),
        };
        if !holds {
            return Ok(Rat::zero());
        }
    }

    stats.integrations += 1;
    integrate_over(&spatial, &poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integration::Polynomial;
    use crate::logic::{LinearExpr, Variable};
    use crate::rational::{int, rat};
    use crate::weights::Weight;

    fn guard_problem() -> (Formula, WeightFunction, Formula) {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let a = Variable::bool("A");
        let unit = |v: &Variable| {
            Formula::interval(v, &int(0), &int(1)).expect("unit interval is nonempty")
        };
        let mut sum = LinearExpr::zero();
        sum.add_term(&int(1), &x);
        sum.add_term(&int(1), &y);
        let guard = Formula::le(&sum, &LinearExpr::constant(int(1)));
        let delta = Formula::and([
            unit(&x),
            unit(&y),
            Formula::implies(Formula::prop(&a), guard.clone()),
        ]);
        let weight = Weight::product([
            Weight::ite(guard, Weight::var(&x), Weight::one()),
            Weight::ite(Formula::prop(&a), Weight::one(), Weight::var(&y)),
        ]);
        (delta, WeightFunction::total(weight), Formula::prop(&a))
    }

    #[test]
    fn guarded_square_mass_is_thirteen_twentyfourths() {
        let (delta, wf, _) = guard_problem();
        let out = wmi(&delta, &wf).unwrap();
        assert_eq!(out.value, rat(13, 24));
        assert_eq!(out.stats.assignments, 3);
        assert_eq!(out.stats.integrations, 3);
    }

    #[test]
    fn guarded_square_conditional_probability() {
        let (delta, wf, gamma) = guard_problem();
        assert_eq!(conditional_probability(&gamma, &delta, &wf).unwrap(), rat(4, 13));
    }

    #[test]
    fn per_assignment_masses_of_the_guard_problem() {
        let (delta, wf, _) = guard_problem();
        let mut masses: Vec<Rat> = contributions(&delta, &wf)
            .unwrap()
            .into_iter()
            .map(|(_, m)| m)
            .collect();
        masses.sort();
        assert_eq!(masses, vec![rat(1, 24), rat(1, 6), rat(1, 3)]);
    }

    #[test]
    fn indicator_weight_measures_volume() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let delta = Formula::and([
            Formula::interval(&x, &int(0), &int(2)).unwrap(),
            Formula::interval(&y, &int(0), &int(3)).unwrap(),
        ]);
        assert_eq!(
            wmi_value(&delta, &WeightFunction::indicator(Formula::tt())).unwrap(),
            int(6)
        );
    }

    #[test]
    fn boolean_only_problems_reduce_to_weighted_counting() {
        let a = Variable::bool("A");
        let b = Variable::bool("B");
        let delta = Formula::or([Formula::prop(&a), Formula::prop(&b)]);
        let weight = Weight::ite(
            Formula::prop(&a),
            Weight::constant(int(2)),
            Weight::constant(int(3)),
        );
        // Models: {A,B} -> 2, {A,!B} -> 2, {!A,B} -> 3.
        assert_eq!(
            wmi_value(&delta, &WeightFunction::total(weight)).unwrap(),
            int(7)
        );
    }

    #[test]
    fn equality_literals_define_and_eliminate_variables() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let mut two_x = LinearExpr::zero();
        two_x.add_term(&int(2), &x);
        let delta = Formula::and([
            Formula::interval(&x, &int(0), &int(1)).unwrap(),
            Formula::eq_expr(&LinearExpr::var(&y), &two_x),
        ]);
        let wf = WeightFunction::total(Weight::var(&y));
        // ∫_0^1 2x dx = 1, with y defined as 2x.
        assert_eq!(wmi_value(&delta, &wf).unwrap(), int(1));
    }

    #[test]
    fn measured_variables_resist_elimination() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let mut two_x = LinearExpr::zero();
        two_x.add_term(&int(2), &x);
        let delta = Formula::and([
            Formula::interval(&x, &int(0), &int(1)).unwrap(),
            Formula::interval(&y, &int(0), &int(3)).unwrap(),
            Formula::eq_expr(&LinearExpr::var(&y), &two_x),
        ]);
        let wf = WeightFunction::total(Weight::one());

        // y auxiliary: the equality defines y from x, leaving ∫_0^1 1 dx.
        let only_x = BTreeSet::from([x.clone()]);
        assert_eq!(wmi_measured(&delta, &wf, &only_x).unwrap().value, int(1));

        // Both measured: the diagonal y = 2x has zero planar measure.
        let both = BTreeSet::from([x.clone(), y.clone()]);
        assert_eq!(wmi_measured(&delta, &wf, &both).unwrap().value, int(0));
    }

    #[test]
    fn boundary_slices_carry_no_mass() {
        let x = Variable::real("x");
        let delta = Formula::interval(&x, &int(0), &int(1)).unwrap();
        // Weight condition splits at the closed upper end: the assignment
        // (x <= 1) ∧ ¬(x < 1) is the point x = 1 and must contribute zero.
        let strict = Formula::lt(&LinearExpr::var(&x), &LinearExpr::constant(int(1)));
        let weight = Weight::ite(strict, Weight::one(), Weight::constant(int(5)));
        let out = wmi(&delta, &WeightFunction::total(weight)).unwrap();
        assert_eq!(out.value, int(1));
        assert_eq!(out.stats.assignments, 2);
    }

    #[test]
    fn masses_add_over_a_partition() {
        let (delta, wf, _) = guard_problem();
        let x = delta
            .variables()
            .into_iter()
            .find(|v| v.name() == "x")
            .unwrap();
        let half = Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(rat(1, 2)));
        let whole = wmi_value(&delta, &wf).unwrap();
        let low = wmi_value(&Formula::and([delta.clone(), half.clone()]), &wf).unwrap();
        let high = wmi_value(&Formula::and([delta, Formula::not(half)]), &wf).unwrap();
        assert_eq!(whole, low + high);
    }

    #[test]
    fn conditioning_on_a_null_region_is_an_error() {
        let x = Variable::real("x");
        let delta = Formula::and([
            Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(int(0))),
            Formula::ge(&LinearExpr::var(&x), &LinearExpr::constant(int(1))),
        ]);
        let gamma = Formula::tt();
        let err = conditional_probability(&gamma, &delta, &WeightFunction::indicator(Formula::tt()))
            .unwrap_err();
        assert!(matches!(err, Error::NullCondition));
    }

    #[test]
    fn structurally_zero_weights_skip_integration() {
        let x = Variable::real("x");
        let delta = Formula::interval(&x, &int(0), &int(1)).unwrap();
        let wf = WeightFunction::total(Weight::poly(Polynomial::zero()));
        let out = wmi(&delta, &wf).unwrap();
        assert_eq!(out.value, int(0));
        assert_eq!(out.stats.assignments, 1);
        assert_eq!(out.stats.integrations, 0);
    }
}
