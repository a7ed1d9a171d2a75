//! Probabilistic property encoders: each constructor produces a
//! `(Δ_pre, Δ_post, weight)` triple whose conditional probability
//! `P(Δ_post | Δ_pre)` is the property's value under the given prior.
//!
//! Self-composed properties (individual fairness, monotonicity, noise
//! robustness) instantiate a second copy of the system over fresh
//! variables and relate the two input tuples in Δ_pre.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::bounds::{
    bounds_from_precondition, formula_status, propagate_bounds, simplify_formula,
    simplify_support,
};
use crate::integration::Polynomial;
use crate::logic::{CmpOp, Formula, LinearExpr, LraAtom, Sort, Term, Variable};
use crate::models::{Spn, SpnLeaf, SystemEncoding};
use crate::rational::{rat, Rat};
use crate::weights::WeightFunction;
use crate::wmi::{conditional_probability_measured, wmi_measured};
use crate::{Error, Result};

/// Distance norm for ball-shaped preconditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Norm {
    L1,
    #[default]
    Linf,
}

/// Which property a [`PropertyEncoding`] states, with its parameters.
#[derive(Clone, Debug)]
pub enum PropertyKind {
    LocalRobustness { eps: Rat, norm: Norm, class0: bool },
    RegressorRobustness { eps: Rat, delta: Rat, norm: Norm },
    Equivalence { local: Option<(Vec<Rat>, Rat)>, norm: Norm },
    IndividualFairness { eps: Rat, norm: Norm },
    Monotonicity { feature: usize },
    NoiseRobustness { noised: Vec<usize> },
    /// A bare conditional-probability query with no attached system.
    Conditional,
}

/// A property posed as a conditional-probability query: the value is
/// `WMI(Δ_post ∧ Δ_pre, w) / WMI(Δ_pre, w)` with both integrals over the
/// measured variables.
#[derive(Clone, Debug)]
pub struct PropertyEncoding {
    pub delta_pre: Formula,
    pub delta_post: Formula,
    /// Combined weight; its support carries the prior box and every
    /// system's defining formula χ_S.
    pub weight: WeightFunction,
    /// The measure-carrying dimensions; everything else is auxiliary and
    /// defined away by equality literals.
    pub measured: BTreeSet<Variable>,
    /// Single-atom guard conditions from the system encodings, the
    /// candidate pool for partitioned verification.
    pub conditions: Vec<LraAtom>,
    /// The system encodings behind the query (copies included), used for
    /// bound propagation and forward evaluation.
    pub systems: Vec<SystemEncoding>,
    pub kind: PropertyKind,
}

impl PropertyEncoding {
    /// The exact property value.
    pub fn probability(&self) -> Result<Rat> {
        conditional_probability_measured(
            &self.delta_post,
            &self.delta_pre,
            &self.weight,
            &self.measured,
        )
    }

    /// The mass of the precondition, `WMI(Δ_pre, w)`.
    pub fn precondition_mass(&self) -> Result<Rat> {
        Ok(wmi_measured(&self.delta_pre, &self.weight, &self.measured)?.value)
    }

    /// Exactness-preserving simplification: extracts variable bounds
    /// from the precondition and support, propagates them through every
    /// system's gates, and freezes each condition the box decides — in
    /// the support, the weight and the postcondition. Every probability
    /// is unchanged; enumeration just sees fewer atoms. Returns the
    /// simplified encoding and the number of frozen conditions.
    pub fn simplified(&self) -> Result<(PropertyEncoding, usize)> {
        let mut bbox = bounds_from_precondition(&self.delta_pre, &self.weight.support)?;
        for sys in &self.systems {
            propagate_bounds(&sys.gates, &mut bbox)?;
        }
        let mut decided = 0;
        let support = simplify_support(&bbox, &self.weight.support, &mut decided);
        let weight = self.weight.weight.rewrite_conditions(&mut |c| {
            let s = formula_status(&bbox, c);
            if s.is_some() {
                decided += 1;
            }
            s
        });
        let delta_post = simplify_formula(&bbox, &self.delta_post, &mut decided);
        let conditions = self
            .conditions
            .iter()
            .filter(|a| bbox.atom_status(a).is_none())
            .cloned()
            .collect();
        Ok((
            PropertyEncoding {
                delta_pre: self.delta_pre.clone(),
                delta_post,
                weight: WeightFunction::new(weight, support),
                measured: self.measured.clone(),
                conditions,
                systems: self.systems.clone(),
                kind: self.kind.clone(),
            },
            decided,
        ))
    }
}

/// `‖a − b‖ ≤ ε` (or `<` when `strict`) expanded into linear atoms
/// without fresh variables: per-coordinate bounds for L∞, one halfspace
/// per sign vector for L1.
pub fn distance_within(
    a: &[LinearExpr],
    b: &[LinearExpr],
    eps: &Rat,
    norm: Norm,
    strict: bool,
) -> Result<Formula> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "distance between vectors of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let op = if strict { CmpOp::Lt } else { CmpOp::Le };
    let bound = LinearExpr::constant(eps.clone());
    let mut parts = Vec::new();
    match norm {
        Norm::Linf => {
            for (x, y) in a.iter().zip(b) {
                let diff = x.clone() - y.clone();
                parts.push(Formula::cmp(&diff, op, &bound));
                parts.push(Formula::cmp(&(-diff), op, &bound));
            }
        }
        Norm::L1 => {
            let d = a.len();
            if d > 20 {
                return Err(Error::Shape(format!(
                    "L1 ball expansion over {d} coordinates is too large"
                )));
            }
            for signs in 0..(1u32 << d) {
                let mut acc = LinearExpr::zero();
                for (i, (x, y)) in a.iter().zip(b).enumerate() {
                    let diff = x.clone() - y.clone();
                    if signs & (1 << i) == 0 {
                        acc = acc + diff;
                    } else {
                        acc = acc - diff;
                    }
                }
                parts.push(Formula::cmp(&acc, op, &bound));
            }
        }
    }
    Ok(Formula::and(parts))
}

/// `‖a − b‖` as a term of nested if-then-elses: the sum of absolute
/// differences for L1, their left-folded binary maximum for L∞.
pub fn encode_distance(a: &[Term], b: &[Term], norm: Norm) -> Result<Term> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "distance between vectors of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<Term> = a
        .iter()
        .zip(b)
        .map(|(x, y)| Term::abs_diff(x.clone(), y.clone()))
        .collect();
    Ok(match norm {
        Norm::L1 => Term::Add(diffs),
        Norm::Linf => Term::max_of(diffs).unwrap_or_else(|| Term::constant(Rat::zero())),
    })
}

/// Unnormalized uniform prior: indicator weight over a box. Conditional
/// probabilities are mass ratios, so the missing normalization constant
/// cancels.
pub fn uniform_box_prior(bounds: &[(Variable, Rat, Rat)]) -> Result<WeightFunction> {
    let mut parts = Vec::with_capacity(bounds.len());
    for (v, lo, hi) in bounds {
        parts.push(Formula::interval(v, lo, hi)?);
    }
    Ok(WeightFunction::indicator(Formula::and(parts)))
}

/// Triangular density on `[lo, hi]` with the given mode: the standard
/// piecewise-linear hat, normalized exactly. `mode == lo` or
/// `mode == hi` give the one-sided ramps.
pub fn triangular_noise(var: &Variable, lo: &Rat, mode: &Rat, hi: &Rat) -> Result<WeightFunction> {
    if var.sort() != Sort::Real {
        return Err(Error::Shape(format!("noise variable `{var}` is not real")));
    }
    if lo >= hi || mode < lo || mode > hi {
        return Err(Error::Schema(format!(
            "triangular noise needs lo ≤ mode ≤ hi and lo < hi, got {lo}, {mode}, {hi}"
        )));
    }
    let width = hi - lo;
    let mut pieces = Vec::new();
    if mode > lo {
        // 2(x - lo) / ((hi - lo)(mode - lo)) on [lo, mode].
        let scale = rat(2, 1) / (&width * (mode - lo));
        let line = LinearExpr::var(var) - LinearExpr::constant(lo.clone());
        pieces.push((lo.clone(), mode.clone(), Polynomial::from_linear(&line).scale(&scale)));
    }
    if mode < hi {
        // 2(hi - x) / ((hi - lo)(hi - mode)) on [mode, hi].
        let scale = rat(2, 1) / (&width * (hi - mode));
        let line = LinearExpr::constant(hi.clone()) - LinearExpr::var(var);
        pieces.push((mode.clone(), hi.clone(), Polynomial::from_linear(&line).scale(&scale)));
    }
    crate::models::encode_spn(&Spn::Leaf(SpnLeaf {
        var: var.clone(),
        pieces,
    }))
}

fn check_eps(eps: &Rat) -> Result<()> {
    if !eps.is_positive() {
        return Err(Error::Schema(format!("ε must be positive, got {eps}")));
    }
    Ok(())
}

fn class_literal(sys: &SystemEncoding, polarity: bool) -> Result<Formula> {
    let c = Formula::prop(sys.class_var()?);
    Ok(if polarity { c } else { Formula::not(c) })
}

fn input_exprs(vars: &[Variable]) -> Vec<LinearExpr> {
    vars.iter().map(LinearExpr::var).collect()
}

fn const_exprs(vals: &[Rat]) -> Vec<LinearExpr> {
    vals.iter().map(|v| LinearExpr::constant(v.clone())).collect()
}

/// Wraps a raw conditional-probability query — arbitrary formulas and
/// weight, no attached system — as a property, so it can go through the
/// same verification loop.
pub fn conditional_query(
    delta_pre: Formula,
    delta_post: Formula,
    weight: WeightFunction,
    measured: BTreeSet<Variable>,
) -> PropertyEncoding {
    PropertyEncoding {
        delta_pre,
        delta_post,
        weight,
        measured,
        conditions: Vec::new(),
        systems: Vec::new(),
        kind: PropertyKind::Conditional,
    }
}

/// Local classification robustness at `x0`: within the ε-ball around
/// `x0`, the decision stays `class0`.
pub fn local_robustness(
    sys: &SystemEncoding,
    x0: &[Rat],
    class0: bool,
    eps: &Rat,
    prior: &WeightFunction,
    norm: Norm,
) -> Result<PropertyEncoding> {
    check_eps(eps)?;
    if x0.len() != sys.inputs.len() {
        return Err(Error::Shape(format!(
            "point has {} coordinates for {} inputs",
            x0.len(),
            sys.inputs.len()
        )));
    }
    let delta_pre = distance_within(
        &input_exprs(&sys.inputs),
        &const_exprs(x0),
        eps,
        norm,
        false,
    )?;
    let delta_post = class_literal(sys, class0)?;
    Ok(PropertyEncoding {
        delta_pre,
        delta_post,
        weight: WeightFunction::product_of([prior.clone(), sys.weight_function()]),
        measured: sys.inputs.iter().cloned().collect(),
        conditions: sys.partition_conditions(),
        systems: vec![sys.clone()],
        kind: PropertyKind::LocalRobustness {
            eps: eps.clone(),
            norm,
            class0,
        },
    })
}

/// Local regression robustness: within the ε-ball around `x0`, the score
/// stays within δ of `y0`.
pub fn regressor_robustness(
    sys: &SystemEncoding,
    x0: &[Rat],
    y0: &Rat,
    eps: &Rat,
    delta: &Rat,
    prior: &WeightFunction,
    norm: Norm,
) -> Result<PropertyEncoding> {
    check_eps(eps)?;
    check_eps(delta)?;
    if x0.len() != sys.inputs.len() {
        return Err(Error::Shape(format!(
            "point has {} coordinates for {} inputs",
            x0.len(),
            sys.inputs.len()
        )));
    }
    let delta_pre = distance_within(
        &input_exprs(&sys.inputs),
        &const_exprs(x0),
        eps,
        norm,
        false,
    )?;
    // |f(x) − y0| ≤ δ, expanded for the scalar case.
    let delta_post = distance_within(
        std::slice::from_ref(&sys.score),
        &[LinearExpr::constant(y0.clone())],
        delta,
        Norm::Linf,
        false,
    )?;
    Ok(PropertyEncoding {
        delta_pre,
        delta_post,
        weight: WeightFunction::product_of([prior.clone(), sys.weight_function()]),
        measured: sys.inputs.iter().cloned().collect(),
        conditions: sys.partition_conditions(),
        systems: vec![sys.clone()],
        kind: PropertyKind::RegressorRobustness {
            eps: eps.clone(),
            delta: delta.clone(),
            norm,
        },
    })
}

/// Decision equivalence of two classifiers over shared inputs, globally
/// or within an ε-ball around `x0`.
pub fn equivalence(
    sys1: &SystemEncoding,
    sys2: &SystemEncoding,
    prior: &WeightFunction,
    local: Option<(&[Rat], &Rat)>,
    norm: Norm,
) -> Result<PropertyEncoding> {
    if sys1.inputs != sys2.inputs {
        return Err(Error::Shape(
            "equivalence needs systems over the same input variables".into(),
        ));
    }
    let delta_pre = match local {
        None => Formula::tt(),
        Some((x0, eps)) => {
            check_eps(eps)?;
            if x0.len() != sys1.inputs.len() {
                return Err(Error::Shape(format!(
                    "point has {} coordinates for {} inputs",
                    x0.len(),
                    sys1.inputs.len()
                )));
            }
            distance_within(&input_exprs(&sys1.inputs), &const_exprs(x0), eps, norm, false)?
        }
    };
    let delta_post = Formula::iff(class_literal(sys1, true)?, class_literal(sys2, true)?);
    let weight = WeightFunction::product_of([
        prior.clone(),
        sys1.weight_function(),
        sys2.weight_function(),
    ]);
    let mut conditions = sys1.partition_conditions();
    for a in sys2.partition_conditions() {
        if !conditions.contains(&a) {
            conditions.push(a);
        }
    }
    Ok(PropertyEncoding {
        delta_pre,
        delta_post,
        weight,
        measured: sys1.inputs.iter().cloned().collect(),
        conditions,
        systems: vec![sys1.clone(), sys2.clone()],
        kind: PropertyKind::Equivalence {
            local: local.map(|(x0, eps)| (x0.to_vec(), eps.clone())),
            norm,
        },
    })
}

/// Demographic parity ratio
/// `P(c(x) | minority) / P(c(x) | ¬minority)`, evaluated exactly.
pub fn demographic_parity_ratio(
    sys: &SystemEncoding,
    minority: &Formula,
    prior: &WeightFunction,
) -> Result<Rat> {
    let c = class_literal(sys, true)?;
    let weight = WeightFunction::product_of([prior.clone(), sys.weight_function()]);
    let measured: BTreeSet<Variable> = sys.inputs.iter().cloned().collect();
    let group = |g: &Formula, name: &str| -> Result<Rat> {
        match conditional_probability_measured(&c, g, &weight, &measured) {
            Err(Error::NullCondition) => Err(Error::EmptyGroup(format!(
                "the {name} group carries no prior mass"
            ))),
            other => other,
        }
    };
    let p_min = group(minority, "minority")?;
    let p_maj = group(&Formula::not(minority.clone()), "majority")?;
    if p_maj.is_zero() {
        return Err(Error::EmptyGroup(
            "no positive decisions outside the minority group: parity ratio is undefined".into(),
        ));
    }
    Ok(p_min / p_maj)
}

/// Individual fairness: two inputs closer than ε (strictly) receive the
/// same decision. Both the prior and the system are self-composed.
pub fn individual_fairness(
    sys: &SystemEncoding,
    prior: &WeightFunction,
    eps: &Rat,
    norm: Norm,
) -> Result<PropertyEncoding> {
    check_eps(eps)?;
    let (copy, map) = sys.fresh_copy();
    let delta_pre = distance_within(
        &input_exprs(&sys.inputs),
        &input_exprs(&copy.inputs),
        eps,
        norm,
        true,
    )?;
    let delta_post = Formula::iff(class_literal(sys, true)?, class_literal(&copy, true)?);
    let base = WeightFunction::product_of([prior.clone(), sys.weight_function()]);
    let weight = WeightFunction::product_of([base.clone(), base.rename(&map)]);
    let mut measured: BTreeSet<Variable> = sys.inputs.iter().cloned().collect();
    measured.extend(copy.inputs.iter().cloned());
    let mut conditions = sys.partition_conditions();
    for a in copy.partition_conditions() {
        if !conditions.contains(&a) {
            conditions.push(a);
        }
    }
    Ok(PropertyEncoding {
        delta_pre,
        delta_post,
        weight,
        measured,
        conditions,
        systems: vec![sys.clone(), copy],
        kind: PropertyKind::IndividualFairness {
            eps: eps.clone(),
            norm,
        },
    })
}

/// Monotonicity of the score in one feature: raising feature `i` with
/// all other features fixed raises the score, in probability under the
/// self-composed prior.
pub fn monotonicity(
    sys: &SystemEncoding,
    feature: usize,
    prior: &WeightFunction,
) -> Result<PropertyEncoding> {
    if feature >= sys.inputs.len() {
        return Err(Error::Shape(format!(
            "feature index {feature} out of range for {} inputs",
            sys.inputs.len()
        )));
    }
    let (copy, map) = sys.fresh_copy();
    let mut pre = Vec::new();
    for (j, (x, xp)) in sys.inputs.iter().zip(&copy.inputs).enumerate() {
        let (xe, xpe) = (LinearExpr::var(x), LinearExpr::var(xp));
        if j == feature {
            pre.push(Formula::lt(&xe, &xpe));
        } else {
            pre.push(Formula::eq_expr(&xe, &xpe));
        }
    }
    let delta_post = Formula::lt(&sys.score, &copy.score);
    let base = WeightFunction::product_of([prior.clone(), sys.weight_function()]);
    let weight = WeightFunction::product_of([base.clone(), base.rename(&map)]);
    // The copies of the fixed features are defined away by the equality
    // literals; only the original inputs and the raised copy carry
    // measure.
    let mut measured: BTreeSet<Variable> = sys.inputs.iter().cloned().collect();
    measured.insert(copy.inputs[feature].clone());
    let mut conditions = sys.partition_conditions();
    for a in copy.partition_conditions() {
        if !conditions.contains(&a) {
            conditions.push(a);
        }
    }
    Ok(PropertyEncoding {
        delta_pre: Formula::and(pre),
        delta_post,
        weight,
        measured,
        conditions,
        systems: vec![sys.clone(), copy],
        kind: PropertyKind::Monotonicity { feature },
    })
}

/// Noise robustness: perturbing the listed features by additive noise
/// keeps the decision, in probability under prior × noise. Only the
/// system is self-composed; the noise weight must have bounded support
/// over its variables.
pub fn noise_robustness(
    sys: &SystemEncoding,
    prior: &WeightFunction,
    noise: &WeightFunction,
    noised: &[(usize, Variable)],
) -> Result<PropertyEncoding> {
    if noised.is_empty() {
        return Err(Error::Schema("no noised features given".into()));
    }
    let mut seen = BTreeSet::new();
    for (i, n) in noised {
        if *i >= sys.inputs.len() {
            return Err(Error::Shape(format!(
                "noised feature index {i} out of range for {} inputs",
                sys.inputs.len()
            )));
        }
        if !seen.insert(*i) {
            return Err(Error::Schema(format!("feature {i} noised twice")));
        }
        if n.sort() != Sort::Real {
            return Err(Error::Shape(format!("noise variable `{n}` is not real")));
        }
    }
    // The noise support must bound every noise variable.
    let noise_box = crate::bounds::bounds_from_precondition(&noise.support, &noise.support)?;
    let noise_vars: Vec<Variable> = noised.iter().map(|(_, n)| n.clone()).collect();
    noise_box.finite_intervals(&noise_vars)?;

    let (copy, map) = sys.fresh_copy();
    let mut pre = Vec::new();
    for (j, (x, xp)) in sys.inputs.iter().zip(&copy.inputs).enumerate() {
        let xe = LinearExpr::var(x);
        let xpe = LinearExpr::var(xp);
        match noised.iter().find(|(i, _)| *i == j) {
            Some((_, n)) => {
                pre.push(Formula::eq_expr(&xpe, &(xe + LinearExpr::var(n))));
            }
            None => pre.push(Formula::eq_expr(&xpe, &xe)),
        }
    }
    let delta_post = Formula::iff(class_literal(sys, true)?, class_literal(&copy, true)?);
    let weight = WeightFunction::product_of([
        prior.clone(),
        noise.clone(),
        sys.weight_function(),
        sys.weight_function().rename(&map),
    ]);
    let mut measured: BTreeSet<Variable> = sys.inputs.iter().cloned().collect();
    measured.extend(noise_vars);
    let mut conditions = sys.partition_conditions();
    for a in copy.partition_conditions() {
        if !conditions.contains(&a) {
            conditions.push(a);
        }
    }
    Ok(PropertyEncoding {
        delta_pre: Formula::and(pre),
        delta_post,
        weight,
        measured,
        conditions,
        systems: vec![sys.clone(), copy],
        kind: PropertyKind::NoiseRobustness {
            noised: noised.iter().map(|(i, _)| *i).collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Valuation;
    use crate::models::{encode_relu_nn, Activation, Gate, Layer, NeuralNet, TreeTerm};
    use crate::rational::int;
    use crate::weights::Weight;
    use crate::wmi::wmi_value;

    /// Classifier c ⟺ w·x + b ≥ 0 over fresh inputs.
    fn linear_classifier(w: &[Rat], b: Rat, inputs: &[Variable], tag: &str) -> SystemEncoding {
        let net = NeuralNet::new(vec![
            Layer::new(vec![w.to_vec()], vec![b], Activation::Identity).unwrap()
        ])
        .unwrap();
        encode_relu_nn(&net, inputs, &format!("{tag}!"))
            .unwrap()
            .with_class_output(&format!("{tag}c"))
    }

    fn unit_prior(vars: &[Variable], lo: i64, hi: i64) -> WeightFunction {
        let bounds: Vec<(Variable, Rat, Rat)> = vars
            .iter()
            .map(|v| (v.clone(), int(lo), int(hi)))
            .collect();
        uniform_box_prior(&bounds).unwrap()
    }

    #[test]
    fn distance_terms_evaluate_exactly() {
        let l1 = encode_distance(&[Term::constant(int(3))], &[Term::constant(int(5))], Norm::L1)
            .unwrap();
        assert_eq!(l1.eval(&Valuation::new()), Some(int(2)));

        let linf = encode_distance(
            &[Term::constant(int(1)), Term::constant(int(-2))],
            &[Term::constant(int(0)), Term::constant(int(0))],
            Norm::Linf,
        )
        .unwrap();
        assert_eq!(linf.eval(&Valuation::new()), Some(int(2)));

        let same = encode_distance(
            &[Term::constant(rat(7, 3))],
            &[Term::constant(rat(7, 3))],
            Norm::L1,
        )
        .unwrap();
        assert_eq!(same.eval(&Valuation::new()), Some(int(0)));
    }

    #[test]
    fn ball_expansions_have_exact_volumes() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let exprs = [LinearExpr::var(&x), LinearExpr::var(&y)];
        let center = [LinearExpr::constant(int(0)), LinearExpr::constant(int(0))];
        let one = WeightFunction::total(Weight::one());

        // L∞ ball of radius 1/2: a unit square.
        let cube = distance_within(&exprs, &center, &rat(1, 2), Norm::Linf, false).unwrap();
        assert_eq!(wmi_value(&cube, &one).unwrap(), int(1));

        // L1 ball of radius 1/2: a diamond of area 2ε² = 1/2.
        let diamond = distance_within(&exprs, &center, &rat(1, 2), Norm::L1, false).unwrap();
        assert_eq!(wmi_value(&diamond, &one).unwrap(), rat(1, 2));
    }

    #[test]
    fn robustness_at_a_boundary_point_is_one_half() {
        let x = Variable::real("x");
        // c ⟺ -x ≥ 0 ⟺ x ≤ 0.
        let sys = linear_classifier(&[int(-1)], int(0), std::slice::from_ref(&x), "m");
        let prior = unit_prior(std::slice::from_ref(&x), -2, 2);
        let prop =
            local_robustness(&sys, &[int(0)], true, &int(1), &prior, Norm::Linf).unwrap();
        assert_eq!(prop.probability().unwrap(), rat(1, 2));
    }

    #[test]
    fn robustness_inside_one_decision_cell_is_one() {
        let x = Variable::real("x");
        let sys = linear_classifier(&[int(-1)], int(0), std::slice::from_ref(&x), "m");
        let prior = unit_prior(std::slice::from_ref(&x), -8, 8);
        // Ball [4, 6] lies inside the negative cell.
        let prop =
            local_robustness(&sys, &[int(5)], false, &int(1), &prior, Norm::Linf).unwrap();
        assert_eq!(prop.probability().unwrap(), int(1));
        assert!(local_robustness(&sys, &[int(5)], false, &int(0), &prior, Norm::Linf).is_err());
    }

    #[test]
    fn identity_regressor_is_robust_when_delta_matches_eps() {
        let x = Variable::real("x");
        let net = NeuralNet::new(vec![
            Layer::new(vec![vec![int(1)]], vec![int(0)], Activation::Identity).unwrap()
        ])
        .unwrap();
        let sys = encode_relu_nn(&net, std::slice::from_ref(&x), "r!").unwrap();
        let prior = unit_prior(std::slice::from_ref(&x), -2, 2);
        let prop = regressor_robustness(
            &sys,
            &[int(0)],
            &int(0),
            &int(1),
            &int(1),
            &prior,
            Norm::Linf,
        )
        .unwrap();
        assert_eq!(prop.probability().unwrap(), int(1));
    }

    #[test]
    fn equivalence_of_thresholds_counts_the_disagreement_gap() {
        let x = Variable::real("x");
        let xs = [x.clone()];
        // c1 ⟺ x ≤ 0, c2 ⟺ x ≤ 1/2.
        let sys1 = linear_classifier(&[int(-1)], int(0), &xs, "a");
        let sys2 = linear_classifier(&[int(-1)], rat(1, 2), &xs, "b");
        let prior = unit_prior(&xs, 0, 1);

        let same = equivalence(&sys1, &sys1, &prior, None, Norm::Linf).unwrap();
        assert_eq!(same.probability().unwrap(), int(1));

        let diff = equivalence(&sys1, &sys2, &prior, None, Norm::Linf).unwrap();
        assert_eq!(diff.probability().unwrap(), rat(1, 2));

        // Symmetry, exactly.
        let flipped = equivalence(&sys2, &sys1, &prior, None, Norm::Linf).unwrap();
        assert_eq!(flipped.probability().unwrap(), rat(1, 2));

        // A system against its negation never agrees (up to measure zero).
        let neg = linear_classifier(&[int(1)], int(0), &xs, "n"); // c ⟺ x ≥ 0
        let opposite = equivalence(&sys1, &neg, &prior, None, Norm::Linf).unwrap();
        assert_eq!(opposite.probability().unwrap(), int(0));
    }

    #[test]
    fn parity_ratio_from_a_handmade_biased_prior() {
        let x = Variable::real("x");
        let b = Variable::bool("m");
        let xs = [x.clone()];
        // c ⟺ x ≤ 1/4.
        let sys = linear_classifier(&[int(-1)], rat(1, 4), &xs, "p");

        // Minority (m): uniform on [0,1]; majority (¬m): density 2 below
        // 1/4 and 2/3 above, both normalized.
        let w_min = Weight::one();
        let below = Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(rat(1, 4)));
        let w_maj = Weight::ite(below, Weight::constant(int(2)), Weight::constant(rat(2, 3)));
        let prior = WeightFunction::new(
            Weight::ite(Formula::prop(&b), w_min, w_maj),
            Formula::interval(&x, &int(0), &int(1)).unwrap(),
        );

        let ratio = demographic_parity_ratio(&sys, &Formula::prop(&b), &prior).unwrap();
        // P(c|m) = 1/4, P(c|¬m) = 1/2.
        assert_eq!(ratio, rat(1, 2));
    }

    #[test]
    fn parity_guards_null_groups_and_null_majority_rate() {
        let x = Variable::real("x");
        let xs = [x.clone()];
        let sys = linear_classifier(&[int(-1)], int(0), &xs, "p"); // c ⟺ x ≤ 0
        let prior = unit_prior(&xs, -1, 1);

        // Minority identical to the decision: majority rate is zero.
        let minority = Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(int(0)));
        assert!(matches!(
            demographic_parity_ratio(&sys, &minority, &prior),
            Err(Error::EmptyGroup(_))
        ));

        // A group with no prior mass.
        let empty = Formula::ge(&LinearExpr::var(&x), &LinearExpr::constant(int(5)));
        assert!(matches!(
            demographic_parity_ratio(&sys, &empty, &prior),
            Err(Error::EmptyGroup(_))
        ));
    }

    #[test]
    fn individual_fairness_of_a_threshold_under_wide_band() {
        let x = Variable::real("x");
        let xs = [x.clone()];
        let sys = linear_classifier(&[int(-1)], int(0), &xs, "f"); // c ⟺ x ≤ 0
        let prior = unit_prior(&xs, -1, 1);

        // Band |x − x′| < 2 covers the whole square: agreement mass is
        // the two half-squares, 1/2 of the total.
        let wide = individual_fairness(&sys, &prior, &int(2), Norm::Linf).unwrap();
        assert_eq!(wide.probability().unwrap(), rat(1, 2));

        // A tight band is almost always fair: 1 − ε/(4−ε) for ε = 1/1000.
        let eps = rat(1, 1000);
        let tight = individual_fairness(&sys, &prior, &eps, Norm::Linf).unwrap();
        let p = tight.probability().unwrap();
        assert_eq!(p, int(1) - &eps / (int(4) - &eps));
        assert!(p > rat(99, 100));

        // Constant classifier: always fair.
        let constant = linear_classifier(&[int(0)], int(1), &xs, "k");
        let always = individual_fairness(&constant, &prior, &int(1), Norm::Linf).unwrap();
        assert_eq!(always.probability().unwrap(), int(1));
    }

    #[test]
    fn fairness_is_invariant_under_swapping_the_copies() {
        let x = Variable::real("x");
        let xs = [x.clone()];
        let sys = linear_classifier(&[int(-1)], rat(1, 3), &xs, "f");
        let prior = unit_prior(&xs, -1, 1);
        let prop = individual_fairness(&sys, &prior, &rat(1, 2), Norm::Linf).unwrap();

        // Swap x ↔ x′ everywhere and recompute: exact same value.
        let originals: Vec<Variable> = xs.to_vec();
        let mut swap = std::collections::BTreeMap::new();
        for (a, b) in originals.iter().zip(prop.measured.iter().filter(|v| !originals.contains(v)))
        {
            swap.insert(a.clone(), b.clone());
            swap.insert(b.clone(), a.clone());
        }
        let swapped = conditional_probability_measured(
            &prop.delta_post.rename(&swap),
            &prop.delta_pre.rename(&swap),
            &prop.weight.rename(&swap),
            &prop.measured,
        )
        .unwrap();
        assert_eq!(prop.probability().unwrap(), swapped);
    }

    #[test]
    fn monotonicity_separates_rising_falling_and_step_scores() {
        let x = Variable::real("x");
        let xs = [x.clone()];
        let prior = unit_prior(&xs, 0, 1);

        let rising = {
            let net = NeuralNet::new(vec![
                Layer::new(vec![vec![int(1)]], vec![int(0)], Activation::Identity).unwrap()
            ])
            .unwrap();
            encode_relu_nn(&net, &xs, "up!").unwrap()
        };
        let prop = monotonicity(&rising, 0, &prior).unwrap();
        assert_eq!(prop.probability().unwrap(), int(1));

        let falling = {
            let net = NeuralNet::new(vec![
                Layer::new(vec![vec![int(-1)]], vec![int(0)], Activation::Identity).unwrap()
            ])
            .unwrap();
            encode_relu_nn(&net, &xs, "dn!").unwrap()
        };
        let prop = monotonicity(&falling, 0, &prior).unwrap();
        assert_eq!(prop.probability().unwrap(), int(0));

        // Step score ite(x ≤ 1/2; 0; 1): strict increase holds exactly
        // when x ≤ 1/2 < x′, mass 1/4 of the x < x′ half-square (1/2).
        let s = Variable::real("step");
        let step = SystemEncoding {
            inputs: xs.to_vec(),
            gates: vec![Gate::Tree {
                var: s.clone(),
                tree: TreeTerm::Split {
                    cond: Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(rat(1, 2))),
                    then: Box::new(TreeTerm::Leaf(int(0))),
                    els: Box::new(TreeTerm::Leaf(int(1))),
                },
            }],
            support: Formula::tt(),
            weight: Weight::one(),
            score: LinearExpr::var(&s),
            class: None,
        };
        let prop = monotonicity(&step, 0, &prior).unwrap();
        assert_eq!(prop.probability().unwrap(), rat(1, 2));
    }

    #[test]
    fn noise_robustness_of_a_threshold_under_uniform_noise() {
        let x = Variable::real("x");
        let xs = [x.clone()];
        let sys = linear_classifier(&[int(-1)], rat(1, 2), &xs, "n"); // c ⟺ x ≤ 1/2
        let prior = unit_prior(&xs, 0, 1);
        let n = Variable::real("noise");
        let noise = uniform_box_prior(&[(n.clone(), int(0), rat(1, 2))]).unwrap();

        let prop = noise_robustness(&sys, &prior, &noise, &[(0, n.clone())]).unwrap();
        assert_eq!(prop.probability().unwrap(), rat(3, 4));

        // Near-zero noise keeps the decision more often than wide noise.
        let tiny = uniform_box_prior(&[(n.clone(), int(0), rat(1, 1000))]).unwrap();
        let prop_tiny = noise_robustness(&sys, &prior, &tiny, &[(0, n.clone())]).unwrap();
        assert!(prop_tiny.probability().unwrap() > prop.probability().unwrap());

        // Constant classifiers shrug off any noise.
        let constant = linear_classifier(&[int(0)], int(1), &xs, "k");
        let prop_const = noise_robustness(&constant, &prior, &noise, &[(0, n.clone())]).unwrap();
        assert_eq!(prop_const.probability().unwrap(), int(1));

        // Unbounded noise is rejected.
        let unbounded = WeightFunction::total(Weight::one());
        assert!(noise_robustness(&sys, &prior, &unbounded, &[(0, n)]).is_err());
    }

    #[test]
    fn bound_propagation_freezes_guards_without_changing_probabilities() {
        let x = Variable::real("x");
        let xs = [x.clone()];
        // One rectifier unit: h = x − 1, y = max(h, 0), score = y − 1/4.
        let net = NeuralNet::new(vec![
            Layer::new(vec![vec![int(1)]], vec![int(-1)], Activation::Relu).unwrap(),
            Layer::new(vec![vec![int(1)]], vec![rat(-1, 4)], Activation::Identity).unwrap(),
        ])
        .unwrap();
        let sys = encode_relu_nn(&net, &xs, "g!").unwrap().with_class_output("gc");
        let prior = unit_prior(&xs, 0, 4);

        // Ball strictly inside the active region: the guard is decided.
        let inside =
            local_robustness(&sys, &[int(3)], true, &rat(1, 2), &prior, Norm::Linf).unwrap();
        let (slim, decided) = inside.simplified().unwrap();
        assert!(decided > 0);
        assert!(slim.conditions.len() < inside.conditions.len());
        assert!(slim.weight.support.atoms().len() < inside.weight.support.atoms().len());
        assert_eq!(slim.probability().unwrap(), inside.probability().unwrap());
        assert_eq!(
            slim.precondition_mass().unwrap(),
            inside.precondition_mass().unwrap()
        );

        // Ball straddling the kink: the guard stays open, values still match.
        let across =
            local_robustness(&sys, &[int(1)], true, &rat(1, 2), &prior, Norm::Linf).unwrap();
        let (slim, _) = across.simplified().unwrap();
        assert_eq!(slim.probability().unwrap(), across.probability().unwrap());
    }

    #[test]
    fn triangular_noise_normalizes_and_shapes_correctly() {
        let n = Variable::real("n");
        // Mode at the left end: a falling ramp on [0, 15].
        let ramp = triangular_noise(&n, &int(0), &int(0), &int(15)).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &ramp).unwrap(), int(1));
        let at = |v: Rat| {
            ramp.weight
                .evaluate(&Valuation::new().with_real(&n, v))
                .unwrap()
        };
        assert_eq!(at(int(0)), rat(2, 15));
        assert_eq!(at(int(15)), int(0));

        // Interior mode: a hat function, probed inside each piece (the
        // peak itself sits on two closed piece boundaries).
        let hat = triangular_noise(&n, &int(-1), &int(0), &int(1)).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &hat).unwrap(), int(1));
        let at = |v: Rat| {
            hat.weight
                .evaluate(&Valuation::new().with_real(&n, v))
                .unwrap()
        };
        assert_eq!(at(rat(-1, 2)), rat(1, 2));
        assert_eq!(at(rat(1, 2)), rat(1, 2));
        assert!(triangular_noise(&n, &int(1), &int(0), &int(0)).is_err());
    }
}
