//! Sum-product networks with piecewise-polynomial leaves, validated and
//! encoded as weight functions.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::integration::Polynomial;
use crate::logic::{Formula, Sort, Valuation, Variable};
use crate::rational::Rat;
use crate::weights::{Weight, WeightFunction};
use crate::{Error, Result};

/// A univariate leaf density: disjoint bounded pieces, each carrying a
/// polynomial in the leaf's variable; zero outside the pieces.
#[derive(Clone, Debug)]
pub struct SpnLeaf {
    pub var: Variable,
    /// `(lo, hi, polynomial)` pieces, disjoint up to shared endpoints.
    pub pieces: Vec<(Rat, Rat, Polynomial)>,
}

/// A sum-product network: normalized mixtures of same-scope children,
/// products of disjoint-scope children, piecewise-polynomial leaves.
#[derive(Clone, Debug)]
pub enum Spn {
    Sum(Vec<(Rat, Spn)>),
    Product(Vec<Spn>),
    Leaf(SpnLeaf),
}

impl Spn {
    /// The set of variables this node models.
    pub fn scope(&self) -> BTreeSet<Variable> {
        match self {
            Spn::Leaf(l) => BTreeSet::from([l.var.clone()]),
            Spn::Sum(parts) => parts
                .iter()
                .flat_map(|(_, c)| c.scope())
                .collect(),
            Spn::Product(parts) => parts.iter().flat_map(Spn::scope).collect(),
        }
    }

    /// Structural validity: normalized sums over a common scope,
    /// decomposable products, normalized bounded leaves.
    pub fn validate(&self) -> Result<()> {
        match self {
            Spn::Leaf(l) => validate_leaf(l),
            Spn::Sum(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidSpn("sum node has no children".into()));
                }
                let mut total = Rat::zero();
                for (w, c) in parts {
                    if w < &Rat::zero() {
                        return Err(Error::InvalidSpn("negative mixture weight".into()));
                    }
                    total += w;
                    c.validate()?;
                }
                if total != Rat::one() {
                    return Err(Error::InvalidSpn(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                let scope = parts[0].1.scope();
                for (_, c) in &parts[1..] {
                    if c.scope() != scope {
                        return Err(Error::InvalidSpn(
                            "mixture children model different variables".into(),
                        ));
                    }
                }
                Ok(())
            }
            Spn::Product(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidSpn("product node has no children".into()));
                }
                let mut seen: BTreeSet<Variable> = BTreeSet::new();
                for c in parts {
                    c.validate()?;
                    for v in c.scope() {
                        if !seen.insert(v.clone()) {
                            return Err(Error::InvalidSpn(format!(
                                "product children share the variable `{v}`"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Native density evaluation, zero outside leaf pieces. `None` when
    /// the point misses a scope variable.
    pub fn density_at(&self, point: &Valuation) -> Option<Rat> {
        match self {
            Spn::Leaf(l) => {
                let v = point.reals.get(&l.var)?;
                for (lo, hi, p) in &l.pieces {
                    if lo <= v && v <= hi {
                        let env = BTreeMap::from([(l.var.clone(), v.clone())]);
                        return p.eval(&env);
                    }
                }
                Some(Rat::zero())
            }
            Spn::Sum(parts) => {
                let mut acc = Rat::zero();
                for (w, c) in parts {
                    acc += w * c.density_at(point)?;
                }
                Some(acc)
            }
            Spn::Product(parts) => {
                let mut acc = Rat::one();
                for c in parts {
                    acc *= c.density_at(point)?;
                }
                Some(acc)
            }
        }
    }
}

fn validate_leaf(l: &SpnLeaf) -> Result<()> {
    if l.var.sort() != Sort::Real {
        return Err(Error::InvalidSpn(format!(
            "leaf variable `{}` is not real-valued",
            l.var
        )));
    }
    if l.pieces.is_empty() {
        return Err(Error::InvalidSpn(format!(
            "leaf over `{}` has no pieces",
            l.var
        )));
    }
    let mut sorted: Vec<&(Rat, Rat, Polynomial)> = l.pieces.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut total = Rat::zero();
    let mut prev_hi: Option<&Rat> = None;
    for (lo, hi, p) in sorted {
        if lo >= hi {
            return Err(Error::InvalidSpn(format!(
                "leaf over `{}` has an empty or reversed piece",
                l.var
            )));
        }
        if let Some(ph) = prev_hi {
            if lo < ph {
                return Err(Error::InvalidSpn(format!(
                    "leaf over `{}` has overlapping pieces",
                    l.var
                )));
            }
        }
        prev_hi = Some(hi);
        total += univariate_integral(p, &l.var, lo, hi)?;
    }
    if total != Rat::one() {
        return Err(Error::InvalidSpn(format!(
            "leaf over `{}` integrates to {total}, expected 1",
            l.var
        )));
    }
    Ok(())
}

/// Exact ∫_lo^hi p(v) dv for a polynomial univariate in `v`.
fn univariate_integral(p: &Polynomial, v: &Variable, lo: &Rat, hi: &Rat) -> Result<Rat> {
    let mut acc = Rat::zero();
    for (m, c) in p.terms() {
        for mv in m.exponents() {
            if mv.0 != v {
                return Err(Error::InvalidSpn(format!(
                    "leaf polynomial over `{v}` mentions `{}`",
                    mv.0
                )));
            }
        }
        let e = m.exponent(v);
        let e1 = e + 1;
        acc += c * (rat_pow(hi, e1) - rat_pow(lo, e1)) / Rat::from_integer(e1.into());
    }
    Ok(acc)
}

fn rat_pow(r: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= r;
    }
    acc
}

/// Encodes a validated network as a weight function. The support is the
/// per-variable hull of the leaf pieces; within one variable's hull the
/// weight falls back to indicator guards per piece, except that a leaf
/// covering the whole hull in one piece needs no guard.
pub fn encode_spn(s: &Spn) -> Result<WeightFunction> {
    s.validate()?;
    let mut hulls: BTreeMap<Variable, (Rat, Rat)> = BTreeMap::new();
    collect_hulls(s, &mut hulls);

    let mut support = Vec::new();
    for (v, (lo, hi)) in &hulls {
        support.push(Formula::interval(v, lo, hi)?);
    }
    let weight = weight_of(s, &hulls)?;
    Ok(WeightFunction::new(weight, Formula::and(support)))
}

fn collect_hulls(s: &Spn, hulls: &mut BTreeMap<Variable, (Rat, Rat)>) {
    match s {
        Spn::Leaf(l) => {
            for (lo, hi, _) in &l.pieces {
                hulls
                    .entry(l.var.clone())
                    .and_modify(|(a, b)| {
                        if lo < a {
                            *a = lo.clone();
                        }
                        if hi > b {
                            *b = hi.clone();
                        }
                    })
                    .or_insert_with(|| (lo.clone(), hi.clone()));
            }
        }
        Spn::Sum(parts) => {
            for (_, c) in parts {
                collect_hulls(c, hulls);
            }
        }
        Spn::Product(parts) => {
            for c in parts {
                collect_hulls(c, hulls);
            }
        }
    }
}

fn weight_of(s: &Spn, hulls: &BTreeMap<Variable, (Rat, Rat)>) -> Result<Weight> {
    match s {
        Spn::Leaf(l) => {
            let hull = &hulls[&l.var];
            if l.pieces.len() == 1 && (&l.pieces[0].0, &l.pieces[0].1) == (&hull.0, &hull.1) {
                return Ok(Weight::poly(l.pieces[0].2.clone()));
            }
            let mut parts = Vec::with_capacity(l.pieces.len());
            for (lo, hi, p) in &l.pieces {
                parts.push(Weight::ite(
                    Formula::interval(&l.var, lo, hi)?,
                    Weight::poly(p.clone()),
                    Weight::constant(Rat::zero()),
                ));
            }
            Ok(Weight::sum(parts))
        }
        Spn::Sum(parts) => {
            let mut out = Vec::with_capacity(parts.len());
            for (w, c) in parts {
                if w.is_zero() {
                    continue;
                }
                out.push(Weight::product([
                    Weight::constant(w.clone()),
                    weight_of(c, hulls)?,
                ]));
            }
            Ok(Weight::sum(out))
        }
        Spn::Product(parts) => {
            let mut out = Vec::with_capacity(parts.len());
            for c in parts {
                out.push(weight_of(c, hulls)?);
            }
            Ok(Weight::product(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::wmi::{conditional_probability, wmi_value};

    fn uniform_leaf(v: &Variable, lo: Rat, hi: Rat) -> Spn {
        let density = (hi.clone() - lo.clone()).recip();
        Spn::Leaf(SpnLeaf {
            var: v.clone(),
            pieces: vec![(lo, hi, Polynomial::constant(density))],
        })
    }

    #[test]
    fn single_uniform_leaf_encodes_constant_one() {
        let x = Variable::real("x");
        let wf = encode_spn(&uniform_leaf(&x, int(0), int(1))).unwrap();
        assert_eq!(wf.weight.as_poly().and_then(|p| p.as_constant()), Some(int(1)));
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));
    }

    #[test]
    fn half_interval_mixture_has_unit_mass() {
        let x = Variable::real("x");
        let spn = Spn::Sum(vec![
            (rat(1, 2), uniform_leaf(&x, int(0), rat(1, 2))),
            (rat(1, 2), uniform_leaf(&x, rat(1, 2), int(1))),
        ]);
        let wf = encode_spn(&spn).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));

        // Density is 1 across the interior of both halves.
        for xv in [rat(1, 4), rat(3, 4)] {
            let p = Valuation::new().with_real(&x, xv);
            assert_eq!(wf.weight.evaluate(&p), Some(int(1)));
            assert_eq!(spn.density_at(&p), Some(int(1)));
        }
    }

    #[test]
    fn product_of_uniforms_covers_the_square() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let spn = Spn::Product(vec![
            uniform_leaf(&x, int(0), int(1)),
            uniform_leaf(&y, int(0), int(1)),
        ]);
        let wf = encode_spn(&spn).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));
    }

    #[test]
    fn triangular_density_conditions_exactly() {
        let x = Variable::real("x");
        // p(x) = x on [0,1], 2-x on [1,2].
        let rising = Polynomial::var(&x);
        let falling = Polynomial::constant(int(2)).sub(&Polynomial::var(&x));
        let spn = Spn::Leaf(SpnLeaf {
            var: x.clone(),
            pieces: vec![(int(0), int(1), rising), (int(1), int(2), falling)],
        });
        let wf = encode_spn(&spn).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));
        let left = Formula::le(
            &crate::logic::LinearExpr::var(&x),
            &crate::logic::LinearExpr::constant(int(1)),
        );
        assert_eq!(
            conditional_probability(&left, &Formula::tt(), &wf).unwrap(),
            rat(1, 2)
        );
    }

    #[test]
    fn invalid_networks_are_rejected() {
        let x = Variable::real("x");
        let y = Variable::real("y");

        let unnormalized = Spn::Leaf(SpnLeaf {
            var: x.clone(),
            pieces: vec![(int(0), int(2), Polynomial::constant(int(1)))],
        });
        assert!(matches!(unnormalized.validate(), Err(Error::InvalidSpn(_))));

        let overlapping = Spn::Leaf(SpnLeaf {
            var: x.clone(),
            pieces: vec![
                (int(0), int(1), Polynomial::constant(rat(1, 2))),
                (rat(1, 2), rat(3, 2), Polynomial::constant(rat(1, 2))),
            ],
        });
        assert!(matches!(overlapping.validate(), Err(Error::InvalidSpn(_))));

        let bad_mix = Spn::Sum(vec![
            (rat(1, 3), uniform_leaf(&x, int(0), int(1))),
            (rat(1, 3), uniform_leaf(&x, int(0), int(1))),
        ]);
        assert!(matches!(bad_mix.validate(), Err(Error::InvalidSpn(_))));

        let mixed_scope = Spn::Sum(vec![
            (rat(1, 2), uniform_leaf(&x, int(0), int(1))),
            (rat(1, 2), uniform_leaf(&y, int(0), int(1))),
        ]);
        assert!(matches!(mixed_scope.validate(), Err(Error::InvalidSpn(_))));

        let shared_product = Spn::Product(vec![
            uniform_leaf(&x, int(0), int(1)),
            uniform_leaf(&x, int(0), int(1)),
        ]);
        assert!(matches!(
            shared_product.validate(),
            Err(Error::InvalidSpn(_))
        ));
    }
}
