//! Structured weight functions: piecewise polynomials over atom conditions.
//!
//! A weight is a DAG of polynomial leaves combined by sums, products and
//! condition nodes. Under a total truth assignment of its condition atoms
//! every weight collapses to a single polynomial, which is what the model
//! integrator consumes. The pairing of a weight with its support formula is
//! the unit the engine accepts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::integration::{emit_polynomial, polynomial_from_sexp, Polynomial};
use crate::logic::text::{SExp, VarTable};
use crate::logic::{Assignment, Atom, Formula, Valuation, Variable};
use crate::rational::Rat;
use crate::{Error, Result};

#[derive(Debug)]
enum WeightNode {
    Poly(Polynomial),
    Ite(Formula, Weight, Weight),
    Sum(Vec<Weight>),
    Product(Vec<Weight>),
}

/// A weight function. Shared subterms are real sharing (reference-counted
/// nodes), so restriction and rewriting traverse each node once.
#[derive(Clone, Debug)]
pub struct Weight(Arc<WeightNode>);

impl Weight {
    pub fn poly(p: Polynomial) -> Self {
        Weight(Arc::new(WeightNode::Poly(p)))
    }

    pub fn constant(c: Rat) -> Self {
        Self::poly(Polynomial::constant(c))
    }

    pub fn one() -> Self {
        Self::poly(Polynomial::one())
    }

    pub fn var(v: &Variable) -> Self {
        Self::poly(Polynomial::var(v))
    }

    pub fn ite(cond: Formula, then: Weight, otherwise: Weight) -> Self {
        if cond.is_true() {
            return then;
        }
        if cond.is_false() {
            return otherwise;
        }
        Weight(Arc::new(WeightNode::Ite(cond, then, otherwise)))
    }

    pub fn sum(parts: impl IntoIterator<Item = Weight>) -> Self {
        let parts: Vec<Weight> = parts.into_iter().collect();
        match parts.len() {
            0 => Self::poly(Polynomial::zero()),
            1 => parts.into_iter().next().unwrap(),
            _ => Weight(Arc::new(WeightNode::Sum(parts))),
        }
    }

    pub fn product(parts: impl IntoIterator<Item = Weight>) -> Self {
        let parts: Vec<Weight> = parts.into_iter().collect();
        match parts.len() {
            0 => Self::one(),
            1 => parts.into_iter().next().unwrap(),
            _ => Weight(Arc::new(WeightNode::Product(parts))),
        }
    }

    /// The product `∏ ite(ℓᵢ; wᵢ; 1)`: weights attached to individual
    /// literals, each active exactly when its literal holds.
    pub fn from_literal_weights(items: impl IntoIterator<Item = (Formula, Polynomial)>) -> Self {
        Self::product(
            items
                .into_iter()
                .map(|(lit, p)| Self::ite(lit, Self::poly(p), Self::one())),
        )
    }

    /// Atoms appearing in condition nodes. The model integrator extends its
    /// assignment universe with these so every enumerated assignment decides
    /// the weight's shape.
    pub fn condition_atoms(&self) -> BTreeSet<Atom> {
        let mut seen = HashMap::new();
        let mut out = BTreeSet::new();
        self.collect_condition_atoms(&mut seen, &mut out);
        out
    }

    fn collect_condition_atoms(
        &self,
        seen: &mut HashMap<*const WeightNode, ()>,
        out: &mut BTreeSet<Atom>,
    ) {
        let key = Arc::as_ptr(&self.0);
        if seen.insert(key, ()).is_some() {
            return;
        }
        match &*self.0 {
            WeightNode::Poly(_) => {}
            WeightNode::Ite(cond, t, e) => {
                out.extend(cond.atoms());
                t.collect_condition_atoms(seen, out);
                e.collect_condition_atoms(seen, out);
            }
            WeightNode::Sum(parts) | WeightNode::Product(parts) => {
                for p in parts {
                    p.collect_condition_atoms(seen, out);
                }
            }
        }
    }

    /// All variables: polynomial variables plus condition variables.
    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut seen = HashMap::new();
        let mut out = BTreeSet::new();
        self.collect_variables(&mut seen, &mut out);
        out
    }

    fn collect_variables(
        &self,
        seen: &mut HashMap<*const WeightNode, ()>,
        out: &mut BTreeSet<Variable>,
    ) {
        let key = Arc::as_ptr(&self.0);
        if seen.insert(key, ()).is_some() {
            return;
        }
        match &*self.0 {
            WeightNode::Poly(p) => out.extend(p.variables()),
            WeightNode::Ite(cond, t, e) => {
                out.extend(cond.variables());
                t.collect_variables(seen, out);
                e.collect_variables(seen, out);
            }
            WeightNode::Sum(parts) | WeightNode::Product(parts) => {
                for p in parts {
                    p.collect_variables(seen, out);
                }
            }
        }
    }

    /// Collapses the weight to the polynomial selected by a truth assignment
    /// that decides every condition.
    pub fn restrict(&self, asg: &Assignment) -> Result<Polynomial> {
        let mut memo = HashMap::new();
        self.restrict_memo(asg, &mut memo)
    }

    fn restrict_memo(
        &self,
        asg: &Assignment,
        memo: &mut HashMap<*const WeightNode, Polynomial>,
    ) -> Result<Polynomial> {
        let key = Arc::as_ptr(&self.0);
        if let Some(p) = memo.get(&key) {
            return Ok(p.clone());
        }
        let result = match &*self.0 {
            WeightNode::Poly(p) => p.clone(),
            WeightNode::Ite(cond, t, e) => match cond.eval3(asg) {
                Some(true) => t.restrict_memo(asg, memo)?,
                Some(false) => e.restrict_memo(asg, memo)?,
                None => {
                    return Err(Error::IncompleteAssignment {
                        cond: cond.to_string(),
                    })
                }
            },
            WeightNode::Sum(parts) => {
                let mut acc = Polynomial::zero();
                for p in parts {
                    acc = acc.add(&p.restrict_memo(asg, memo)?);
                }
                acc
            }
            WeightNode::Product(parts) => {
                let mut acc = Polynomial::one();
                for p in parts {
                    acc = acc.mul(&p.restrict_memo(asg, memo)?);
                }
                acc
            }
        };
        memo.insert(key, result.clone());
        Ok(result)
    }

    /// Evaluates the weight at a point; `None` if the point leaves a
    /// condition or polynomial variable undefined.
    pub fn evaluate(&self, point: &Valuation) -> Option<Rat> {
        match &*self.0 {
            WeightNode::Poly(p) => p.eval(&point.reals),
            WeightNode::Ite(cond, t, e) => {
                if cond.eval_point(point)? {
                    t.evaluate(point)
                } else {
                    e.evaluate(point)
                }
            }
            WeightNode::Sum(parts) => {
                let mut acc = Rat::from_integer(0.into());
                for p in parts {
                    acc += p.evaluate(point)?;
                }
                Some(acc)
            }
            WeightNode::Product(parts) => {
                let mut acc = Rat::from_integer(1.into());
                for p in parts {
                    acc *= p.evaluate(point)?;
                }
                Some(acc)
            }
        }
    }

    /// Renames variables throughout conditions and polynomials.
    pub fn rename(&self, map: &BTreeMap<Variable, Variable>) -> Weight {
        let mut memo = HashMap::new();
        self.rename_memo(map, &mut memo)
    }

    fn rename_memo(
        &self,
        map: &BTreeMap<Variable, Variable>,
        memo: &mut HashMap<*const WeightNode, Weight>,
    ) -> Weight {
        let key = Arc::as_ptr(&self.0);
        if let Some(w) = memo.get(&key) {
            return w.clone();
        }
        let out = match &*self.0 {
            WeightNode::Poly(p) => Weight::poly(p.rename(map)),
            WeightNode::Ite(cond, t, e) => Weight::ite(
                cond.rename(map),
                t.rename_memo(map, memo),
                e.rename_memo(map, memo),
            ),
            WeightNode::Sum(parts) => {
                Weight::sum(parts.iter().map(|p| p.rename_memo(map, memo)))
            }
            WeightNode::Product(parts) => {
                Weight::product(parts.iter().map(|p| p.rename_memo(map, memo)))
            }
        };
        memo.insert(key, out.clone());
        out
    }

    /// Rewrites condition nodes whose truth value `decide` can fix,
    /// replacing them by the surviving branch. Conditions left undecided
    /// stay in place, so the result is exactly equal on the undecided
    /// region.
    pub fn rewrite_conditions(&self, decide: &mut impl FnMut(&Formula) -> Option<bool>) -> Weight {
        let mut memo = HashMap::new();
        self.rewrite_memo(decide, &mut memo)
    }

    fn rewrite_memo(
        &self,
        decide: &mut impl FnMut(&Formula) -> Option<bool>,
        memo: &mut HashMap<*const WeightNode, Weight>,
    ) -> Weight {
        let key = Arc::as_ptr(&self.0);
        if let Some(w) = memo.get(&key) {
            return w.clone();
        }
        let out = match &*self.0 {
            WeightNode::Poly(_) => self.clone(),
            WeightNode::Ite(cond, t, e) => match decide(cond) {
                Some(true) => t.rewrite_memo(decide, memo),
                Some(false) => e.rewrite_memo(decide, memo),
                None => Weight::ite(
                    cond.clone(),
                    t.rewrite_memo(decide, memo),
                    e.rewrite_memo(decide, memo),
                ),
            },
            WeightNode::Sum(parts) => {
                Weight::sum(parts.iter().map(|p| p.rewrite_memo(decide, memo)))
            }
            WeightNode::Product(parts) => {
                Weight::product(parts.iter().map(|p| p.rewrite_memo(decide, memo)))
            }
        };
        memo.insert(key, out.clone());
        out
    }

    /// `Some(p)` iff the weight is the bare polynomial `p`.
    pub fn as_poly(&self) -> Option<&Polynomial> {
        match &*self.0 {
            WeightNode::Poly(p) => Some(p),
            _ => None,
        }
    }

    /// Structural view of the root node, for compilers and printers.
    pub fn view(&self) -> WeightView<'_> {
        match &*self.0 {
            WeightNode::Poly(p) => WeightView::Poly(p),
            WeightNode::Ite(c, t, e) => WeightView::Ite(c, t, e),
            WeightNode::Sum(parts) => WeightView::Sum(parts),
            WeightNode::Product(parts) => WeightView::Product(parts),
        }
    }
}

/// Borrowed view of a weight node.
pub enum WeightView<'a> {
    Poly(&'a Polynomial),
    Ite(&'a Formula, &'a Weight, &'a Weight),
    Sum(&'a [Weight]),
    Product(&'a [Weight]),
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", emit_weight(self))
    }
}

/// A weight together with its support: the density is `weight` inside
/// `support` and zero outside, and integrals range over `delta ∧ support`.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    pub weight: Weight,
    pub support: Formula,
}

impl WeightFunction {
    pub fn new(weight: Weight, support: Formula) -> Self {
        WeightFunction { weight, support }
    }

    /// A weight valid everywhere (trivially true support).
    pub fn total(weight: Weight) -> Self {
        Self::new(weight, Formula::tt())
    }

    /// Uniform unit density on `support`.
    pub fn indicator(support: Formula) -> Self {
        Self::new(Weight::one(), support)
    }

    /// Product density: weights multiply, supports conjoin.
    pub fn product_of(parts: impl IntoIterator<Item = WeightFunction>) -> Self {
        let mut weights = Vec::new();
        let mut supports = Vec::new();
        for p in parts {
            weights.push(p.weight);
            supports.push(p.support);
        }
        Self::new(Weight::product(weights), Formula::and(supports))
    }

    pub fn rename(&self, map: &BTreeMap<Variable, Variable>) -> Self {
        Self::new(self.weight.rename(map), self.support.rename(map))
    }
}

/// Parses a weight from s-expression text. `(ite <formula> <w> <w>)`,
/// `(sum <w>…)` and `(prod <w>…)` are weight forms; anything else is read
/// as a polynomial.
pub fn weight_from_sexp(sexp: &SExp, vars: &mut VarTable) -> Result<Weight> {
    if let SExp::List(items) = sexp {
        if let Some(SExp::Sym(head)) = items.first() {
            match head.as_str() {
                "ite" => {
                    if items.len() != 4 {
                        return Err(Error::Parse(
                            "(ite cond then else) expects three arguments".into(),
                        ));
                    }
                    let cond = crate::logic::text::formula_from_sexp(&items[1], vars)?;
                    let t = weight_from_sexp(&items[2], vars)?;
                    let e = weight_from_sexp(&items[3], vars)?;
                    return Ok(Weight::ite(cond, t, e));
                }
                "sum" => {
                    let parts: Result<Vec<Weight>> = items[1..]
                        .iter()
                        .map(|s| weight_from_sexp(s, vars))
                        .collect();
                    return Ok(Weight::sum(parts?));
                }
                "prod" => {
                    let parts: Result<Vec<Weight>> = items[1..]
                        .iter()
                        .map(|s| weight_from_sexp(s, vars))
                        .collect();
                    return Ok(Weight::product(parts?));
                }
                _ => {}
            }
        }
    }
    Ok(Weight::poly(polynomial_from_sexp(sexp, vars)?))
}

/// Emits a weight in the dialect `weight_from_sexp` reads.
pub fn emit_weight(w: &Weight) -> SExp {
    match &*w.0 {
        WeightNode::Poly(p) => emit_polynomial(p),
        // Formula text is already s-expression syntax, so it can be spliced
        // in verbatim.
        WeightNode::Ite(cond, t, e) => SExp::List(vec![
            SExp::Sym("ite".into()),
            SExp::Sym(crate::logic::text::emit(cond)),
            emit_weight(t),
            emit_weight(e),
        ]),
        WeightNode::Sum(parts) => SExp::List(
            std::iter::once(SExp::Sym("sum".into()))
                .chain(parts.iter().map(emit_weight))
                .collect(),
        ),
        WeightNode::Product(parts) => SExp::List(
            std::iter::once(SExp::Sym("prod".into()))
                .chain(parts.iter().map(emit_weight))
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::text::parse_sexp;
    use crate::logic::LinearExpr;
    use crate::rational::{int, rat};

    /// The guard-and-switch weight used across the engine tests:
    /// `ite(x + y <= 1; x; 1) * ite(A; 1; y)`.
    fn guard_weight() -> (Weight, Variable, Variable, Variable) {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let a = Variable::bool("A");
        let mut sum = LinearExpr::zero();
        sum.add_term(&int(1), &x);
        sum.add_term(&int(1), &y);
        let w = Weight::product([
            Weight::ite(
                Formula::le(&sum, &LinearExpr::constant(int(1))),
                Weight::var(&x),
                Weight::one(),
            ),
            Weight::ite(Formula::prop(&a), Weight::one(), Weight::var(&y)),
        ]);
        (w, x, y, a)
    }

    #[test]
    fn restriction_picks_branch_polynomials() {
        let (w, x, y, a) = guard_weight();
        let atoms: Vec<Atom> = w.condition_atoms().into_iter().collect();
        assert_eq!(atoms.len(), 2);

        let lra = atoms
            .iter()
            .find(|at| matches!(at, Atom::Lra(_)))
            .unwrap()
            .clone();
        let prop = atoms
            .iter()
            .find(|at| matches!(at, Atom::Bool(_)))
            .unwrap()
            .clone();

        let mut asg = Assignment::new();
        asg.set(lra.clone(), true);
        asg.set(prop.clone(), true);
        assert_eq!(w.restrict(&asg).unwrap(), Polynomial::var(&x));

        asg.set(prop.clone(), false);
        assert_eq!(
            w.restrict(&asg).unwrap(),
            Polynomial::var(&x).mul(&Polynomial::var(&y))
        );

        asg.set(lra, false);
        assert_eq!(w.restrict(&asg).unwrap(), Polynomial::var(&y));
        let _ = a;
    }

    #[test]
    fn undecided_condition_is_an_error() {
        let (w, _, _, a) = guard_weight();
        let mut asg = Assignment::new();
        asg.set(Atom::Bool(a), true);
        let err = w.restrict(&asg).unwrap_err();
        assert!(matches!(err, Error::IncompleteAssignment { .. }));
    }

    #[test]
    fn evaluation_agrees_with_restriction() {
        let (w, x, y, a) = guard_weight();
        let point = Valuation::new()
            .with_real(&x, rat(1, 4))
            .with_real(&y, rat(1, 2))
            .with_bool(&a, false);
        // x + y = 3/4 <= 1 and !A, so the weight is x * y = 1/8.
        assert_eq!(w.evaluate(&point).unwrap(), rat(1, 8));
    }

    #[test]
    fn renaming_transports_the_function() {
        let (w, x, y, a) = guard_weight();
        let x2 = Variable::real("x'");
        let y2 = Variable::real("y'");
        let map: BTreeMap<Variable, Variable> =
            [(x.clone(), x2.clone()), (y.clone(), y2.clone())].into();
        let w2 = w.rename(&map);
        let point = Valuation::new()
            .with_real(&x2, rat(1, 4))
            .with_real(&y2, rat(1, 2))
            .with_bool(&a, false);
        assert_eq!(w2.evaluate(&point).unwrap(), rat(1, 8));
        assert!(!w2.variables().contains(&x));
    }

    #[test]
    fn shared_nodes_restrict_once() {
        let x = Variable::real("x");
        let shared = Weight::var(&x);
        let w = Weight::sum([shared.clone(), shared.clone(), shared]);
        let asg = Assignment::new();
        let p = w.restrict(&asg).unwrap();
        assert_eq!(p, Polynomial::var(&x).scale(&int(3)));
    }

    #[test]
    fn rewrite_replaces_decided_conditions() {
        let (w, x, y, _) = guard_weight();
        // Decide every linear condition true, leave propositions alone.
        let rewritten = w.rewrite_conditions(&mut |cond: &Formula| {
            cond.atoms()
                .iter()
                .all(|at| matches!(at, Atom::Lra(_)))
                .then_some(true)
        });
        assert_eq!(rewritten.condition_atoms().len(), 1);
        let _ = (x, y);
    }

    #[test]
    fn parse_and_emit_round_trip() {
        let mut vars = VarTable::new();
        let sexp = parse_sexp("(prod (ite (<= (+ x y) 1) x 1) (ite A 1 y))").unwrap();
        let w = weight_from_sexp(&sexp, &mut vars).unwrap();
        assert_eq!(w.condition_atoms().len(), 2);

        let text = emit_weight(&w).to_string();
        let reparsed = weight_from_sexp(&parse_sexp(&text).unwrap(), &mut vars).unwrap();
        let x = vars.get("x").unwrap().clone();
        let y = vars.get("y").unwrap().clone();
        let a = vars.get("A").unwrap().clone();
        let point = Valuation::new()
            .with_real(&x, rat(1, 3))
            .with_real(&y, rat(1, 5))
            .with_bool(&a, true);
        assert_eq!(
            w.evaluate(&point).unwrap(),
            reparsed.evaluate(&point).unwrap()
        );
    }
}
