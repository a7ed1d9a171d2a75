//! Monte-Carlo ground truth for the exact engine: integrates by uniform
//! sampling over a bounding box times the boolean cube, entirely in
//! floating point. Deliberately so — the value of the oracle is that it
//! shares no code path and no number representation with the product,
//! making agreement between the two meaningful.

use std::collections::HashMap;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::{Atom, Formula, FormulaNode, LraAtom, Rel, Sort, Variable};
use crate::rational::{to_f64, Rat};
use crate::weights::{Weight, WeightFunction, WeightView};
use crate::{Error, Result};

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;

/// Sampling is split into this many independent RNG streams (chunk `i`
/// uses stream `i` of the master seed), so estimates are reproducible
/// regardless of how many threads actually run them.
const STREAMS: usize = 8;

/// A sampled estimate with a 99% confidence interval.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub ci99: (f64, f64),
    pub samples: usize,
}

impl McEstimate {
    fn centered(mean: f64, half_width: f64, samples: usize) -> Self {
        McEstimate {
            mean,
            ci99: (mean - half_width, mean + half_width),
            samples,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci99.0 <= value && value <= self.ci99.1
    }

    pub fn width(&self) -> f64 {
        self.ci99.1 - self.ci99.0
    }
}

// ---------------------------------------------------------------------
// Compiled float forms: formulas and weights are lowered once into
// index-addressed structures so the per-sample loop does no map lookups
// and no arbitrary-precision arithmetic.

struct CAtom {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
    rel: Rel,
}

enum CFormula {
    True,
    False,
    Bool(usize),
    Cmp(usize),
    Not(Box<CFormula>),
    And(Vec<CFormula>),
    Or(Vec<CFormula>),
    Iff(Box<CFormula>, Box<CFormula>),
}

enum CWeight {
    /// Terms `(coefficient, [(real index, exponent)])`.
    Poly(Vec<(f64, Vec<(usize, u32)>)>),
    Ite(CFormula, Box<CWeight>, Box<CWeight>),
    Sum(Vec<CWeight>),
    Product(Vec<CWeight>),
}

struct Compiler {
    real_index: HashMap<Variable, usize>,
    bool_index: HashMap<Variable, usize>,
    atom_index: HashMap<LraAtom, usize>,
    atoms: Vec<CAtom>,
}

impl Compiler {
    fn new(box_vars: &[Variable]) -> Self {
        Compiler {
            real_index: box_vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), i))
                .collect(),
            bool_index: HashMap::new(),
            atom_index: HashMap::new(),
            atoms: Vec::new(),
        }
    }

    fn bool_idx(&mut self, v: &Variable) -> usize {
        let next = self.bool_index.len();
        *self.bool_index.entry(v.clone()).or_insert(next)
    }

    fn atom(&mut self, a: &LraAtom) -> Result<usize> {
        if let Some(&i) = self.atom_index.get(a) {
            return Ok(i);
        }
        let coeffs = a
            .coeffs()
            .iter()
            .map(|(v, c)| {
                let idx = self.real_index.get(v).copied().ok_or_else(|| {
                    Error::UnboundedRegion {
                        var: v.to_string(),
                    }
                })?;
                Ok((idx, c.to_f64().unwrap_or(f64::NAN)))
            })
            .collect::<Result<Vec<_>>>()?;
        let compiled = CAtom {
            coeffs,
            rhs: a.rhs().to_f64().unwrap_or(f64::NAN),
            rel: a.rel(),
        };
        self.atoms.push(compiled);
        let i = self.atoms.len() - 1;
        self.atom_index.insert(a.clone(), i);
        Ok(i)
    }

    fn formula(&mut self, f: &Formula) -> Result<CFormula> {
        Ok(match f.view() {
            FormulaNode::True => CFormula::True,
            FormulaNode::False => CFormula::False,
            FormulaNode::Atom(Atom::Bool(v)) => CFormula::Bool(self.bool_idx(v)),
            FormulaNode::Atom(Atom::Lra(a)) => CFormula::Cmp(self.atom(a)?),
            FormulaNode::Not(g) => CFormula::Not(Box::new(self.formula(g)?)),
            FormulaNode::And(parts) => CFormula::And(
                parts
                    .iter()
                    .map(|g| self.formula(g))
                    .collect::<Result<_>>()?,
            ),
            FormulaNode::Or(parts) => CFormula::Or(
                parts
                    .iter()
                    .map(|g| self.formula(g))
                    .collect::<Result<_>>()?,
            ),
            FormulaNode::Implies(a, b) => CFormula::Or(vec![
                CFormula::Not(Box::new(self.formula(a)?)),
                self.formula(b)?,
            ]),
            FormulaNode::Iff(a, b) => CFormula::Iff(
                Box::new(self.formula(a)?),
                Box::new(self.formula(b)?),
            ),
        })
    }

    fn weight(&mut self, w: &Weight) -> Result<CWeight> {
        Ok(match w.view() {
            WeightView::Poly(p) => CWeight::Poly(
                p.terms()
                    .map(|(m, c)| {
                        let exps = m
                            .exponents()
                            .map(|(v, e)| {
                                let idx =
                                    self.real_index.get(v).copied().ok_or_else(|| {
                                        Error::UnboundedRegion {
                                            var: v.to_string(),
                                        }
                                    })?;
                                Ok((idx, e))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok((to_f64(c), exps))
                    })
                    .collect::<Result<_>>()?,
            ),
            WeightView::Ite(c, t, e) => CWeight::Ite(
                self.formula(c)?,
                Box::new(self.weight(t)?),
                Box::new(self.weight(e)?),
            ),
            WeightView::Sum(parts) => CWeight::Sum(
                parts
                    .iter()
                    .map(|p| self.weight(p))
                    .collect::<Result<_>>()?,
            ),
            WeightView::Product(parts) => CWeight::Product(
                parts
                    .iter()
                    .map(|p| self.weight(p))
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

fn truth(f: &CFormula, reals: &[f64], bools: &[bool], atoms: &[CAtom]) -> bool {
    match f {
        CFormula::True => true,
        CFormula::False => false,
        CFormula::Bool(i) => bools[*i],
        CFormula::Cmp(i) => {
            let a = &atoms[*i];
            let lhs: f64 = a.coeffs.iter().map(|&(idx, c)| c * reals[idx]).sum();
            match a.rel {
                Rel::Le => lhs <= a.rhs,
                Rel::Lt => lhs < a.rhs,
                Rel::Eq => lhs == a.rhs,
            }
        }
        CFormula::Not(g) => !truth(g, reals, bools, atoms),
        CFormula::And(parts) => parts.iter().all(|g| truth(g, reals, bools, atoms)),
        CFormula::Or(parts) => parts.iter().any(|g| truth(g, reals, bools, atoms)),
        CFormula::Iff(a, b) => {
            truth(a, reals, bools, atoms) == truth(b, reals, bools, atoms)
        }
    }
}

fn weight_at(w: &CWeight, reals: &[f64], bools: &[bool], atoms: &[CAtom]) -> f64 {
    match w {
        CWeight::Poly(terms) => terms
            .iter()
            .map(|(c, exps)| {
                c * exps
                    .iter()
                    .map(|&(idx, e)| reals[idx].powi(e as i32))
                    .product::<f64>()
            })
            .sum(),
        CWeight::Ite(c, t, e) => {
            if truth(c, reals, bools, atoms) {
                weight_at(t, reals, bools, atoms)
            } else {
                weight_at(e, reals, bools, atoms)
            }
        }
        CWeight::Sum(parts) => parts.iter().map(|p| weight_at(p, reals, bools, atoms)).sum(),
        CWeight::Product(parts) => parts
            .iter()
            .map(|p| weight_at(p, reals, bools, atoms))
            .product(),
    }
}

// ---------------------------------------------------------------------

struct Problem {
    gamma: Option<CFormula>,
    delta: CFormula,
    support: CFormula,
    weight: CWeight,
    atoms: Vec<CAtom>,
    ranges: Vec<(f64, f64)>,
    n_bools: usize,
    factor: f64,
}

impl Problem {
    fn compile(
        gamma: Option<&Formula>,
        delta: &Formula,
        wf: &WeightFunction,
        bbox: &[(Variable, Rat, Rat)],
    ) -> Result<Problem> {
        for (v, lo, hi) in bbox {
            if v.sort() != Sort::Real {
                return Err(Error::Shape(format!("box variable `{v}` is not real")));
            }
            if lo > hi {
                return Err(Error::EmptyInterval {
                    lo: lo.to_string(),
                    hi: hi.to_string(),
                });
            }
        }
        let vars: Vec<Variable> = bbox.iter().map(|(v, _, _)| v.clone()).collect();
        let mut c = Compiler::new(&vars);
        let gamma = gamma.map(|g| c.formula(g)).transpose()?;
        let delta = c.formula(delta)?;
        let support = c.formula(&wf.support)?;
        let weight = c.weight(&wf.weight)?;
        let ranges: Vec<(f64, f64)> = bbox
            .iter()
            .map(|(_, lo, hi)| (to_f64(lo), to_f64(hi)))
            .collect();
        let volume: f64 = ranges.iter().map(|(lo, hi)| hi - lo).product();
        let n_bools = c.bool_index.len();
        Ok(Problem {
            gamma,
            delta,
            support,
            weight,
            atoms: c.atoms,
            ranges,
            n_bools,
            factor: volume * (1u64 << n_bools.min(63)) as f64,
        })
    }
}

/// Per-stream accumulated moments of the sampled integrands.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: u64,
    /// Numerator integrand `u = w·[γ∧Δ∧χ]` (or just `w·[Δ∧χ]` when no γ).
    sum_u: f64,
    sum_uu: f64,
    /// Denominator integrand `v = w·[Δ∧χ]`.
    sum_v: f64,
    sum_vv: f64,
    sum_uv: f64,
    /// Samples satisfying Δ∧χ at all.
    delta_hits: u64,
}

impl Moments {
    fn absorb(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum_u += o.sum_u;
        self.sum_uu += o.sum_uu;
        self.sum_v += o.sum_v;
        self.sum_vv += o.sum_vv;
        self.sum_uv += o.sum_uv;
        self.delta_hits += o.delta_hits;
    }
}

fn run_stream(p: &Problem, samples: usize, seed: u64, stream: u64) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut reals = vec![0.0f64; p.ranges.len()];
    let mut bools = vec![false; p.n_bools];
    let mut m = Moments {
        n: samples as u64,
        ..Moments::default()
    };
    for _ in 0..samples {
        for (slot, (lo, hi)) in reals.iter_mut().zip(&p.ranges) {
            *slot = if lo < hi { rng.gen_range(*lo..*hi) } else { *lo };
        }
        for slot in bools.iter_mut() {
            *slot = rng.gen_bool(0.5);
        }
        let sat_delta = truth(&p.delta, &reals, &bools, &p.atoms)
            && truth(&p.support, &reals, &bools, &p.atoms);
        if !sat_delta {
            continue;
        }
        m.delta_hits += 1;
        let w = weight_at(&p.weight, &reals, &bools, &p.atoms);
        let u = match &p.gamma {
            Some(g) if !truth(g, &reals, &bools, &p.atoms) => 0.0,
            _ => w,
        };
        m.sum_u += u;
        m.sum_uu += u * u;
        m.sum_v += w;
        m.sum_vv += w * w;
        m.sum_uv += u * w;
    }
    m
}

fn sample_all(p: &Problem, samples: usize, seed: u64) -> Moments {
    let base = samples / STREAMS;
    let extra = samples % STREAMS;
    let sizes: Vec<usize> = (0..STREAMS)
        .map(|i| base + usize::from(i < extra))
        .collect();
    let chunks: Vec<Moments> = std::thread::scope(|scope| {
        let handles: Vec<_> = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| scope.spawn(move || run_stream(p, n, seed, i as u64)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut total = Moments::default();
    for c in &chunks {
        total.absorb(c);
    }
    total
}

/// Estimates `WMI(Δ, w)` by uniform sampling over `box × {⊥,⊤}^bools`:
/// the mean of `[point ⊨ Δ∧χ]·w(point)` scaled by the box volume and
/// `2^{#bools}`, with a normal-approximation 99% interval. The box must
/// bound the support.
pub fn mc_integrate(
    delta: &Formula,
    wf: &WeightFunction,
    bbox: &[(Variable, Rat, Rat)],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Schema("Monte-Carlo run needs samples ≥ 1".into()));
    }
    let p = Problem::compile(None, delta, wf, bbox)?;
    let m = sample_all(&p, samples, seed);
    let n = m.n as f64;
    let mean_g = m.sum_v / n;
    let var_g = if m.n > 1 {
        ((m.sum_vv - n * mean_g * mean_g) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let half = Z99 * p.factor * (var_g / n).sqrt();
    Ok(McEstimate::centered(p.factor * mean_g, half, samples))
}

/// Estimates `P(Γ | Δ) = WMI(Γ∧Δ, w) / WMI(Δ, w)` with the ratio
/// estimator over shared samples; the interval comes from the delta
/// method. Returns `None` (inconclusive) when no sample satisfies `Δ∧χ`.
pub fn mc_probability(
    gamma: &Formula,
    delta: &Formula,
    wf: &WeightFunction,
    bbox: &[(Variable, Rat, Rat)],
    samples: usize,
    seed: u64,
) -> Result<Option<McEstimate>> {
    if samples == 0 {
        return Err(Error::Schema("Monte-Carlo run needs samples ≥ 1".into()));
    }
    let p = Problem::compile(Some(gamma), delta, wf, bbox)?;
    let m = sample_all(&p, samples, seed);
    Ok(ratio_estimate(&m, samples))
}

/// Ratio-of-means estimate `ū/v̄` with a delta-method 99% interval;
/// `None` when no sample hit the denominator's support.
fn ratio_estimate(m: &Moments, samples: usize) -> Option<McEstimate> {
    if m.delta_hits == 0 || m.sum_v == 0.0 {
        return None;
    }
    let n = m.n as f64;
    let u_bar = m.sum_u / n;
    let v_bar = m.sum_v / n;
    let ratio = u_bar / v_bar;
    let half;
    if m.n > 1 {
        let s_uu = (m.sum_uu - n * u_bar * u_bar) / (n - 1.0);
        let s_vv = (m.sum_vv - n * v_bar * v_bar) / (n - 1.0);
        let s_uv = (m.sum_uv - n * u_bar * v_bar) / (n - 1.0);
        let var = ((s_uu - 2.0 * ratio * s_uv + ratio * ratio * s_vv) / (n * v_bar * v_bar))
            .max(0.0);
        half = Z99 * var.sqrt();
    } else {
        half = 0.0;
    }
    Some(McEstimate::centered(ratio, half, samples))
}

/// Monte-Carlo estimate of a property's conditional probability
/// `P(Δ_post | Δ_pre)` by sampling free inputs from the precondition's
/// bounding box and *forward-evaluating* the attached systems, so
/// gate-defined variables (hidden units, scores, class bits) take their
/// functional values instead of being sampled. This is the only oracle
/// entry point usable on tasks over system encodings; it still performs
/// no enumeration, no simplex and no symbolic integration, which is what
/// makes it an independent check of the exact engine.
///
/// Weighted acceptance runs in exact rationals (forward evaluation of a
/// gate is not meaningfully checkable in floats), the ratio statistics in
/// floating point. Returns `None` when no sample lands in the
/// precondition, and [`Error::UnboundedRegion`] when the precondition
/// fails to bound some sampled variable.
pub fn mc_task_probability(
    property: &crate::properties::PropertyEncoding,
    samples: usize,
    seed: u64,
) -> Result<Option<McEstimate>> {
    use crate::logic::Valuation;

    if samples == 0 {
        return Err(Error::Schema("Monte-Carlo run needs samples ≥ 1".into()));
    }
    let bbox = crate::bounds::bounds_from_precondition(
        &property.delta_pre,
        &property.weight.support,
    )?;

    let mut defined: std::collections::BTreeSet<Variable> = Default::default();
    for sys in &property.systems {
        defined.extend(sys.defined_vars());
    }
    let mut sample_vars = property.measured.clone();
    for sys in &property.systems {
        sample_vars.extend(sys.inputs.iter().cloned());
    }
    for v in property
        .delta_pre
        .variables()
        .into_iter()
        .chain(property.weight.support.variables())
        .chain(property.weight.weight.variables())
    {
        sample_vars.insert(v);
    }
    sample_vars.retain(|v| !defined.contains(v));

    let reals: Vec<Variable> = sample_vars
        .iter()
        .filter(|v| v.sort() == Sort::Real)
        .cloned()
        .collect();
    let bools: Vec<Variable> = sample_vars
        .iter()
        .filter(|v| v.sort() == Sort::Bool)
        .cloned()
        .collect();
    let ranges: Vec<(Variable, f64, f64)> = bbox
        .finite_intervals(&reals)?
        .into_iter()
        .map(|(v, lo, hi)| (v, to_f64(&lo), to_f64(&hi)))
        .collect();

    let chunk = samples / STREAMS;
    let counts: Vec<usize> = (0..STREAMS)
        .map(|i| chunk + usize::from(i < samples % STREAMS))
        .collect();
    let run = |stream: u64, count: usize| -> Moments {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut m = Moments::default();
        for _ in 0..count {
            m.n += 1;
            let mut val = Valuation::new();
            for (v, lo, hi) in &ranges {
                let x = if lo < hi { rng.gen_range(*lo..=*hi) } else { *lo };
                let Some(r) = crate::rational::from_f64(x) else { continue };
                val.set_real(v, r);
            }
            for v in &bools {
                let b = rng.gen_bool(0.5);
                val.set_bool(v, b);
            }
            if property
                .systems
                .iter()
                .any(|sys| sys.extend_valuation(&mut val).is_err())
            {
                continue;
            }
            if property.delta_pre.eval_point(&val) != Some(true)
                || property.weight.support.eval_point(&val) != Some(true)
            {
                continue;
            }
            let Some(w) = property.weight.weight.evaluate(&val) else {
                continue;
            };
            let w = to_f64(&w);
            if w <= 0.0 {
                continue;
            }
            m.delta_hits += 1;
            let u = if property.delta_post.eval_point(&val) == Some(true) {
                w
            } else {
                0.0
            };
            m.sum_v += w;
            m.sum_vv += w * w;
            m.sum_u += u;
            m.sum_uu += u * u;
            m.sum_uv += u * w;
        }
        m
    };
    let parts = std::thread::scope(|scope| {
        let handles: Vec<_> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| scope.spawn(move || run(i as u64, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect::<Vec<_>>()
    });
    let mut m = Moments::default();
    for part in &parts {
        m.absorb(part);
    }
    Ok(ratio_estimate(&m, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::LinearExpr;
    use crate::rational::{int, rat};
    use crate::weights::Weight;

    fn unit_box(vars: &[&Variable]) -> Vec<(Variable, Rat, Rat)> {
        vars.iter()
            .map(|v| ((*v).clone(), int(0), int(1)))
            .collect()
    }

    /// Δ over the unit square with a guard and a boolean; exact mass
    /// 13/24 and P(A|Δ) = 4/13.
    fn guarded_square() -> (Formula, Formula, WeightFunction, Vec<(Variable, Rat, Rat)>) {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let a = Variable::bool("A");
        let unit = |v: &Variable| Formula::interval(v, &int(0), &int(1)).unwrap();
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
        let bbox = unit_box(&[&x, &y]);
        (delta, Formula::prop(&a), WeightFunction::total(weight), bbox)
    }

    #[test]
    fn integral_interval_contains_the_exact_guarded_square_mass() {
        let (delta, _, wf, bbox) = guarded_square();
        let est = mc_integrate(&delta, &wf, &bbox, 200_000, 11).unwrap();
        assert!(est.contains(13.0 / 24.0), "CI {:?}", est.ci99);
        assert!(est.width() < 0.03);
    }

    #[test]
    fn probability_interval_contains_the_exact_conditional() {
        let (delta, gamma, wf, bbox) = guarded_square();
        let est = mc_probability(&gamma, &delta, &wf, &bbox, 200_000, 12)
            .unwrap()
            .unwrap();
        assert!(est.contains(4.0 / 13.0), "CI {:?}", est.ci99);
    }

    #[test]
    fn false_condition_gives_a_degenerate_zero_estimate() {
        let (_, _, wf, bbox) = guarded_square();
        let est = mc_integrate(&Formula::ff(), &wf, &bbox, 10_000, 3).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.ci99, (0.0, 0.0));
    }

    #[test]
    fn half_square_indicator_integrates_to_a_half() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let half = Formula::le(&LinearExpr::var(&x), &LinearExpr::constant(rat(1, 2)));
        let wf = WeightFunction::total(Weight::one());
        let est = mc_integrate(&half, &wf, &unit_box(&[&x, &y]), 100_000, 4).unwrap();
        assert!(est.contains(0.5), "CI {:?}", est.ci99);
    }

    #[test]
    fn conditioning_a_set_on_itself_is_exactly_one() {
        let (delta, _, wf, bbox) = guarded_square();
        let est = mc_probability(&delta, &delta, &wf, &bbox, 20_000, 5)
            .unwrap()
            .unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.width(), 0.0);
    }

    #[test]
    fn unreachable_condition_is_inconclusive() {
        let x = Variable::real("x");
        let far = Formula::ge(&LinearExpr::var(&x), &LinearExpr::constant(int(5)));
        let wf = WeightFunction::total(Weight::one());
        let out = mc_probability(&far, &far, &wf, &unit_box(&[&x]), 5_000, 6).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn runs_are_deterministic_under_a_fixed_seed() {
        let (delta, _, wf, bbox) = guarded_square();
        let a = mc_integrate(&delta, &wf, &bbox, 50_000, 9).unwrap();
        let b = mc_integrate(&delta, &wf, &bbox, 50_000, 9).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.ci99, b.ci99);
        let c = mc_integrate(&delta, &wf, &bbox, 50_000, 10).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn interval_width_shrinks_as_the_square_root_of_the_sample_count() {
        let (delta, _, wf, bbox) = guarded_square();
        let small = mc_integrate(&delta, &wf, &bbox, 10_000, 21).unwrap();
        let large = mc_integrate(&delta, &wf, &bbox, 1_000_000, 21).unwrap();
        let shrink = small.width() / large.width();
        assert!(
            (6.0..16.0).contains(&shrink),
            "width ratio {shrink} far from √100 = 10"
        );
    }

    #[test]
    fn box_variables_must_cover_the_formula() {
        let x = Variable::real("x");
        let y = Variable::real("y");
        let f = Formula::le(&LinearExpr::var(&y), &LinearExpr::constant(int(0)));
        let wf = WeightFunction::total(Weight::one());
        let err = mc_integrate(&f, &wf, &unit_box(&[&x]), 100, 0);
        assert!(matches!(err, Err(Error::UnboundedRegion { .. })));
    }

    #[test]
    fn forward_evaluating_estimator_matches_a_relu_task() {
        use crate::logic::Sort;
        use crate::models::{encode_relu_nn, Activation, Layer, NeuralNet};
        use crate::properties::{local_robustness, uniform_box_prior, Norm};

        // h = relu(x − 1/2), score = h − 1/4: class true iff x > 3/4.
        let x = Variable::real("x");
        let net = NeuralNet::new(vec![
            Layer::new(vec![vec![int(1)]], vec![rat(-1, 2)], Activation::Relu).unwrap(),
            Layer::new(vec![vec![int(1)]], vec![rat(-1, 4)], Activation::Identity).unwrap(),
        ])
        .unwrap();
        let sys = encode_relu_nn(&net, &[x.clone()], "v!")
            .unwrap()
            .with_class_output("vc");
        let prior = uniform_box_prior(&[(x.clone(), int(0), int(1))]).unwrap();

        // Ball of radius 1/8 around x₀ = 7/8 sits inside the true cell,
        // except [3/4, 3/4] itself is its boundary: P(class | ball) = 1.
        let prop = local_robustness(&sys, &[rat(7, 8)], true, &rat(1, 8), &prior, Norm::Linf)
            .unwrap();
        let est = mc_task_probability(&prop, 20_000, 5).unwrap().unwrap();
        assert!(est.contains(1.0), "estimate {est:?} should contain 1.0");

        // Ball of radius 1/4 around 3/4 covers [1/2, 1]: half the mass
        // classifies true.
        let prop = local_robustness(&sys, &[rat(3, 4)], true, &rat(1, 4), &prior, Norm::Linf)
            .unwrap();
        let est = mc_task_probability(&prop, 40_000, 5).unwrap().unwrap();
        assert!(
            est.contains(0.5),
            "estimate {est:?} should contain 1/2"
        );
        let again = mc_task_probability(&prop, 40_000, 5).unwrap().unwrap();
        assert_eq!(est.mean, again.mean);
        let _ = Sort::Real;
    }
}
