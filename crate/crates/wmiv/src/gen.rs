//! Seeded data generators: the income population study, the synthetic
//! linear-threshold benchmark, and a corpus of random integration
//! problems for cross-checking the engine against the sampling oracle.
//! This is the only place (besides the oracle) where floating point and
//! Gaussian sampling appear; everything downstream converts samples to
//! exact rationals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::logic::{Atom, CmpOp, Formula, LinearExpr, LraAtom, Variable};
use crate::models::{Column, Dataset, Value};
use crate::rational::{from_f64, int, Rat};
use crate::weights::{Weight, WeightFunction};
use crate::{Error, Result};

// ---------------------------------------------------------------------
// Income population study.

/// Configuration of the income data generator.
#[derive(Clone, Copy, Debug)]
pub struct IncomeConfig {
    /// Apply the gender wage penalty.
    pub biased: bool,
    pub n_train_prior: usize,
    pub n_train_sys: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for IncomeConfig {
    fn default() -> Self {
        IncomeConfig {
            biased: false,
            n_train_prior: 10_000,
            n_train_sys: 10_000,
            n_test: 1_000,
            seed: 0,
        }
    }
}

/// One sampled individual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncomeRow {
    pub female: bool,
    /// Work hours per week.
    pub hpw: f64,
    /// Hourly wage.
    pub hw: f64,
    /// Years of working experience.
    pub yexp: f64,
    pub income: f64,
    /// Whether income exceeds 35 000.
    pub label: bool,
}

/// The three disjoint datasets of an income run: prior training, system
/// training, and held-out test rows.
#[derive(Clone, Debug, PartialEq)]
pub struct IncomeData {
    pub train_prior: Vec<IncomeRow>,
    pub train_sys: Vec<IncomeRow>,
    pub test: Vec<IncomeRow>,
}

fn income_row(rng: &mut ChaCha8Rng, biased: bool) -> IncomeRow {
    let n_hpw: Normal<f64> = Normal::new(7.0, 1.0).unwrap();
    let n_yexp: Normal<f64> = Normal::new(20.0, 7.0).unwrap();
    let n_wage: Normal<f64> = Normal::new(1.0, 0.02).unwrap();
    let n_penalty: Normal<f64> = Normal::new(0.1, 0.02).unwrap();

    let female = rng.gen_bool(0.5);
    let hpw = 5.0 * n_hpw.sample(rng).clamp(2.0, 12.0);
    let yexp = n_yexp.sample(rng).clamp(0.0, 55.0);
    let mut hw = n_wage.sample(rng) * (500.0 * yexp + 30_000.0) / 1920.0;
    if biased {
        let sign = if female { -1.0 } else { 1.0 };
        hw += hw * n_penalty.sample(rng) * sign;
    }
    let income = 48.0 * hpw * hw;
    IncomeRow {
        female,
        hpw,
        hw,
        yexp,
        income,
        label: income > 35_000.0,
    }
}

/// Samples the three income datasets. Deterministic under the seed: the
/// rows are drawn from one stream in prior → system → test order.
pub fn gen_income_data(cfg: &IncomeConfig) -> Result<IncomeData> {
    if cfg.n_train_prior == 0 || cfg.n_train_sys == 0 || cfg.n_test == 0 {
        return Err(Error::Schema("income dataset sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |n: usize| (0..n).map(|_| income_row(&mut rng, cfg.biased)).collect();
    Ok(IncomeData {
        train_prior: draw(cfg.n_train_prior),
        train_sys: draw(cfg.n_train_sys),
        test: draw(cfg.n_test),
    })
}

/// Converts income rows to the typed table format (columns `female`,
/// `hpw`, `hw`, `yexp`, `label`), with floats expanded to their exact
/// binary rational values.
pub fn income_dataset(rows: &[IncomeRow]) -> Result<Dataset> {
    let columns = vec![
        Column::bool("female"),
        Column::real("hpw"),
        Column::real("hw"),
        Column::real("yexp"),
        Column::bool("label"),
    ];
    let to_rat = |x: f64| {
        from_f64(x).ok_or_else(|| Error::Dataset(format!("non-finite sample {x}")))
    };
    let rows = rows
        .iter()
        .map(|r| {
            Ok(vec![
                Value::Bool(r.female),
                Value::Real(to_rat(r.hpw)?),
                Value::Real(to_rat(r.hw)?),
                Value::Real(to_rat(r.yexp)?),
                Value::Bool(r.label),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(columns, rows)
}

// ---------------------------------------------------------------------
// Synthetic linear-threshold benchmark.

/// A generated benchmark: inputs drawn from a standard normal, labeled
/// by the sign of `(x·M₁)·M₂` for random matrices `M₁ ∈ {−1,0,1}^{N×M}`
/// and `M₂ ∈ {−1,1}^{M}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticBench {
    pub m1: Vec<Vec<i64>>,
    pub m2: Vec<i64>,
    /// Feature vectors with their ground-truth labels.
    pub rows: Vec<(Vec<f64>, bool)>,
}

/// Ground-truth label: `(x·M₁)·M₂ ≥ 0`.
pub fn synthetic_label(x: &[f64], m1: &[Vec<i64>], m2: &[i64]) -> bool {
    let score: f64 = m2
        .iter()
        .enumerate()
        .map(|(j, &c2)| {
            let z: f64 = x.iter().zip(m1).map(|(xi, row)| xi * row[j] as f64).sum();
            z * c2 as f64
        })
        .sum();
    score >= 0.0
}

/// Generates the benchmark dataset. Deterministic under the seed.
pub fn gen_synthetic_benchmark(
    n_inputs: usize,
    m: usize,
    n_samples: usize,
    seed: u64,
) -> Result<SyntheticBench> {
    if n_inputs == 0 || m == 0 || n_samples == 0 {
        return Err(Error::Schema("benchmark dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m1: Vec<Vec<i64>> = (0..n_inputs)
        .map(|_| (0..m).map(|_| rng.gen_range(-1..=1)).collect())
        .collect();
    let m2: Vec<i64> = (0..m)
        .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
        .collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows = (0..n_samples)
        .map(|_| {
            let x: Vec<f64> = (0..n_inputs).map(|_| normal.sample(&mut rng)).collect();
            let label = synthetic_label(&x, &m1, &m2);
            (x, label)
        })
        .collect();
    Ok(SyntheticBench { m1, m2, rows })
}

/// Converts benchmark rows to the typed table format (columns `x0…`,
/// `label`).
pub fn synthetic_dataset(bench: &SyntheticBench) -> Result<Dataset> {
    let n = bench.m1.len();
    let mut columns: Vec<Column> = (0..n).map(|i| Column::real(format!("x{i}"))).collect();
    columns.push(Column::bool("label"));
    let rows = bench
        .rows
        .iter()
        .map(|(x, label)| {
            let mut row = x
                .iter()
                .map(|&xi| {
                    from_f64(xi)
                        .map(Value::Real)
                        .ok_or_else(|| Error::Dataset(format!("non-finite sample {xi}")))
                })
                .collect::<Result<Vec<_>>>()?;
            row.push(Value::Bool(*label));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(columns, rows)
}

// ---------------------------------------------------------------------
// Random integration problems for oracle cross-validation.

/// A randomly generated integration problem together with the bounding
/// box of its real variables (the sampling domain of the oracle).
#[derive(Clone, Debug)]
pub struct RandomProblem {
    pub delta: Formula,
    pub weight: WeightFunction,
    pub bbox: Vec<(Variable, Rat, Rat)>,
}

fn random_atom(rng: &mut ChaCha8Rng, reals: &[Variable]) -> LraAtom {
    let mut expr = LinearExpr::zero();
    let arity = rng.gen_range(1..=reals.len().min(2));
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < arity {
        let i = rng.gen_range(0..reals.len());
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    for &i in &picked {
        let c = *[-2i64, -1, 1, 2]
            .get(rng.gen_range(0..4))
            .expect("coefficient choice");
        expr.add_term(&int(c), &reals[i]);
    }
    let rhs = LinearExpr::constant(int(rng.gen_range(-2..=2)));
    let op = match rng.gen_range(0..4) {
        0 => CmpOp::Le,
        1 => CmpOp::Lt,
        2 => CmpOp::Ge,
        _ => CmpOp::Gt,
    };
    // Canonicalization may flip the literal's polarity; only the atom
    // matters here, callers attach their own sign.
    match Formula::cmp(&expr, op, &rhs).atoms().into_iter().next() {
        Some(Atom::Lra(a)) => a,
        _ => unreachable!("a comparison over variables holds one atom"),
    }
}

fn random_poly(rng: &mut ChaCha8Rng, reals: &[Variable]) -> Weight {
    // A degree ≤ 3 polynomial with small nonnegative coefficients,
    // nonzero constant term so the weight cannot vanish identically.
    let mut w = Weight::constant(int(rng.gen_range(1..=2)));
    for _ in 0..rng.gen_range(0..=2) {
        let v = &reals[rng.gen_range(0..reals.len())];
        let mut term = Weight::var(v);
        for _ in 0..rng.gen_range(0..=2u32) {
            let u = &reals[rng.gen_range(0..reals.len())];
            term = Weight::product([term, Weight::var(u)]);
        }
        w = Weight::sum([w, term]);
    }
    w
}

fn random_literal(
    rng: &mut ChaCha8Rng,
    atoms: &[LraAtom],
    bools: &[Variable],
) -> Formula {
    let polarity = rng.gen_bool(0.5);
    let n = atoms.len() + bools.len();
    let i = rng.gen_range(0..n);
    let atom = if i < atoms.len() {
        Atom::Lra(atoms[i].clone())
    } else {
        Atom::Bool(bools[i - atoms.len()].clone())
    };
    Formula::lit(atom, polarity)
}

/// Generates a small random problem: at most 3 reals over an integer
/// box, at most 4 booleans, at most 8 linear atoms in total (box atoms
/// included), and a piecewise-polynomial weight of degree ≤ 3. Equality
/// atoms are deliberately excluded: they concentrate mass on lower-
/// dimensional sets, which full-dimensional uniform sampling cannot see.
pub fn random_problem(seed: u64) -> RandomProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_reals = rng.gen_range(1..=3);
    let reals: Vec<Variable> = (0..n_reals)
        .map(|i| Variable::real(format!("x{i}")))
        .collect();
    let n_bools = rng.gen_range(0..=4);
    let bools: Vec<Variable> = (0..n_bools)
        .map(|i| Variable::bool(format!("b{i}")))
        .collect();

    let mut bbox = Vec::new();
    let mut parts = Vec::new();
    for v in &reals {
        let lo = int(rng.gen_range(-2..=0));
        let hi = &lo + int(rng.gen_range(1..=3));
        parts.push(Formula::interval(v, &lo, &hi).expect("lo < hi"));
        bbox.push((v.clone(), lo, hi));
    }

    let n_atoms = rng.gen_range(1..=(8 - 2 * n_reals));
    let atoms: Vec<LraAtom> = (0..n_atoms).map(|_| random_atom(&mut rng, &reals)).collect();

    for _ in 0..rng.gen_range(1..=3) {
        let clause = Formula::or(
            (0..rng.gen_range(1..=3)).map(|_| random_literal(&mut rng, &atoms, &bools)),
        );
        parts.push(clause);
    }
    let delta = Formula::and(parts);

    let factors: Vec<Weight> = (0..rng.gen_range(1..=2))
        .map(|_| {
            if rng.gen_bool(0.6) {
                Weight::ite(
                    random_literal(&mut rng, &atoms, &bools),
                    random_poly(&mut rng, &reals),
                    random_poly(&mut rng, &reals),
                )
            } else {
                random_poly(&mut rng, &reals)
            }
        })
        .collect();
    let weight = WeightFunction::total(Weight::product(factors));
    RandomProblem {
        delta,
        weight,
        bbox,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::mc_integrate;
    use crate::rational::to_f64;
    use crate::wmi::wmi_value;

    #[test]
    fn income_generation_is_deterministic_and_balanced() {
        let cfg = IncomeConfig {
            n_test: 100,
            ..IncomeConfig::default()
        };
        let a = gen_income_data(&cfg).unwrap();
        let b = gen_income_data(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train_prior.len(), 10_000);

        let positives = a.train_prior.iter().filter(|r| r.label).count();
        let rate = positives as f64 / 10_000.0;
        assert!((0.3..0.7).contains(&rate), "positive rate {rate}");
        for r in &a.train_prior {
            assert!((10.0..=60.0).contains(&r.hpw));
            assert!((0.0..=55.0).contains(&r.yexp));
            assert_eq!(r.label, r.income > 35_000.0);
        }
    }

    fn mean_wage_gap(data: &IncomeData) -> (f64, f64) {
        let (mut f_sum, mut f_n, mut m_sum, mut m_n) = (0.0, 0usize, 0.0, 0usize);
        for r in &data.train_prior {
            if r.female {
                f_sum += r.hw;
                f_n += 1;
            } else {
                m_sum += r.hw;
                m_n += 1;
            }
        }
        (f_sum / f_n as f64, m_sum / m_n as f64)
    }

    #[test]
    fn wage_penalty_appears_only_in_the_biased_variant() {
        let biased = gen_income_data(&IncomeConfig {
            biased: true,
            ..IncomeConfig::default()
        })
        .unwrap();
        let (f, m) = mean_wage_gap(&biased);
        assert!(f < m, "biased female mean {f} vs male {m}");
        // ≈ 10% penalty on one side, 10% bonus on the other.
        assert!((m - f) / m > 0.1);

        let fair = gen_income_data(&IncomeConfig::default()).unwrap();
        let (f, m) = mean_wage_gap(&fair);
        // Two-sample difference statistically indistinguishable from
        // zero at the 1% level (σ_hw ≈ 2 from yexp's spread alone).
        let se = 2.5 * (2.0 / 5000.0f64).sqrt();
        assert!(
            (f - m).abs() < 2.576 * se,
            "unbiased gap {} exceeds the 1% band",
            f - m
        );
    }

    #[test]
    fn zero_mixing_matrix_labels_everything_true() {
        let m1 = vec![vec![0i64; 10]; 3];
        let m2 = vec![1i64; 10];
        assert!(synthetic_label(&[1.0, -2.0, 3.0], &m1, &m2));
    }

    #[test]
    fn synthetic_benchmark_is_deterministic_with_reasonable_balance() {
        let a = gen_synthetic_benchmark(3, 10, 10_000, 0).unwrap();
        let b = gen_synthetic_benchmark(3, 10, 10_000, 0).unwrap();
        assert_eq!(a, b);
        for row in &a.m1 {
            assert!(row.iter().all(|c| (-1..=1).contains(c)));
        }
        assert!(a.m2.iter().all(|&c| c == 1 || c == -1));
        let rate =
            a.rows.iter().filter(|(_, l)| *l).count() as f64 / a.rows.len() as f64;
        assert!((0.35..0.65).contains(&rate), "class balance {rate}");

        let table = synthetic_dataset(&a).unwrap();
        assert_eq!(table.len(), 10_000);
        assert_eq!(table.columns().len(), 4);
    }

    #[test]
    fn random_problems_respect_their_size_contract() {
        for seed in 0..20 {
            let p = random_problem(seed);
            let reals: Vec<_> = p
                .delta
                .variables()
                .into_iter()
                .filter(|v| v.sort() == crate::logic::Sort::Real)
                .collect();
            assert!(reals.len() <= 3);
            let lra_atoms = p
                .delta
                .atoms()
                .into_iter()
                .chain(p.weight.weight.condition_atoms())
                .filter(|a| !a.is_bool())
                .collect::<std::collections::BTreeSet<_>>();
            assert!(lra_atoms.len() <= 8, "seed {seed}: {} atoms", lra_atoms.len());
        }
    }

    #[test]
    fn engine_values_sit_inside_oracle_intervals_on_random_problems() {
        for seed in [0, 1, 2] {
            let p = random_problem(seed);
            let exact = wmi_value(&p.delta, &p.weight).unwrap();
            let est = mc_integrate(&p.delta, &p.weight, &p.bbox, 200_000, 77).unwrap();
            assert!(
                est.contains(to_f64(&exact)),
                "seed {seed}: exact {exact} outside {:?}",
                est.ci99
            );
        }
    }
}
