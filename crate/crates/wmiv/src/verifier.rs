//! Threshold verification: is `P(Δ_post | Δ_pre) > k`? The query is
//! answered exactly, but incrementally: the search space is split into
//! partitions induced by guard conditions of the system encoding, the
//! partitions are solved in a heuristic order, and the loop exits as soon
//! as the accumulated mass settles the comparison. The verdict never
//! depends on the partitioning or the ordering — only the runtime does.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::bounds_from_precondition;
use crate::logic::{Atom, Formula, LraAtom, Sort, Valuation, Variable};
use crate::properties::PropertyEncoding;
use crate::rational::{from_f64, to_f64, Rat};
use crate::wmi::{wmi_measured, WmiStats};
use crate::{Error, Result};

/// Order in which partitions are attacked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Heuristic {
    /// Conditions in encoding order.
    None,
    /// A seeded random selection of conditions.
    Random { seed: u64 },
    /// Conditions scored by how evenly they split the accepted prior
    /// mass (estimated by sampling); most balanced first.
    Sampling { seed: u64, samples: usize },
}

impl Default for Heuristic {
    fn default() -> Self {
        Heuristic::Sampling {
            seed: 0,
            samples: 1000,
        }
    }
}

/// A threshold query over a property encoding.
#[derive(Clone, Debug)]
pub struct VerificationTask {
    pub property: PropertyEncoding,
    /// Threshold in `[0, 1]`.
    pub k: Rat,
    /// Number of partitions; a power of two (the number of fixed
    /// conditions is its base-2 logarithm).
    pub n_partitions: usize,
    pub heuristic: Heuristic,
    /// Apply exactness-preserving bound propagation before solving.
    pub bound_propagation: bool,
    /// Pass already at `P̃ = k·Z` instead of strictly above it.
    pub exit_on_equal: bool,
}

impl VerificationTask {
    pub fn new(property: PropertyEncoding, k: Rat) -> Result<Self> {
        if k < Rat::zero() || k > Rat::from_integer(1.into()) {
            return Err(Error::Schema(format!("threshold k = {k} outside [0, 1]")));
        }
        Ok(VerificationTask {
            property,
            k,
            n_partitions: 16,
            heuristic: Heuristic::default(),
            bound_propagation: true,
            exit_on_equal: false,
        })
    }
}

/// The result of [`verify`].
#[derive(Clone, Debug)]
pub struct Verdict {
    /// Whether `P(Δ_post | Δ_pre)` clears the threshold.
    pub passed: bool,
    /// True when every partition was solved, making `probability` exact;
    /// otherwise `probability` is a lower bound reached at early exit.
    pub complete: bool,
    /// `P̃ / Z`: the exact conditional probability when complete.
    pub probability: Rat,
    /// Accumulated postcondition mass.
    pub p_tilde: Rat,
    /// Precondition mass, the normalizer of the threshold test.
    pub z: Rat,
    /// Post-mass contribution of each solved partition, in solve order.
    pub contributions: Vec<Rat>,
    pub partitions_solved: usize,
    pub partitions_total: usize,
    /// Conditions the partitioning asked for vs. actually available.
    pub conditions_requested: usize,
    pub conditions_used: usize,
    /// Conditions frozen by bound propagation before solving.
    pub decided_by_bounds: usize,
    /// The sampling heuristic accepted no samples and fell back to ties.
    pub sampling_fallback: bool,
    pub stats: WmiStats,
    pub wall_time: Duration,
}

/// Robustness classes for classification tasks: fully robust (zero
/// violation mass), violation below the tolerance, or at/above it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RobustnessClass {
    Robust,
    ProbablyRobust,
    NotRobust,
}

impl std::fmt::Display for RobustnessClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RobustnessClass::Robust => write!(f, "Rob"),
            RobustnessClass::ProbablyRobust => write!(f, "~Rob"),
            RobustnessClass::NotRobust => write!(f, "¬Rob"),
        }
    }
}

/// The result of [`classify_robustness`].
#[derive(Clone, Debug)]
pub struct RobustnessReport {
    pub class: RobustnessClass,
    /// Accumulated violation mass (exact when `complete`).
    pub violation_mass: Rat,
    /// `violation_mass / Z`; a lower bound when early exit fired.
    pub violation_probability: Rat,
    pub z: Rat,
    pub complete: bool,
    pub partitions_solved: usize,
    pub partitions_total: usize,
    pub decided_by_bounds: usize,
    pub stats: WmiStats,
    pub wall_time: Duration,
}

struct Prepared {
    property: PropertyEncoding,
    partitions: Vec<Formula>,
    z: Rat,
    stats: WmiStats,
    conditions_requested: usize,
    conditions_used: usize,
    decided_by_bounds: usize,
    sampling_fallback: bool,
}

fn prepare(task: &VerificationTask) -> Result<Prepared> {
    if task.k < Rat::zero() || task.k > Rat::from_integer(1.into()) {
        return Err(Error::Schema(format!(
            "threshold k = {} outside [0, 1]",
            task.k
        )));
    }
    if task.n_partitions == 0 || !task.n_partitions.is_power_of_two() {
        return Err(Error::Schema(format!(
            "partition count {} is not a power of two",
            task.n_partitions
        )));
    }
    let (property, decided_by_bounds) = if task.bound_propagation {
        match task.property.simplified() {
            Ok(pair) => pair,
            // A contradictory precondition has zero mass: conditioning
            // on a null event.
            Err(Error::UnsatPrecondition) => return Err(Error::NullCondition),
            Err(e) => return Err(e),
        }
    } else {
        (task.property.clone(), 0)
    };

    let mut stats = WmiStats::default();
    let z_out = wmi_measured(&property.delta_pre, &property.weight, &property.measured)?;
    stats.absorb(z_out.stats);
    if z_out.value.is_zero() {
        return Err(Error::NullCondition);
    }

    let requested = task.n_partitions.trailing_zeros() as usize;
    let (conditions, sampling_fallback) = choose_conditions(&property, requested, &task.heuristic)?;
    let partitions = partitions_of(&conditions);
    Ok(Prepared {
        conditions_used: conditions.len(),
        conditions_requested: requested,
        property,
        partitions,
        z: z_out.value,
        stats,
        decided_by_bounds,
        sampling_fallback,
    })
}

/// Selects and orders the conditions to fix, per the heuristic. Returns
/// at most `count` conditions (fewer when the encoding exposes fewer)
/// and whether the sampling heuristic had to fall back to tied scores.
pub fn choose_conditions(
    property: &PropertyEncoding,
    count: usize,
    heuristic: &Heuristic,
) -> Result<(Vec<LraAtom>, bool)> {
    let pool = &property.conditions;
    let take = count.min(pool.len());
    match heuristic {
        Heuristic::None => Ok((pool[..take].to_vec(), false)),
        Heuristic::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut indices: Vec<usize> = (0..pool.len()).collect();
            indices.shuffle(&mut rng);
            Ok((
                indices[..take].iter().map(|&i| pool[i].clone()).collect(),
                false,
            ))
        }
        Heuristic::Sampling { seed, samples } => {
            if *samples == 0 {
                return Err(Error::Schema("sampling heuristic needs samples ≥ 1".into()));
            }
            let (scores, fallback) = score_conditions(property, *samples, *seed)?;
            let mut indices: Vec<usize> = (0..pool.len()).collect();
            indices.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
            Ok((
                indices[..take].iter().map(|&i| pool[i].clone()).collect(),
                fallback,
            ))
        }
    }
}

/// All sign combinations of the given conditions, in binary order with
/// the all-true cell first: exhaustive and pairwise disjoint over the
/// condition atoms by construction.
pub fn partitions_of(conditions: &[LraAtom]) -> Vec<Formula> {
    let c = conditions.len();
    (0..(1usize << c))
        .map(|i| {
            Formula::and(conditions.iter().enumerate().map(|(j, a)| {
                let polarity = (i >> (c - 1 - j)) & 1 == 0;
                Formula::lit(Atom::Lra(a.clone()), polarity)
            }))
        })
        .collect()
}

/// Scores every condition of the property by `|p − 1/2|`, where `p` is
/// the weighted fraction of accepted samples satisfying it. Samples are
/// drawn uniformly from the prior's bounding box, pushed forward through
/// the system gates, accepted when they satisfy `Δ_pre ∧ Δ_post`, and
/// weighted by the prior density (a self-normalized importance
/// estimate). When nothing is accepted — or the box is unbounded — every
/// score ties at zero and the flag is set.
pub fn score_conditions(
    property: &PropertyEncoding,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, bool)> {
    let fallback = (vec![0.0; property.conditions.len()], true);
    let bbox = match bounds_from_precondition(&property.delta_pre, &property.weight.support) {
        Ok(b) => b,
        Err(Error::UnsatPrecondition) => return Ok(fallback),
        Err(e) => return Err(e),
    };

    // Variables to sample: every system input plus the measured
    // dimensions; gate-defined variables come from forward evaluation.
    let mut defined: BTreeSet<Variable> = BTreeSet::new();
    for sys in &property.systems {
        defined.extend(sys.defined_vars());
    }
    let mut sample_vars: BTreeSet<Variable> = property.measured.clone();
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
    let ranges = match bbox.finite_intervals(&reals) {
        Ok(r) => r
            .into_iter()
            .map(|(v, lo, hi)| (v, to_f64(&lo), to_f64(&hi)))
            .collect::<Vec<_>>(),
        Err(Error::UnboundedRegion { .. }) => return Ok(fallback),
        Err(e) => return Err(e),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0_f64;
    let mut hits = vec![0.0_f64; property.conditions.len()];
    for _ in 0..samples {
        let mut val = Valuation::new();
        for (v, lo, hi) in &ranges {
            let x = if lo < hi { rng.gen_range(*lo..=*hi) } else { *lo };
            let Some(r) = from_f64(x) else { continue };
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
            || property.delta_post.eval_point(&val) != Some(true)
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
        total += w;
        for (i, cond) in property.conditions.iter().enumerate() {
            if cond.eval(&val.reals) == Some(true) {
                hits[i] += w;
            }
        }
    }
    if total <= 0.0 {
        return Ok(fallback);
    }
    let scores = hits.into_iter().map(|h| (h / total - 0.5).abs()).collect();
    Ok((scores, false))
}

/// Runs the threshold query: accumulates postcondition mass partition by
/// partition and exits early once it exceeds `k·Z`. Returns `passed =
/// false` only after every partition has been solved.
pub fn verify(task: &VerificationTask) -> Result<Verdict> {
    let t0 = Instant::now();
    let mut prep = prepare(task)?;
    let threshold = &task.k * &prep.z;
    let clears = |p: &Rat| {
        if task.exit_on_equal {
            *p >= threshold
        } else {
            *p > threshold
        }
    };

    let mut p_tilde = Rat::zero();
    let mut contributions = Vec::new();
    let mut passed = false;
    let numerator = Formula::and([
        prep.property.delta_pre.clone(),
        prep.property.delta_post.clone(),
    ]);
    for phi in &prep.partitions {
        let cell = Formula::and([numerator.clone(), phi.clone()]);
        let out = wmi_measured(&cell, &prep.property.weight, &prep.property.measured)?;
        prep.stats.absorb(out.stats);
        p_tilde += &out.value;
        contributions.push(out.value);
        if clears(&p_tilde) {
            passed = true;
            break;
        }
    }
    let partitions_solved = contributions.len();
    let complete = partitions_solved == prep.partitions.len();
    Ok(Verdict {
        passed,
        complete,
        probability: &p_tilde / &prep.z,
        p_tilde,
        z: prep.z,
        contributions,
        partitions_solved,
        partitions_total: prep.partitions.len(),
        conditions_requested: prep.conditions_requested,
        conditions_used: prep.conditions_used,
        decided_by_bounds: prep.decided_by_bounds,
        sampling_fallback: prep.sampling_fallback,
        stats: prep.stats,
        wall_time: t0.elapsed(),
    })
}

/// Classifies a task by its violation mass `V = Z − WMI(Δ_pre ∧ Δ_post)`:
/// fully robust at `V = 0`, probably robust below `k·Z`, not robust at or
/// above it. Accumulates violations partition by partition and exits as
/// soon as the class is settled (positive violation at or above `k·Z`
/// can only grow). Early and full runs always agree.
pub fn classify_robustness(task: &VerificationTask) -> Result<RobustnessReport> {
    let t0 = Instant::now();
    let mut prep = prepare(task)?;
    let threshold = &task.k * &prep.z;

    let mut violation = Rat::zero();
    let mut solved = 0;
    let violated = Formula::and([
        prep.property.delta_pre.clone(),
        Formula::not(prep.property.delta_post.clone()),
    ]);
    for phi in &prep.partitions {
        let cell = Formula::and([violated.clone(), phi.clone()]);
        let out = wmi_measured(&cell, &prep.property.weight, &prep.property.measured)?;
        prep.stats.absorb(out.stats);
        violation += &out.value;
        solved += 1;
        if !violation.is_zero() && violation >= threshold {
            break;
        }
    }
    let complete = solved == prep.partitions.len();
    let class = if violation.is_zero() {
        RobustnessClass::Robust
    } else if violation < threshold {
        RobustnessClass::ProbablyRobust
    } else {
        RobustnessClass::NotRobust
    };
    Ok(RobustnessReport {
        class,
        violation_probability: &violation / &prep.z,
        violation_mass: violation,
        z: prep.z,
        complete,
        partitions_solved: solved,
        partitions_total: prep.partitions.len(),
        decided_by_bounds: prep.decided_by_bounds,
        stats: prep.stats,
        wall_time: t0.elapsed(),
    })
}
