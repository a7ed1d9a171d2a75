//! `wmiv` — exact probabilistic verification of ML models from the command
//! line. Subcommands cover the raw weighted-model-integration engine,
//! task-file verification, density-tree training, the synthetic data
//! generators and a batch benchmark runner.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use wmiv::gen::{
    gen_income_data, gen_synthetic_benchmark, income_dataset, synthetic_dataset, IncomeConfig,
};
use wmiv::io::{
    dataset_from_csv, dataset_to_csv, det_to_json, rat_to_string,
    task_from_json, HeuristicSpec, LoadedTask, NormSpec, TaskFile,
};
use wmiv::logic::text::{parse_formula, parse_sexp, VarTable};
use wmiv::logic::Formula;
use wmiv::models::train_det;
use wmiv::oracle::mc_task_probability;
use wmiv::properties::demographic_parity_ratio;
use wmiv::rational::to_f64;
use wmiv::verifier::{classify_robustness, verify, RobustnessClass};
use wmiv::weights::{weight_from_sexp, WeightFunction};
use wmiv::wmi::{conditional_probability, wmi};

/// Exact probabilistic verification of machine-learning models by
/// reduction to weighted model integration over linear real arithmetic.
#[derive(Parser)]
#[command(name = "wmiv", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute an exact weighted model integral of an s-expression problem.
    ///
    /// Formulas: (and ...), (or ...), (not f), (=> a b), (iff a b),
    /// comparisons (<= e e), (< e e), (>= e e), (> e e), (= e e), (!= e e)
    /// over linear expressions (+ ...), (- ...), (* c x), rationals `p/q`,
    /// and bare symbols (booleans in formula position, reals in
    /// arithmetic). Weights: polynomials (+ ...), (- ...), (* ...),
    /// (^ e k), plus (ite cond w w), (sum w...), (prod w...).
    Wmi(WmiArgs),
    /// Verify a JSON task file and print the verdict report.
    Verify(VerifyArgs),
    /// Train a density-estimation tree on a typed CSV dataset.
    TrainDet(TrainDetArgs),
    /// Generate the synthetic income datasets (prior, system, test).
    GenIncome(GenIncomeArgs),
    /// Generate the random-matrix classification benchmark.
    GenBench(GenBenchArgs),
    /// Run every task file in a suite and emit one CSV row per instance.
    Bench(BenchArgs),
}

#[derive(Args)]
struct WmiArgs {
    /// Formula Δ as an s-expression, e.g. "(and (<= x 1) (<= 0 x))".
    formula: String,
    /// Weight as an s-expression, e.g. "(ite (<= (+ x y) 1) x 1)".
    weight: String,
    /// Restrict the weight's support to this formula (default: true).
    #[arg(long)]
    support: Option<String>,
    /// Also print the conditional probability P(query | formula).
    #[arg(long)]
    query: Option<String>,
}

/// Verifier settings shared by `verify` and `bench`; every flag overrides
/// the corresponding field of the task file only when given.
#[derive(Args, Clone)]
struct VerifierOverrides {
    /// Probability threshold k as an exact rational, e.g. 1/10.
    #[arg(long)]
    k: Option<String>,
    /// Number of partitions (a power of two).
    #[arg(long)]
    partitions: Option<usize>,
    /// Partition-condition selection heuristic.
    #[arg(long, value_enum)]
    heuristic: Option<HeuristicArg>,
    /// Seed for the heuristic's RNG.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample count for the sampling heuristic.
    #[arg(long)]
    samples: Option<usize>,
    /// Disable interval bound propagation.
    #[arg(long)]
    no_bp: bool,
    /// Distance norm for robustness/equivalence properties.
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    None,
    Random,
    Sampling,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    Linf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Path to the JSON task file.
    task: PathBuf,
    #[command(flatten)]
    overrides: VerifierOverrides,
    /// Report the robustness trichotomy (Rob / ~Rob / ¬Rob) instead of
    /// the threshold verdict; k is read as the violation tolerance.
    #[arg(long)]
    classify: bool,
}

#[derive(Args)]
struct TrainDetArgs {
    /// Path to the typed CSV dataset (header `name:real,name:bool,...`).
    data: PathBuf,
    /// Stop splitting a node holding fewer than this many rows.
    #[arg(long, default_value_t = 100)]
    n_min: usize,
    /// Always split nodes holding more than this many rows.
    #[arg(long, default_value_t = 500)]
    n_max: usize,
    /// Output file for the tree JSON (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenIncomeArgs {
    /// Apply the gender wage penalty to the generator.
    #[arg(long)]
    biased: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rows for the prior-training dataset.
    #[arg(long, default_value_t = 10000)]
    n_train_prior: usize,
    /// Rows for the system-training dataset.
    #[arg(long, default_value_t = 10000)]
    n_train_sys: usize,
    /// Rows for the test dataset.
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    /// Directory the three CSV files are written into.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenBenchArgs {
    /// Number of real-valued inputs N.
    #[arg(long, default_value_t = 3)]
    inputs: usize,
    /// Hidden dimension M of the ground-truth matrices.
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Number of generated rows.
    #[arg(long, default_value_t = 10000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory the dataset and ground-truth files are written into.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// A task file, or a directory whose *.json files form the suite.
    suite: PathBuf,
    #[command(flatten)]
    overrides: VerifierOverrides,
    /// Cross-validate each exact probability against a forward-evaluating
    /// Monte-Carlo estimate with a 99% confidence interval.
    #[arg(long)]
    oracle: bool,
    /// Sample count for the oracle cross-check.
    #[arg(long, default_value_t = 100000)]
    oracle_samples: usize,
    /// Output CSV file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Wmi(a) => cmd_wmi(&a),
        Cmd::Verify(a) => cmd_verify(&a),
        Cmd::TrainDet(a) => cmd_train_det(&a),
        Cmd::GenIncome(a) => cmd_gen_income(&a),
        Cmd::GenBench(a) => cmd_gen_bench(&a),
        Cmd::Bench(a) => cmd_bench(&a),
    }
}

fn approx(r: &wmiv::rational::Rat) -> String {
    format!("{:.6}", to_f64(r))
}

fn cmd_wmi(a: &WmiArgs) -> Result<()> {
    let mut vars = VarTable::new();
    let delta = parse_formula(&a.formula, &mut vars).context("parsing the formula")?;
    let weight =
        weight_from_sexp(&parse_sexp(&a.weight)?, &mut vars).context("parsing the weight")?;
    let support = match &a.support {
        Some(s) => parse_formula(s, &mut vars).context("parsing the support")?,
        None => Formula::tt(),
    };
    let wf = WeightFunction::new(weight, support);

    let start = Instant::now();
    let out = wmi(&delta, &wf)?;
    println!("WMI = {} (≈ {})", rat_to_string(&out.value), approx(&out.value));
    if let Some(q) = &a.query {
        let gamma = parse_formula(q, &mut vars).context("parsing the query")?;
        let p = conditional_probability(&gamma, &delta, &wf)?;
        println!("P(query | formula) = {} (≈ {})", rat_to_string(&p), approx(&p));
    }
    println!("assignments enumerated: {}", out.stats.assignments);
    println!("integrations performed: {}", out.stats.integrations);
    println!("wall time: {:.3?}", start.elapsed());
    Ok(())
}

/// Applies CLI overrides to the task file's verifier block.
fn apply_overrides(file: &mut TaskFile, o: &VerifierOverrides) {
    if let Some(k) = &o.k {
        file.verifier.k = k.clone();
    }
    if let Some(p) = o.partitions {
        file.verifier.partitions = p;
    }
    if let Some(h) = o.heuristic {
        file.verifier.heuristic = match h {
            HeuristicArg::None => HeuristicSpec::None,
            HeuristicArg::Random => HeuristicSpec::Random,
            HeuristicArg::Sampling => HeuristicSpec::Sampling,
        };
    }
    if let Some(s) = o.seed {
        file.verifier.seed = s;
    }
    if let Some(s) = o.samples {
        file.verifier.samples = s;
    }
    if o.no_bp {
        file.verifier.bp = false;
    }
    if let Some(n) = o.norm {
        file.verifier.norm = match n {
            NormArg::L1 => NormSpec::L1,
            NormArg::Linf => NormSpec::Linf,
        };
    }
}

/// Loads a task file with overrides applied before the encodings are built,
/// so property-level settings like the norm take effect.
fn load_with_overrides(path: &Path, o: &VerifierOverrides) -> Result<(LoadedTask, String)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading task file {}", path.display()))?;
    let mut file = task_from_json(&text)?;
    apply_overrides(&mut file, o);
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut read = |rel: &str| -> wmiv::Result<String> {
        Ok(fs::read_to_string(dir.join(rel))?)
    };
    let task = wmiv::io::build_task(&file, &mut read)?;
    let k = file.verifier.k.clone();
    Ok((task, k))
}

fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let (task, _) = load_with_overrides(&a.task, &a.overrides)?;
    match task {
        LoadedTask::Parity {
            system,
            minority,
            prior,
            k,
        } => {
            let start = Instant::now();
            let ratio = demographic_parity_ratio(&system, &minority, &prior)?;
            let threshold = wmiv::rational::int(1) - k.clone();
            let passed = ratio >= threshold;
            println!(
                "demographic parity ratio = {} (≈ {})",
                rat_to_string(&ratio),
                approx(&ratio)
            );
            println!(
                "fairness threshold: ratio ≥ 1 − k = {} → {}",
                rat_to_string(&threshold),
                if passed { "PASS" } else { "FAIL" }
            );
            println!("wall time: {:.3?}", start.elapsed());
        }
        LoadedTask::Threshold(task) if a.classify => {
            let report = classify_robustness(&task)?;
            println!("class: {}", report.class);
            println!(
                "violation probability{}: {} (≈ {})",
                if report.complete { "" } else { " ≥" },
                rat_to_string(&report.violation_probability),
                approx(&report.violation_probability)
            );
            println!("violation tolerance k = {}", rat_to_string(&task.k));
            println!("Z = {} (precondition mass)", rat_to_string(&report.z));
            println!(
                "partitions solved: {} / {}",
                report.partitions_solved, report.partitions_total
            );
            if report.decided_by_bounds > 0 {
                println!(
                    "conditions decided by bound propagation: {}",
                    report.decided_by_bounds
                );
            }
            println!("assignments enumerated: {}", report.stats.assignments);
            println!("integrations performed: {}", report.stats.integrations);
            println!("wall time: {:.3?}", report.wall_time);
        }
        LoadedTask::Threshold(task) => {
            let verdict = verify(&task)?;
            println!(
                "verdict: {}",
                if verdict.passed {
                    "PASS (probability clears the threshold)"
                } else {
                    "FAIL (probability does not clear the threshold)"
                }
            );
            println!("Z = {} (precondition mass)", rat_to_string(&verdict.z));
            if verdict.complete {
                println!(
                    "probability = {} (≈ {}, exact)",
                    rat_to_string(&verdict.probability),
                    approx(&verdict.probability)
                );
            } else {
                println!(
                    "probability ≥ {} (≈ {}, early-exit lower bound)",
                    rat_to_string(&verdict.probability),
                    approx(&verdict.probability)
                );
            }
            println!("threshold k = {}", rat_to_string(&task.k));
            println!(
                "partitions solved: {} / {}",
                verdict.partitions_solved, verdict.partitions_total
            );
            println!(
                "partition conditions: {} requested, {} used",
                verdict.conditions_requested, verdict.conditions_used
            );
            if verdict.decided_by_bounds > 0 {
                println!(
                    "conditions decided by bound propagation: {}",
                    verdict.decided_by_bounds
                );
            }
            if verdict.sampling_fallback {
                println!("note: the sampling heuristic accepted no samples; condition order fell back to ties");
            }
            println!("assignments enumerated: {}", verdict.stats.assignments);
            println!("integrations performed: {}", verdict.stats.integrations);
            println!("wall time: {:.3?}", verdict.wall_time);
        }
    }
    Ok(())
}

fn cmd_train_det(a: &TrainDetArgs) -> Result<()> {
    let text = fs::read_to_string(&a.data)
        .with_context(|| format!("reading {}", a.data.display()))?;
    let data = dataset_from_csv(&text)?;
    let tree = train_det(&data, a.n_min, a.n_max)?;
    let json = det_to_json(&tree);
    match &a.output {
        Some(path) => {
            fs::write(path, &json)?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_gen_income(a: &GenIncomeArgs) -> Result<()> {
    let cfg = IncomeConfig {
        biased: a.biased,
        n_train_prior: a.n_train_prior,
        n_train_sys: a.n_train_sys,
        n_test: a.n_test,
        seed: a.seed,
    };
    let data = gen_income_data(&cfg)?;
    fs::create_dir_all(&a.out_dir)?;
    for (name, rows) in [
        ("income_prior.csv", &data.train_prior),
        ("income_sys.csv", &data.train_sys),
        ("income_test.csv", &data.test),
    ] {
        let path = a.out_dir.join(name);
        fs::write(&path, dataset_to_csv(&income_dataset(rows)?))?;
        eprintln!("wrote {} ({} rows)", path.display(), rows.len());
    }
    Ok(())
}

fn cmd_gen_bench(a: &GenBenchArgs) -> Result<()> {
    let bench = gen_synthetic_benchmark(a.inputs, a.m, a.samples, a.seed)?;
    fs::create_dir_all(&a.out_dir)?;
    let data_path = a.out_dir.join("bench_data.csv");
    fs::write(&data_path, dataset_to_csv(&synthetic_dataset(&bench)?))?;
    eprintln!("wrote {} ({} rows)", data_path.display(), bench.rows.len());
    let truth_path = a.out_dir.join("bench_truth.json");
    let truth = serde_json::json!({ "m1": bench.m1, "m2": bench.m2 });
    fs::write(&truth_path, serde_json::to_string_pretty(&truth)?)?;
    eprintln!("wrote {}", truth_path.display());
    Ok(())
}

/// One CSV cell, quoted only when it needs to be.
fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct BenchRow {
    instance: String,
    kind: &'static str,
    verdict: String,
    class: String,
    probability: String,
    violation: String,
    z: String,
    complete: String,
    partitions_solved: String,
    partitions_total: String,
    assignments: String,
    integrations: String,
    runtime_s: String,
    oracle_mean: String,
    oracle_lo99: String,
    oracle_hi99: String,
    oracle_agrees: String,
    error: String,
}

impl BenchRow {
    fn empty(instance: String, kind: &'static str) -> Self {
        BenchRow {
            instance,
            kind,
            verdict: String::new(),
            class: String::new(),
            probability: String::new(),
            violation: String::new(),
            z: String::new(),
            complete: String::new(),
            partitions_solved: String::new(),
            partitions_total: String::new(),
            assignments: String::new(),
            integrations: String::new(),
            runtime_s: String::new(),
            oracle_mean: String::new(),
            oracle_lo99: String::new(),
            oracle_hi99: String::new(),
            oracle_agrees: String::new(),
            error: String::new(),
        }
    }
}

const BENCH_HEADER: &str = "instance,kind,verdict,class,probability,violation,z,complete,\
partitions_solved,partitions_total,assignments,integrations,runtime_s,\
oracle_mean,oracle_lo99,oracle_hi99,oracle_agrees,error";

fn bench_instance(path: &Path, a: &BenchArgs) -> BenchRow {
    let instance = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let loaded = match load_with_overrides(path, &a.overrides) {
        Ok((t, _)) => t,
        Err(e) => {
            let mut row = BenchRow::empty(instance, "error");
            row.verdict = "error".into();
            row.error = format!("{e:#}");
            return row;
        }
    };
    match loaded {
        LoadedTask::Parity {
            system,
            minority,
            prior,
            k,
        } => {
            let mut row = BenchRow::empty(instance, "parity");
            let start = Instant::now();
            match demographic_parity_ratio(&system, &minority, &prior) {
                Ok(ratio) => {
                    let threshold = wmiv::rational::int(1) - k;
                    row.verdict = if ratio >= threshold { "pass" } else { "fail" }.into();
                    row.probability = rat_to_string(&ratio);
                    row.complete = "true".into();
                }
                Err(e) => {
                    row.verdict = "error".into();
                    row.error = e.to_string();
                }
            }
            row.runtime_s = format!("{:.3}", start.elapsed().as_secs_f64());
            row
        }
        LoadedTask::Threshold(task) => {
            let mut row = BenchRow::empty(instance, "robustness");
            let report = match classify_robustness(&task) {
                Ok(r) => r,
                Err(e) => {
                    row.verdict = "error".into();
                    row.error = e.to_string();
                    return row;
                }
            };
            row.verdict = if report.class == RobustnessClass::NotRobust {
                "fail"
            } else {
                "pass"
            }
            .into();
            row.class = report.class.to_string();
            let one = wmiv::rational::int(1);
            if report.complete {
                row.probability = rat_to_string(&(one - report.violation_probability.clone()));
            }
            row.violation = rat_to_string(&report.violation_probability);
            row.z = rat_to_string(&report.z);
            row.complete = report.complete.to_string();
            row.partitions_solved = report.partitions_solved.to_string();
            row.partitions_total = report.partitions_total.to_string();
            row.assignments = report.stats.assignments.to_string();
            row.integrations = report.stats.integrations.to_string();
            row.runtime_s = format!("{:.3}", report.wall_time.as_secs_f64());
            if a.oracle && report.complete {
                match mc_task_probability(&task.property, a.oracle_samples, 0) {
                    Ok(Some(est)) => {
                        let exact = 1.0 - to_f64(&report.violation_probability);
                        row.oracle_mean = format!("{:.6}", est.mean);
                        row.oracle_lo99 = format!("{:.6}", est.ci99.0);
                        row.oracle_hi99 = format!("{:.6}", est.ci99.1);
                        row.oracle_agrees = est.contains(exact).to_string();
                    }
                    Ok(None) => row.oracle_agrees = "inconclusive".into(),
                    Err(e) => row.oracle_agrees = format!("error: {e}"),
                }
            }
            row
        }
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let mut files: Vec<PathBuf> = if a.suite.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(&a.suite)
            .with_context(|| format!("reading suite directory {}", a.suite.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        v
    } else {
        vec![a.suite.clone()]
    };
    if files.is_empty() {
        bail!("suite {} holds no .json task files", a.suite.display());
    }
    files.sort();

    let rows: Vec<BenchRow> = files.par_iter().map(|p| bench_instance(p, a)).collect();

    let mut out = String::new();
    writeln!(out, "{BENCH_HEADER}")?;
    for r in &rows {
        let cells = [
            &r.instance,
            &r.kind.to_string(),
            &r.verdict,
            &r.class,
            &r.probability,
            &r.violation,
            &r.z,
            &r.complete,
            &r.partitions_solved,
            &r.partitions_total,
            &r.assignments,
            &r.integrations,
            &r.runtime_s,
            &r.oracle_mean,
            &r.oracle_lo99,
            &r.oracle_hi99,
            &r.oracle_agrees,
            &r.error,
        ]
        .map(|c| csv_cell(c));
        writeln!(out, "{}", cells.join(","))?;
    }
    match &a.output {
        Some(path) => {
            fs::write(path, &out)?;
            eprintln!("wrote {} ({} instances)", path.display(), rows.len());
        }
        None => print!("{out}"),
    }
    Ok(())
}
