//! File formats: JSON model and task descriptions carrying exact
//! rationals as `p/q` strings, and CSV datasets with a typed header.
//! Every format round-trips exactly; floats in input files are expanded
//! to their exact binary rational values on ingestion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::integration::{Monomial, Polynomial};
use crate::logic::{Formula, Variable};
use crate::models::{
    encode_det_weight, encode_relu_nn, encode_rf_classifier, encode_spn, Activation, Column,
    ColumnType, Dataset, DensityTree, DetForestClassifier, DetNode, Layer, NeuralNet, Spn,
    SpnLeaf, SystemEncoding, Value,
};
use crate::properties::{self, triangular_noise, uniform_box_prior, Norm, PropertyEncoding};
use crate::rational::{from_f64, Rat};
use crate::verifier::{Heuristic, VerificationTask};
use crate::weights::WeightFunction;
use crate::{Error, Result};

// ---------------------------------------------------------------------
// Exact rationals as strings.

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom() == &num::BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, a plain integer, or a decimal/scientific float. Floats
/// are expanded to the exact rational value of their nearest binary
/// double, so re-emission preserves them bit-exactly.
pub fn rat_from_str(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: num::BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
        let q: num::BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
        if q == 0.into() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Rat::new(p, q));
    }
    if let Ok(p) = s.parse::<num::BigInt>() {
        return Ok(Rat::from_integer(p));
    }
    let x: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("`{s}` is not a rational or float")))?;
    from_f64(x).ok_or_else(|| Error::Parse(format!("`{s}` is not finite")))
}

// ---------------------------------------------------------------------
// CSV datasets with a typed header.

fn kind_str(k: ColumnType) -> &'static str {
    match k {
        ColumnType::Real => "real",
        ColumnType::Bool => "bool",
    }
}

/// Emits the dataset as CSV. The header types each column:
/// `name:real,name:bool,…`.
pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    let header: Vec<String> = ds
        .columns()
        .iter()
        .map(|c| format!("{}:{}", c.name, kind_str(c.kind)))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in ds.rows() {
        let cells: Vec<String> = row
            .iter()
            .map(|v| match v {
                Value::Real(r) => rat_to_string(r),
                Value::Bool(b) => b.to_string(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a typed-header CSV. Errors carry the 1-based line and the
/// column name.
pub fn dataset_from_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Schema("empty CSV: no header line".into()))?;
    let columns = header
        .split(',')
        .enumerate()
        .map(|(i, field)| {
            let (name, kind) = field.trim().split_once(':').ok_or_else(|| {
                Error::Schema(format!("header field {} `{field}` is not `name:type`", i + 1))
            })?;
            let kind = match kind.trim() {
                "real" => ColumnType::Real,
                "bool" => ColumnType::Bool,
                other => {
                    return Err(Error::Schema(format!(
                        "header field {} has unknown type `{other}`",
                        i + 1
                    )))
                }
            };
            Ok(Column {
                name: name.trim().to_string(),
                kind,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(Error::Dataset(format!(
                "line {line_no}: {} cells, expected {}",
                cells.len(),
                columns.len()
            )));
        }
        let row = cells
            .iter()
            .zip(&columns)
            .map(|(cell, col)| {
                let cell = cell.trim();
                match col.kind {
                    ColumnType::Real => rat_from_str(cell).map(Value::Real).map_err(|e| {
                        Error::Dataset(format!("line {line_no}, column `{}`: {e}", col.name))
                    }),
                    ColumnType::Bool => match cell {
                        "true" | "1" => Ok(Value::Bool(true)),
                        "false" | "0" => Ok(Value::Bool(false)),
                        other => Err(Error::Dataset(format!(
                            "line {line_no}, column `{}`: `{other}` is not a boolean",
                            col.name
                        ))),
                    },
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Dataset::new(columns, rows)
}

// ---------------------------------------------------------------------
// JSON model files.

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<String>>,
    bias: Vec<String>,
    activation: String,
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    layers: Vec<LayerFile>,
}

/// Emits a network as JSON with exact rational parameters.
pub fn nn_to_json(net: &NeuralNet) -> String {
    let file = NetFile {
        layers: net
            .layers()
            .iter()
            .map(|l| LayerFile {
                weights: l
                    .weights
                    .iter()
                    .map(|row| row.iter().map(rat_to_string).collect())
                    .collect(),
                bias: l.bias.iter().map(rat_to_string).collect(),
                activation: match l.activation {
                    Activation::Relu => "relu".into(),
                    Activation::Identity => "identity".into(),
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("network serializes")
}

pub fn nn_from_json(text: &str) -> Result<NeuralNet> {
    let file: NetFile = serde_json::from_str(text)?;
    let layers = file
        .layers
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let weights = l
                .weights
                .iter()
                .map(|row| row.iter().map(|s| rat_from_str(s)).collect())
                .collect::<Result<Vec<Vec<Rat>>>>()
                .map_err(|e| Error::Schema(format!("layer {i} weights: {e}")))?;
            let bias = l
                .bias
                .iter()
                .map(|s| rat_from_str(s))
                .collect::<Result<Vec<Rat>>>()
                .map_err(|e| Error::Schema(format!("layer {i} bias: {e}")))?;
            let activation = match l.activation.as_str() {
                "relu" => Activation::Relu,
                "identity" => Activation::Identity,
                other => {
                    return Err(Error::Schema(format!(
                        "layer {i}: unknown activation `{other}`"
                    )))
                }
            };
            Layer::new(weights, bias, activation)
        })
        .collect::<Result<Vec<_>>>()?;
    NeuralNet::new(layers)
}

#[derive(Serialize, Deserialize)]
struct ColumnFile {
    name: String,
    kind: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum DetNodeFile {
    Leaf {
        mass: String,
    },
    SplitReal {
        col: usize,
        threshold: String,
        left: Box<DetNodeFile>,
        right: Box<DetNodeFile>,
    },
    SplitBool {
        col: usize,
        left: Box<DetNodeFile>,
        right: Box<DetNodeFile>,
    },
}

#[derive(Serialize, Deserialize)]
struct DetFile {
    columns: Vec<ColumnFile>,
    /// Per column: `[lo, hi]` for reals, `null` for booleans.
    bounds: Vec<Option<(String, String)>>,
    root: DetNodeFile,
}

fn det_node_out(n: &DetNode) -> DetNodeFile {
    match n {
        DetNode::Leaf { mass } => DetNodeFile::Leaf {
            mass: rat_to_string(mass),
        },
        DetNode::SplitReal {
            col,
            threshold,
            left,
            right,
        } => DetNodeFile::SplitReal {
            col: *col,
            threshold: rat_to_string(threshold),
            left: Box::new(det_node_out(left)),
            right: Box::new(det_node_out(right)),
        },
        DetNode::SplitBool { col, left, right } => DetNodeFile::SplitBool {
            col: *col,
            left: Box::new(det_node_out(left)),
            right: Box::new(det_node_out(right)),
        },
    }
}

fn det_node_in(n: &DetNodeFile) -> Result<DetNode> {
    Ok(match n {
        DetNodeFile::Leaf { mass } => DetNode::Leaf {
            mass: rat_from_str(mass)?,
        },
        DetNodeFile::SplitReal {
            col,
            threshold,
            left,
            right,
        } => DetNode::SplitReal {
            col: *col,
            threshold: rat_from_str(threshold)?,
            left: Box::new(det_node_in(left)?),
            right: Box::new(det_node_in(right)?),
        },
        DetNodeFile::SplitBool { col, left, right } => DetNode::SplitBool {
            col: *col,
            left: Box::new(det_node_in(left)?),
            right: Box::new(det_node_in(right)?),
        },
    })
}

fn columns_out(cols: &[Column]) -> Vec<ColumnFile> {
    cols.iter()
        .map(|c| ColumnFile {
            name: c.name.clone(),
            kind: kind_str(c.kind).into(),
        })
        .collect()
}

fn columns_in(cols: &[ColumnFile]) -> Result<Vec<Column>> {
    cols.iter()
        .map(|c| {
            let kind = match c.kind.as_str() {
                "real" => ColumnType::Real,
                "bool" => ColumnType::Bool,
                other => {
                    return Err(Error::Schema(format!(
                        "column `{}` has unknown type `{other}`",
                        c.name
                    )))
                }
            };
            Ok(Column {
                name: c.name.clone(),
                kind,
            })
        })
        .collect()
}

fn det_out(tree: &DensityTree) -> DetFile {
    DetFile {
        columns: columns_out(tree.columns()),
        bounds: tree
            .bounds()
            .iter()
            .map(|b| {
                b.as_ref()
                    .map(|(lo, hi)| (rat_to_string(lo), rat_to_string(hi)))
            })
            .collect(),
        root: det_node_out(tree.root()),
    }
}

fn det_in(file: &DetFile) -> Result<DensityTree> {
    if file.columns.is_empty() {
        return Err(Error::Schema(
            "a density tree file must declare at least one column".into(),
        ));
    }
    let bounds = file
        .bounds
        .iter()
        .map(|b| {
            b.as_ref()
                .map(|(lo, hi)| Ok::<_, Error>((rat_from_str(lo)?, rat_from_str(hi)?)))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    DensityTree::new(columns_in(&file.columns)?, bounds, det_node_in(&file.root)?)
}

/// Emits a density tree as JSON.
pub fn det_to_json(tree: &DensityTree) -> String {
    serde_json::to_string_pretty(&det_out(tree)).expect("tree serializes")
}

pub fn det_from_json(text: &str) -> Result<DensityTree> {
    det_in(&serde_json::from_str(text)?)
}

#[derive(Serialize, Deserialize)]
struct ForestFile {
    pos: Vec<DetFile>,
    neg: Vec<DetFile>,
}

/// Emits a density-forest classifier as JSON.
pub fn forest_to_json(rf: &DetForestClassifier) -> String {
    let file = ForestFile {
        pos: rf.pos().iter().map(det_out).collect(),
        neg: rf.neg().iter().map(det_out).collect(),
    };
    serde_json::to_string_pretty(&file).expect("forest serializes")
}

pub fn forest_from_json(text: &str) -> Result<DetForestClassifier> {
    let file: ForestFile = serde_json::from_str(text)?;
    DetForestClassifier::new(
        file.pos.iter().map(det_in).collect::<Result<_>>()?,
        file.neg.iter().map(det_in).collect::<Result<_>>()?,
    )
}

#[derive(Serialize, Deserialize)]
struct PieceFile {
    lo: String,
    hi: String,
    /// Polynomial in the leaf variable, coefficients by ascending power.
    coeffs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SpnFile {
    Sum { children: Vec<SpnChildFile> },
    Product { children: Vec<SpnFile> },
    Leaf { var: String, pieces: Vec<PieceFile> },
}

#[derive(Serialize, Deserialize)]
struct SpnChildFile {
    weight: String,
    child: SpnFile,
}

fn univariate_coeffs(p: &Polynomial, var: &Variable) -> Result<Vec<String>> {
    let mut coeffs: Vec<Rat> = Vec::new();
    for (m, c) in p.terms() {
        let mut degree = 0u32;
        for (v, e) in m.exponents() {
            if v != var {
                return Err(Error::Schema(format!(
                    "leaf polynomial over `{var}` mentions `{v}`"
                )));
            }
            degree = e;
        }
        if coeffs.len() <= degree as usize {
            coeffs.resize_with(degree as usize + 1, || crate::rational::int(0));
        }
        coeffs[degree as usize] = c.clone();
    }
    if coeffs.is_empty() {
        coeffs.push(crate::rational::int(0));
    }
    Ok(coeffs.iter().map(rat_to_string).collect())
}

fn poly_from_coeffs(coeffs: &[String], var: &Variable) -> Result<Polynomial> {
    let mut p = Polynomial::zero();
    for (k, c) in coeffs.iter().enumerate() {
        p.add_term(Monomial::var_pow(var, k as u32), rat_from_str(c)?);
    }
    Ok(p)
}

fn spn_out(s: &Spn) -> Result<SpnFile> {
    Ok(match s {
        Spn::Sum(parts) => SpnFile::Sum {
            children: parts
                .iter()
                .map(|(w, c)| {
                    Ok(SpnChildFile {
                        weight: rat_to_string(w),
                        child: spn_out(c)?,
                    })
                })
                .collect::<Result<_>>()?,
        },
        Spn::Product(parts) => SpnFile::Product {
            children: parts.iter().map(spn_out).collect::<Result<_>>()?,
        },
        Spn::Leaf(l) => SpnFile::Leaf {
            var: l.var.to_string(),
            pieces: l
                .pieces
                .iter()
                .map(|(lo, hi, p)| {
                    Ok(PieceFile {
                        lo: rat_to_string(lo),
                        hi: rat_to_string(hi),
                        coeffs: univariate_coeffs(p, &l.var)?,
                    })
                })
                .collect::<Result<_>>()?,
        },
    })
}

fn spn_in(file: &SpnFile, pool: &mut VarPool) -> Result<Spn> {
    Ok(match file {
        SpnFile::Sum { children } => Spn::Sum(
            children
                .iter()
                .map(|c| Ok((rat_from_str(&c.weight)?, spn_in(&c.child, pool)?)))
                .collect::<Result<_>>()?,
        ),
        SpnFile::Product { children } => Spn::Product(
            children
                .iter()
                .map(|c| spn_in(c, pool))
                .collect::<Result<_>>()?,
        ),
        SpnFile::Leaf { var, pieces } => {
            let v = pool.real(var);
            Spn::Leaf(SpnLeaf {
                pieces: pieces
                    .iter()
                    .map(|p| {
                        Ok((
                            rat_from_str(&p.lo)?,
                            rat_from_str(&p.hi)?,
                            poly_from_coeffs(&p.coeffs, &v)?,
                        ))
                    })
                    .collect::<Result<_>>()?,
                var: v,
            })
        }
    })
}

/// Emits a sum-product network as JSON.
pub fn spn_to_json(s: &Spn) -> Result<String> {
    Ok(serde_json::to_string_pretty(&spn_out(s)?).expect("SPN serializes"))
}

pub fn spn_from_json(text: &str) -> Result<Spn> {
    spn_from_json_pooled(text, &mut VarPool::new())
}

/// Like [`spn_from_json`], resolving leaf variables in a caller-supplied
/// pool so they unify with other parts of a task.
pub fn spn_from_json_pooled(text: &str, pool: &mut VarPool) -> Result<Spn> {
    let s = spn_in(&serde_json::from_str(text)?, pool)?;
    s.validate()?;
    Ok(s)
}

// ---------------------------------------------------------------------
// Name interning. Variables are identified by creation id, so every
// mention of a name in one task (prior bounds, system inputs, group
// markers, SPN leaves) must resolve to the same `Variable` instance.

/// A per-load table mapping names to variables.
#[derive(Default)]
pub struct VarPool {
    map: std::collections::HashMap<(String, crate::logic::Sort), Variable>,
}

impl VarPool {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&mut self, name: &str, sort: crate::logic::Sort) -> Variable {
        self.map
            .entry((name.to_string(), sort))
            .or_insert_with(|| Variable::fresh(name, sort))
            .clone()
    }

    pub fn real(&mut self, name: &str) -> Variable {
        self.get(name, crate::logic::Sort::Real)
    }

    pub fn bool(&mut self, name: &str) -> Variable {
        self.get(name, crate::logic::Sort::Bool)
    }
}

// ---------------------------------------------------------------------
// Task files.

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TaskFile {
    pub prior: PriorSpec,
    pub systems: Vec<SystemSpec>,
    pub property: PropertySpec,
    #[serde(default)]
    pub verifier: VerifierSpec,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PriorSpec {
    /// A density tree file; variables take the tree's column names.
    Det { path: String },
    /// A sum-product network file.
    Spn { path: String },
    /// A uniform (unnormalized) box prior, inline.
    Uniform { bounds: Vec<BoundSpec> },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct BoundSpec {
    pub var: String,
    pub lo: String,
    pub hi: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemSpec {
    Nn { path: String, inputs: Vec<String> },
    Forest { path: String, inputs: Vec<String> },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropertySpec {
    LocalRobustness {
        x0: Vec<String>,
        class0: bool,
        eps: String,
    },
    RegressorRobustness {
        x0: Vec<String>,
        y0: String,
        eps: String,
        delta: String,
    },
    Equivalence {
        #[serde(default)]
        x0: Option<Vec<String>>,
        #[serde(default)]
        eps: Option<String>,
    },
    IndividualFairness {
        eps: String,
    },
    Monotonicity {
        feature: usize,
    },
    NoiseRobustness {
        noise: Vec<NoiseSpec>,
    },
    DemographicParity {
        /// Boolean prior variable marking the protected group.
        minority: String,
    },
}

/// Additive triangular noise on one input feature.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct NoiseSpec {
    pub feature: usize,
    pub lo: String,
    pub mode: String,
    pub hi: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicSpec {
    None,
    Random,
    Sampling,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    L1,
    Linf,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct VerifierSpec {
    pub k: String,
    pub partitions: usize,
    pub heuristic: HeuristicSpec,
    pub seed: u64,
    pub samples: usize,
    pub bp: bool,
    pub norm: NormSpec,
}

impl Default for VerifierSpec {
    fn default() -> Self {
        VerifierSpec {
            k: "1/2".into(),
            partitions: 16,
            heuristic: HeuristicSpec::Sampling,
            seed: 0,
            samples: 1000,
            bp: true,
            norm: NormSpec::Linf,
        }
    }
}

/// A task ready to run: either a threshold query for the verification
/// loop, or a demographic-parity ratio computation.
pub enum LoadedTask {
    Threshold(VerificationTask),
    Parity {
        system: SystemEncoding,
        minority: Formula,
        prior: WeightFunction,
        k: Rat,
    },
}

fn rats_from(strings: &[String], what: &str) -> Result<Vec<Rat>> {
    strings
        .iter()
        .map(|s| rat_from_str(s).map_err(|e| Error::Schema(format!("{what}: {e}"))))
        .collect()
}

fn load_prior(
    spec: &PriorSpec,
    pool: &mut VarPool,
    read: &mut dyn FnMut(&str) -> Result<String>,
) -> Result<WeightFunction> {
    match spec {
        PriorSpec::Det { path } => {
            let tree = det_from_json(&read(path)?)?;
            let vars: Vec<Variable> = tree
                .columns()
                .iter()
                .map(|c| match c.kind {
                    ColumnType::Real => pool.real(&c.name),
                    ColumnType::Bool => pool.bool(&c.name),
                })
                .collect();
            encode_det_weight(&tree, &vars)
        }
        PriorSpec::Spn { path } => encode_spn(&spn_from_json_pooled(&read(path)?, pool)?),
        PriorSpec::Uniform { bounds } => {
            let triples = bounds
                .iter()
                .map(|b| {
                    Ok((
                        pool.real(&b.var),
                        rat_from_str(&b.lo)?,
                        rat_from_str(&b.hi)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            uniform_box_prior(&triples)
        }
    }
}

fn load_system(
    index: usize,
    spec: &SystemSpec,
    classify: bool,
    pool: &mut VarPool,
    read: &mut dyn FnMut(&str) -> Result<String>,
) -> Result<SystemEncoding> {
    match spec {
        SystemSpec::Nn { path, inputs } => {
            let net = nn_from_json(&read(path)?)?;
            let vars: Vec<Variable> = inputs.iter().map(|n| pool.real(n)).collect();
            let sys = encode_relu_nn(&net, &vars, &format!("s{index}!"))?;
            Ok(if classify {
                sys.with_class_output(&format!("s{index}c"))
            } else {
                sys
            })
        }
        SystemSpec::Forest { path, inputs } => {
            let rf = forest_from_json(&read(path)?)?;
            let trees = rf.pos().iter().chain(rf.neg());
            let columns = trees
                .clone()
                .next()
                .ok_or_else(|| Error::Schema("forest has no trees".into()))?
                .columns();
            if inputs.len() != columns.len() {
                return Err(Error::Schema(format!(
                    "system {index}: {} inputs for a forest over {} columns",
                    inputs.len(),
                    columns.len()
                )));
            }
            let vars: Vec<Variable> = inputs
                .iter()
                .zip(columns)
                .map(|(name, c)| match c.kind {
                    ColumnType::Real => pool.real(name),
                    ColumnType::Bool => pool.bool(name),
                })
                .collect();
            encode_rf_classifier(&rf, &vars, &format!("s{index}!"))
        }
    }
}

fn the_system(systems: &[SystemEncoding], kind: &str) -> Result<SystemEncoding> {
    match systems {
        [one] => Ok(one.clone()),
        _ => Err(Error::Schema(format!(
            "property `{kind}` needs exactly one system, got {}",
            systems.len()
        ))),
    }
}

/// Builds a runnable task from a parsed task file; `read` resolves
/// referenced model files (by path) to their contents.
pub fn build_task(
    file: &TaskFile,
    read: &mut dyn FnMut(&str) -> Result<String>,
) -> Result<LoadedTask> {
    let cfg = &file.verifier;
    let norm = match cfg.norm {
        NormSpec::L1 => Norm::L1,
        NormSpec::Linf => Norm::Linf,
    };
    let k = rat_from_str(&cfg.k).map_err(|e| Error::Schema(format!("verifier.k: {e}")))?;
    let mut pool = VarPool::new();
    let prior = load_prior(&file.prior, &mut pool, read)?;
    let classify = !matches!(
        file.property,
        PropertySpec::RegressorRobustness { .. } | PropertySpec::Monotonicity { .. }
    );
    let systems = file
        .systems
        .iter()
        .enumerate()
        .map(|(i, s)| load_system(i, s, classify, &mut pool, read))
        .collect::<Result<Vec<_>>>()?;

    let property: PropertyEncoding = match &file.property {
        PropertySpec::LocalRobustness { x0, class0, eps } => properties::local_robustness(
            &the_system(&systems, "local_robustness")?,
            &rats_from(x0, "x0")?,
            *class0,
            &rat_from_str(eps).map_err(|e| Error::Schema(format!("eps: {e}")))?,
            &prior,
            norm,
        )?,
        PropertySpec::RegressorRobustness { x0, y0, eps, delta } => {
            properties::regressor_robustness(
                &the_system(&systems, "regressor_robustness")?,
                &rats_from(x0, "x0")?,
                &rat_from_str(y0).map_err(|e| Error::Schema(format!("y0: {e}")))?,
                &rat_from_str(eps).map_err(|e| Error::Schema(format!("eps: {e}")))?,
                &rat_from_str(delta).map_err(|e| Error::Schema(format!("delta: {e}")))?,
                &prior,
                norm,
            )?
        }
        PropertySpec::Equivalence { x0, eps } => {
            let [a, b] = systems.as_slice() else {
                return Err(Error::Schema(format!(
                    "property `equivalence` needs exactly two systems, got {}",
                    systems.len()
                )));
            };
            let local = match (x0, eps) {
                (Some(x0), Some(eps)) => Some((
                    rats_from(x0, "x0")?,
                    rat_from_str(eps).map_err(|e| Error::Schema(format!("eps: {e}")))?,
                )),
                (None, None) => None,
                _ => {
                    return Err(Error::Schema(
                        "equivalence: give both `x0` and `eps`, or neither".into(),
                    ))
                }
            };
            let local_ref = local.as_ref().map(|(x, e)| (x.as_slice(), e));
            properties::equivalence(a, b, &prior, local_ref, norm)?
        }
        PropertySpec::IndividualFairness { eps } => properties::individual_fairness(
            &the_system(&systems, "individual_fairness")?,
            &prior,
            &rat_from_str(eps).map_err(|e| Error::Schema(format!("eps: {e}")))?,
            norm,
        )?,
        PropertySpec::Monotonicity { feature } => properties::monotonicity(
            &the_system(&systems, "monotonicity")?,
            *feature,
            &prior,
        )?,
        PropertySpec::NoiseRobustness { noise } => {
            if noise.is_empty() {
                return Err(Error::Schema("noise_robustness: empty noise list".into()));
            }
            let mut noised = Vec::new();
            let mut parts = Vec::new();
            for n in noise {
                let var = pool.real(&format!("n{}", n.feature));
                parts.push(triangular_noise(
                    &var,
                    &rat_from_str(&n.lo).map_err(|e| Error::Schema(format!("lo: {e}")))?,
                    &rat_from_str(&n.mode).map_err(|e| Error::Schema(format!("mode: {e}")))?,
                    &rat_from_str(&n.hi).map_err(|e| Error::Schema(format!("hi: {e}")))?,
                )?);
                noised.push((n.feature, var));
            }
            properties::noise_robustness(
                &the_system(&systems, "noise_robustness")?,
                &prior,
                &WeightFunction::product_of(parts),
                &noised,
            )?
        }
        PropertySpec::DemographicParity { minority } => {
            return Ok(LoadedTask::Parity {
                system: the_system(&systems, "demographic_parity")?,
                minority: Formula::prop(&pool.bool(minority)),
                prior,
                k,
            });
        }
    };

    let mut task = VerificationTask::new(property, k)?;
    task.n_partitions = cfg.partitions;
    task.bound_propagation = cfg.bp;
    task.heuristic = match cfg.heuristic {
        HeuristicSpec::None => Heuristic::None,
        HeuristicSpec::Random => Heuristic::Random { seed: cfg.seed },
        HeuristicSpec::Sampling => Heuristic::Sampling {
            seed: cfg.seed,
            samples: cfg.samples,
        },
    };
    Ok(LoadedTask::Threshold(task))
}

/// Parses a task file and loads its referenced models from disk,
/// relative to the task file's directory.
pub fn load_task(path: &Path) -> Result<LoadedTask> {
    let text = std::fs::read_to_string(path)?;
    let file: TaskFile = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_owned();
    build_task(&file, &mut |rel| {
        Ok(std::fs::read_to_string(base.join(rel))?)
    })
}

/// Emits a task file as JSON.
pub fn task_to_json(file: &TaskFile) -> String {
    serde_json::to_string_pretty(file).expect("task serializes")
}

pub fn task_from_json(text: &str) -> Result<TaskFile> {
    Ok(serde_json::from_str(text)?)
}
