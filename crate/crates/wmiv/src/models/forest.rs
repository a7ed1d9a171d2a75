//! Forests of per-class density trees used as binary classifiers: the
//! decision compares summed class densities.

use num_traits::Zero;

use crate::logic::Variable;
use crate::models::data::Value;
use crate::models::det::DensityTree;
use crate::models::encoding::{Gate, SystemEncoding};
use crate::rational::Rat;
use crate::weights::Weight;
use crate::{Error, Result};

/// Paired per-class density-tree lists: `pos[i]`/`neg[i]` model the
/// positive- and negative-label densities. The decision is
/// `Σ pos_i(x) ≥ Σ neg_i(x)`, ties toward the positive class.
#[derive(Clone, Debug)]
pub struct DetForestClassifier {
    pos: Vec<DensityTree>,
    neg: Vec<DensityTree>,
}

impl DetForestClassifier {
    pub fn new(pos: Vec<DensityTree>, neg: Vec<DensityTree>) -> Result<Self> {
        if pos.is_empty() {
            return Err(Error::Shape("forest has no trees".into()));
        }
        if pos.len() != neg.len() {
            return Err(Error::Shape(format!(
                "{} positive trees but {} negative trees",
                pos.len(),
                neg.len()
            )));
        }
        let schema = pos[0].columns();
        for t in pos.iter().chain(&neg) {
            if t.columns() != schema {
                return Err(Error::Shape(
                    "forest trees disagree on the feature schema".into(),
                ));
            }
        }
        Ok(DetForestClassifier { pos, neg })
    }

    pub fn tree_count(&self) -> usize {
        self.pos.len()
    }

    pub fn pos(&self) -> &[DensityTree] {
        &self.pos
    }

    pub fn neg(&self) -> &[DensityTree] {
        &self.neg
    }

    /// Native inference: compare summed class densities at a point.
    pub fn classify(&self, row: &[Value]) -> Result<bool> {
        let mut pos_sum = Rat::zero();
        for t in &self.pos {
            pos_sum += t.density_at(row)?;
        }
        let mut neg_sum = Rat::zero();
        for t in &self.neg {
            neg_sum += t.density_at(row)?;
        }
        Ok(pos_sum >= neg_sum)
    }
}

/// Encodes the forest decision over the given input variables. Each
/// tree's density becomes a piecewise-constant gate output; the class is
/// the sign of the density-sum difference.
pub fn encode_rf_classifier(
    rf: &DetForestClassifier,
    inputs: &[Variable],
    prefix: &str,
) -> Result<SystemEncoding> {
    let mut gates = Vec::new();
    let mut score = crate::logic::LinearExpr::zero();
    for (k, tree) in rf.pos().iter().enumerate() {
        let var = Variable::real(format!("{prefix}dp{k}"));
        gates.push(Gate::Tree {
            var: var.clone(),
            tree: tree.term(inputs)?,
        });
        score.add_term(&Rat::from_integer(1.into()), &var);
    }
    for (k, tree) in rf.neg().iter().enumerate() {
        let var = Variable::real(format!("{prefix}dn{k}"));
        gates.push(Gate::Tree {
            var: var.clone(),
            tree: tree.term(inputs)?,
        });
        score.add_term(&Rat::from_integer((-1).into()), &var);
    }
    Ok(SystemEncoding {
        inputs: inputs.to_vec(),
        gates,
        support: crate::logic::Formula::tt(),
        weight: Weight::one(),
        score,
        class: None,
    }
    .with_class_output(&format!("{prefix}c")))
}
