//! Ensembles of encoded systems over shared inputs.

use crate::logic::{Formula, LinearExpr, Variable};
use crate::models::encoding::{Gate, SystemEncoding};
use crate::rational::{rat, Rat};
use crate::weights::Weight;
use crate::{Error, Result};

/// How member outputs are combined.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Aggregation {
    /// Class vote: true iff at least half the members say true (ties
    /// toward the positive class, like the forest rule).
    Majority,
    /// Mean of the member scores.
    Average,
}

/// Combines encodings sharing the same inputs into one system. Majority
/// needs classifier members and produces a classifier; average combines
/// scores and produces a score-only encoding.
pub fn encode_ensemble(
    members: &[SystemEncoding],
    aggregation: Aggregation,
    prefix: &str,
) -> Result<SystemEncoding> {
    let Some(first) = members.first() else {
        return Err(Error::Shape("ensemble has no members".into()));
    };
    for m in members {
        if m.inputs != first.inputs {
            return Err(Error::Shape(
                "ensemble members must share the same input variables".into(),
            ));
        }
    }

    let mut gates: Vec<Gate> = Vec::new();
    let mut supports = Vec::new();
    let mut weights = Vec::new();
    for m in members {
        gates.extend(m.gates.iter().cloned());
        supports.push(m.support.clone());
        weights.push(m.weight.clone());
    }
    let k = members.len();

    let base = SystemEncoding {
        inputs: first.inputs.clone(),
        gates,
        support: Formula::and(supports),
        weight: Weight::product(weights),
        score: LinearExpr::zero(),
        class: None,
    };

    match aggregation {
        Aggregation::Average => {
            let mut score = LinearExpr::zero();
            for m in members {
                score = score + m.score.clone();
            }
            Ok(SystemEncoding {
                score: score * rat(1, k as i64),
                ..base
            })
        }
        Aggregation::Majority => {
            let mut enc = base;
            // Vote count as a sum of 0/1 gate outputs, thresholded at
            // half the member count.
            let mut count = LinearExpr::constant(-rat(k as i64, 2));
            for (i, m) in members.iter().enumerate() {
                let c = m.class_var()?;
                let b = Variable::real(format!("{prefix}vote{i}"));
                enc.gates.push(Gate::Guarded {
                    cond: Formula::prop(c),
                    var: b.clone(),
                    then: LinearExpr::constant(Rat::from_integer(1.into())),
                    els: LinearExpr::constant(Rat::from_integer(0.into())),
                });
                count.add_term(&Rat::from_integer(1.into()), &b);
            }
            enc.score = count;
            Ok(enc.with_class_output(&format!("{prefix}c")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Valuation;
    use crate::models::nn::{encode_relu_nn, Activation, Layer, NeuralNet};
    use crate::rational::int;

    /// Linear classifier c ⟺ w·x + b ≥ 0 as a 1-layer identity net.
    fn linear_classifier(w: &[Rat], b: Rat, inputs: &[Variable], tag: &str) -> SystemEncoding {
        let net = NeuralNet::new(vec![
            Layer::new(vec![w.to_vec()], vec![b], Activation::Identity).unwrap()
        ])
        .unwrap();
        encode_relu_nn(&net, inputs, &format!("{tag}!"))
            .unwrap()
            .with_class_output(&format!("{tag}c"))
    }

    #[test]
    fn singleton_ensemble_matches_its_member() {
        let xs = [Variable::real("x0"), Variable::real("x1")];
        let member = linear_classifier(&[int(1), int(-1)], int(0), &xs, "m");
        let ens = encode_ensemble(std::slice::from_ref(&member), Aggregation::Majority, "e!")
            .unwrap();
        for (a, b) in [(int(1), int(0)), (int(0), int(1)), (int(2), int(2))] {
            let p = Valuation::new().with_real(&xs[0], a).with_real(&xs[1], b);
            assert_eq!(ens.class_at(&p).unwrap(), member.class_at(&p).unwrap());
        }
    }

    #[test]
    fn majority_of_three_thresholds_matches_simulation() {
        let xs = [Variable::real("x0"), Variable::real("x1")];
        let members = [
            linear_classifier(&[int(1), int(0)], int(0), &xs, "a"), // x0 ≥ 0
            linear_classifier(&[int(0), int(1)], int(0), &xs, "b"), // x1 ≥ 0
            linear_classifier(&[int(1), int(1)], int(0), &xs, "c"), // x0 + x1 ≥ 0
        ];
        let ens = encode_ensemble(&members, Aggregation::Majority, "e!").unwrap();
        let probes = [
            (int(1), int(-2)),  // votes: t, f, f -> false
            (int(1), int(-1)),  // votes: t, f, t -> true
            (int(-3), int(5)),  // votes: f, t, t -> true
            (int(-1), int(-1)), // votes: f, f, f -> false
        ];
        for (a, b) in probes {
            let p = Valuation::new()
                .with_real(&xs[0], a.clone())
                .with_real(&xs[1], b.clone());
            let votes = members
                .iter()
                .filter(|m| m.class_at(&p).unwrap())
                .count();
            assert_eq!(ens.class_at(&p).unwrap(), 2 * votes >= members.len());
        }
    }

    #[test]
    fn average_combines_scores_linearly() {
        let xs = [Variable::real("x0"), Variable::real("x1")];
        let members = [
            linear_classifier(&[int(2), int(0)], int(1), &xs, "a"),
            linear_classifier(&[int(0), int(4)], int(-1), &xs, "b"),
        ];
        let ens = encode_ensemble(&members, Aggregation::Average, "e!").unwrap();
        let p = Valuation::new()
            .with_real(&xs[0], int(3))
            .with_real(&xs[1], int(1));
        // Scores 7 and 3: average 5.
        assert_eq!(ens.score_at(&p).unwrap(), int(5));
        assert!(ens.class.is_none());
    }

    #[test]
    fn majority_requires_classifier_members() {
        let xs = [Variable::real("x0")];
        let net = NeuralNet::new(vec![
            Layer::new(vec![vec![int(1)]], vec![int(0)], Activation::Identity).unwrap()
        ])
        .unwrap();
        let score_only = encode_relu_nn(&net, &xs, "s!").unwrap();
        assert!(encode_ensemble(&[score_only], Aggregation::Majority, "e!").is_err());
        assert!(encode_ensemble(&[], Aggregation::Average, "e!").is_err());
    }
}
