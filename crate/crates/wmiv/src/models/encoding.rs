//! Symbolic encodings of ML systems: a support formula defining fresh
//! variables from the inputs, a weight term, and output symbols.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{Atom, Formula, LinearExpr, LraAtom, Valuation, Variable};
use crate::rational::Rat;
use crate::weights::{Weight, WeightFunction};
use crate::{Error, Result};

/// A piecewise-constant tree over literal split conditions, used for
/// density-tree outputs inside classifier encodings.
#[derive(Clone, Debug)]
pub enum TreeTerm {
    /// Constant output on the cell selected by the path.
    Leaf(Rat),
    /// Binary split: `cond` is a literal (one linear atom or one boolean
    /// proposition, possibly negated).
    Split {
        cond: Formula,
        then: Box<TreeTerm>,
        els: Box<TreeTerm>,
    },
}

impl TreeTerm {
    /// The defining formula for `var = tree(x)`: nested guarded equalities.
    fn formula(&self, var: &Variable) -> Formula {
        match self {
            TreeTerm::Leaf(v) => {
                Formula::eq_expr(&LinearExpr::var(var), &LinearExpr::constant(v.clone()))
            }
            TreeTerm::Split { cond, then, els } => Formula::and([
                Formula::implies(cond.clone(), then.formula(var)),
                Formula::implies(Formula::not(cond.clone()), els.formula(var)),
            ]),
        }
    }

    /// Forward evaluation at a point.
    fn eval(&self, point: &Valuation) -> Option<Rat> {
        match self {
            TreeTerm::Leaf(v) => Some(v.clone()),
            TreeTerm::Split { cond, then, els } => {
                if cond.eval_point(point)? {
                    then.eval(point)
                } else {
                    els.eval(point)
                }
            }
        }
    }

    fn collect_lra_conditions(&self, out: &mut Vec<LraAtom>) {
        if let TreeTerm::Split { cond, then, els } = self {
            if let Some(a) = single_lra_atom(cond) {
                out.push(a.clone());
            }
            then.collect_lra_conditions(out);
            els.collect_lra_conditions(out);
        }
    }

    fn rename(&self, map: &BTreeMap<Variable, Variable>) -> TreeTerm {
        match self {
            TreeTerm::Leaf(v) => TreeTerm::Leaf(v.clone()),
            TreeTerm::Split { cond, then, els } => TreeTerm::Split {
                cond: cond.rename(map),
                then: Box::new(then.rename(map)),
                els: Box::new(els.rename(map)),
            },
        }
    }
}

/// One defining constraint of an encoding. Gates appear in dependency
/// order: each gate's right-hand side mentions only inputs and variables
/// defined by earlier gates.
#[derive(Clone, Debug)]
pub enum Gate {
    /// `var = expr`.
    Affine { var: Variable, expr: LinearExpr },
    /// `var = ite(cond; then; els)` where `cond` is a literal.
    Guarded {
        cond: Formula,
        var: Variable,
        then: LinearExpr,
        els: LinearExpr,
    },
    /// `var = tree(x)`: a piecewise-constant tree output.
    Tree { var: Variable, tree: TreeTerm },
    /// `var ⟺ expr ≥ 0`: a boolean output definition.
    Threshold { var: Variable, expr: LinearExpr },
}

impl Gate {
    /// The gate's defining formula.
    pub fn formula(&self) -> Formula {
        match self {
            Gate::Affine { var, expr } => Formula::eq_expr(&LinearExpr::var(var), expr),
            Gate::Guarded {
                cond,
                var,
                then,
                els,
            } => {
                let v = LinearExpr::var(var);
                Formula::and([
                    Formula::implies(cond.clone(), Formula::eq_expr(&v, then)),
                    Formula::implies(Formula::not(cond.clone()), Formula::eq_expr(&v, els)),
                ])
            }
            Gate::Tree { var, tree } => tree.formula(var),
            Gate::Threshold { var, expr } => Formula::iff(
                Formula::prop(var),
                Formula::ge(expr, &LinearExpr::constant(Rat::from_integer(0.into()))),
            ),
        }
    }

    /// The variable this gate defines.
    pub fn defined_var(&self) -> &Variable {
        match self {
            Gate::Affine { var, .. }
            | Gate::Guarded { var, .. }
            | Gate::Tree { var, .. }
            | Gate::Threshold { var, .. } => var,
        }
    }

    fn rename(&self, map: &BTreeMap<Variable, Variable>) -> Gate {
        let ren = |v: &Variable| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Gate::Affine { var, expr } => Gate::Affine {
                var: ren(var),
                expr: expr.rename(map),
            },
            Gate::Guarded {
                cond,
                var,
                then,
                els,
            } => Gate::Guarded {
                cond: cond.rename(map),
                var: ren(var),
                then: then.rename(map),
                els: els.rename(map),
            },
            Gate::Tree { var, tree } => Gate::Tree {
                var: ren(var),
                tree: tree.rename(map),
            },
            Gate::Threshold { var, expr } => Gate::Threshold {
                var: ren(var),
                expr: expr.rename(map),
            },
        }
    }
}

/// If `f` is a literal over a single linear atom (the atom or its
/// negation), that atom.
fn single_lra_atom(f: &Formula) -> Option<&LraAtom> {
    use crate::logic::FormulaNode;
    let inner = match f.view() {
        FormulaNode::Not(g) => g.view(),
        node => node,
    };
    match inner {
        FormulaNode::Atom(Atom::Lra(a)) => Some(a),
        _ => None,
    }
}

/// A symbolic system: support χ_S defining the gate variables from the
/// inputs, a weight term w_S, a real score output and, for classifiers,
/// a boolean class output.
#[derive(Clone, Debug)]
pub struct SystemEncoding {
    /// Input variables, in feature order.
    pub inputs: Vec<Variable>,
    /// Defining constraints in dependency order.
    pub gates: Vec<Gate>,
    /// Extra support conjuncts beyond the gate formulas (usually ⊤).
    pub support: Formula,
    /// The system weight w_S (usually 1: behavior lives in the support).
    pub weight: Weight,
    /// Real-valued output term f(x).
    pub score: LinearExpr,
    /// Boolean output c(x), if this is a classifier encoding.
    pub class: Option<Variable>,
}

impl SystemEncoding {
    /// The full support formula χ_S.
    pub fn chi(&self) -> Formula {
        let parts = std::iter::once(self.support.clone()).chain(self.gates.iter().map(Gate::formula));
        Formula::and(parts.collect::<Vec<_>>())
    }

    /// χ_S paired with w_S.
    pub fn weight_function(&self) -> WeightFunction {
        WeightFunction::new(self.weight.clone(), self.chi())
    }

    /// Variables defined by the gates, in dependency order.
    pub fn defined_vars(&self) -> Vec<Variable> {
        self.gates.iter().map(|g| g.defined_var().clone()).collect()
    }

    /// The class output, or an error for score-only encodings.
    pub fn class_var(&self) -> Result<&Variable> {
        self.class
            .as_ref()
            .ok_or_else(|| Error::Shape("encoding has no boolean class output".into()))
    }

    /// Adds a boolean class output `c ⟺ score ≥ 0`.
    pub fn with_class_output(mut self, name: &str) -> SystemEncoding {
        let c = Variable::bool(name);
        self.gates.push(Gate::Threshold {
            var: c.clone(),
            expr: self.score.clone(),
        });
        self.class = Some(c);
        self
    }

    /// Single-linear-atom ite/guard conditions appearing in χ_S, in gate
    /// order with duplicates removed: the candidate pool for partitioned
    /// verification.
    pub fn partition_conditions(&self) -> Vec<LraAtom> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for g in &self.gates {
            let mut found = Vec::new();
            match g {
                Gate::Guarded { cond, .. } => {
                    if let Some(a) = single_lra_atom(cond) {
                        found.push(a.clone());
                    }
                }
                Gate::Tree { tree, .. } => tree.collect_lra_conditions(&mut found),
                Gate::Affine { .. } | Gate::Threshold { .. } => {}
            }
            for a in found {
                if seen.insert(a.clone()) {
                    out.push(a);
                }
            }
        }
        out
    }

    /// All variables of the encoding.
    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut vars: BTreeSet<Variable> = self.inputs.iter().cloned().collect();
        vars.extend(self.chi().variables());
        vars.extend(self.score.variables().cloned());
        vars.extend(self.class.iter().cloned());
        vars
    }

    /// Forward evaluation: extends a valuation of the inputs with the
    /// value of every gate variable, exactly as χ_S forces them.
    pub fn extend_valuation(&self, point: &mut Valuation) -> Result<()> {
        for g in &self.gates {
            match g {
                Gate::Affine { var, expr } => {
                    let v = expr.eval(&point.reals).ok_or_else(|| missing_input(var))?;
                    point.set_real(var, v);
                }
                Gate::Guarded {
                    cond,
                    var,
                    then,
                    els,
                } => {
                    let c = cond.eval_point(point).ok_or_else(|| missing_input(var))?;
                    let e = if c { then } else { els };
                    let v = e.eval(&point.reals).ok_or_else(|| missing_input(var))?;
                    point.set_real(var, v);
                }
                Gate::Tree { var, tree } => {
                    let v = tree.eval(point).ok_or_else(|| missing_input(var))?;
                    point.set_real(var, v);
                }
                Gate::Threshold { var, expr } => {
                    let v = expr.eval(&point.reals).ok_or_else(|| missing_input(var))?;
                    point.set_bool(var, v >= Rat::from_integer(0.into()));
                }
            }
        }
        Ok(())
    }

    /// The score value at an input point.
    pub fn score_at(&self, point: &Valuation) -> Result<Rat> {
        let mut full = point.clone();
        self.extend_valuation(&mut full)?;
        self.score
            .eval(&full.reals)
            .ok_or_else(|| Error::Shape("score mentions an undefined variable".into()))
    }

    /// The class value at an input point (classifier encodings only).
    pub fn class_at(&self, point: &Valuation) -> Result<bool> {
        let c = self.class_var()?.clone();
        let mut full = point.clone();
        self.extend_valuation(&mut full)?;
        full.bools
            .get(&c)
            .copied()
            .ok_or_else(|| Error::Shape("class variable not defined by any gate".into()))
    }

    /// A structurally identical copy over fresh variables (inputs
    /// included), plus the renaming map used. The copy shares nothing
    /// with `self`, so both can appear in one formula: the basis for
    /// self-composed properties.
    pub fn fresh_copy(&self) -> (SystemEncoding, BTreeMap<Variable, Variable>) {
        let vars = self.variables();
        let map: BTreeMap<Variable, Variable> =
            vars.iter().map(|v| (v.clone(), v.primed())).collect();
        let copy = SystemEncoding {
            inputs: self.inputs.iter().map(|v| map[v].clone()).collect(),
            gates: self.gates.iter().map(|g| g.rename(&map)).collect(),
            support: self.support.rename(&map),
            weight: self.weight.rename(&map),
            score: self.score.rename(&map),
            class: self.class.as_ref().map(|c| map[c].clone()),
        };
        (copy, map)
    }
}

fn missing_input(var: &Variable) -> Error {
    Error::Shape(format!(
        "cannot evaluate gate for `{var}`: an input it depends on has no value"
    ))
}
