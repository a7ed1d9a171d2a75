//! Density-estimation trees: greedy training on typed tabular data and
//! the piecewise-constant density weight they encode.

use std::collections::BTreeSet;

use num::BigInt;
use num_traits::{One, Zero};

use crate::logic::{Formula, Sort, Variable};
use crate::models::data::{ColumnType, Column, Dataset, Value};
use crate::models::encoding::TreeTerm;
use crate::rational::{rat, Rat};
use crate::weights::{Weight, WeightFunction};
use crate::{Error, Result};

/// A node of a density tree. Real splits send `value ≤ threshold` left;
/// boolean splits send `false` left and `true` right.
#[derive(Clone, Debug)]
pub enum DetNode {
    Leaf {
        mass: Rat,
    },
    SplitReal {
        col: usize,
        threshold: Rat,
        left: Box<DetNode>,
        right: Box<DetNode>,
    },
    SplitBool {
        col: usize,
        left: Box<DetNode>,
        right: Box<DetNode>,
    },
}

/// A density-estimation tree over a typed feature schema. Leaves store
/// probability mass; the encoded weight divides each mass by its cell
/// volume, so the weight is a density integrating to exactly 1 over the
/// bounding box.
#[derive(Clone, Debug)]
pub struct DensityTree {
    columns: Vec<Column>,
    /// Per-column root bounds; `Some` exactly for real columns.
    bounds: Vec<Option<(Rat, Rat)>>,
    root: DetNode,
}

impl DensityTree {
    /// Validates schema/bounds/tree consistency and that leaf masses sum
    /// to 1.
    pub fn new(
        columns: Vec<Column>,
        bounds: Vec<Option<(Rat, Rat)>>,
        root: DetNode,
    ) -> Result<Self> {
        if bounds.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} bound entries for {} columns",
                bounds.len(),
                columns.len()
            )));
        }
        for (c, b) in columns.iter().zip(&bounds) {
            match (c.kind, b) {
                (ColumnType::Real, Some((lo, hi))) => {
                    if lo > hi {
                        return Err(Error::Shape(format!(
                            "column `{}` has an empty bounding interval",
                            c.name
                        )));
                    }
                }
                (ColumnType::Bool, None) => {}
                _ => {
                    return Err(Error::Shape(format!(
                        "column `{}`: bounds present iff the column is real",
                        c.name
                    )))
                }
            }
        }
        check_node(&root, &columns)?;
        let tree = DensityTree {
            columns,
            bounds,
            root,
        };
        if tree.total_mass() != Rat::one() {
            return Err(Error::Shape("leaf masses do not sum to 1".into()));
        }
        Ok(tree)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn bounds(&self) -> &[Option<(Rat, Rat)>] {
        &self.bounds
    }

    pub fn root(&self) -> &DetNode {
        &self.root
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &DetNode) -> usize {
            match n {
                DetNode::Leaf { .. } => 1,
                DetNode::SplitReal { left, right, .. } | DetNode::SplitBool { left, right, .. } => {
                    count(left) + count(right)
                }
            }
        }
        count(&self.root)
    }

    pub fn total_mass(&self) -> Rat {
        fn sum(n: &DetNode) -> Rat {
            match n {
                DetNode::Leaf { mass } => mass.clone(),
                DetNode::SplitReal { left, right, .. } | DetNode::SplitBool { left, right, .. } => {
                    sum(left) + sum(right)
                }
            }
        }
        sum(&self.root)
    }

    /// The density at a point: walk the splits, then divide the leaf mass
    /// by its cell volume. Points outside the bounding box take the value
    /// of the cell their path selects, matching the encoded weight term.
    pub fn density_at(&self, row: &[Value]) -> Result<Rat> {
        if row.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "point has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (v, c) in row.iter().zip(&self.columns) {
            if v.kind() != c.kind {
                return Err(Error::Shape(format!(
                    "point value for `{}` has the wrong type",
                    c.name
                )));
            }
        }
        let mut cell = Cell::root(&self.columns, &self.bounds);
        let mut node = &self.root;
        loop {
            match node {
                DetNode::Leaf { mass } => {
                    let vol = cell.volume()?;
                    return Ok(mass / vol);
                }
                DetNode::SplitReal {
                    col,
                    threshold,
                    left,
                    right,
                } => {
                    let v = row[*col].as_real().expect("checked real");
                    if v <= threshold {
                        cell.cut_real_left(*col, threshold);
                        node = left;
                    } else {
                        cell.cut_real_right(*col, threshold);
                        node = right;
                    }
                }
                DetNode::SplitBool { col, left, right } => {
                    let v = row[*col].as_bool().expect("checked bool");
                    cell.fix_bool(*col);
                    node = if v { right } else { left };
                }
            }
        }
    }

    /// The tree as a piecewise-constant term over the given variables,
    /// with leaf densities as constants.
    pub fn term(&self, vars: &[Variable]) -> Result<TreeTerm> {
        self.check_vars(vars)?;
        let cell = Cell::root(&self.columns, &self.bounds);
        term_of(&self.root, &cell, vars)
    }

    /// The bounding-box support formula over the given variables.
    pub fn support(&self, vars: &[Variable]) -> Result<Formula> {
        self.check_vars(vars)?;
        let mut parts = Vec::new();
        for (i, b) in self.bounds.iter().enumerate() {
            if let Some((lo, hi)) = b {
                parts.push(Formula::interval(&vars[i], lo, hi)?);
            }
        }
        Ok(Formula::and(parts))
    }

    fn check_vars(&self, vars: &[Variable]) -> Result<()> {
        if vars.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "{} variables for {} columns",
                vars.len(),
                self.columns.len()
            )));
        }
        for (v, c) in vars.iter().zip(&self.columns) {
            let want = match c.kind {
                ColumnType::Real => Sort::Real,
                ColumnType::Bool => Sort::Bool,
            };
            if v.sort() != want {
                return Err(Error::Shape(format!(
                    "variable `{v}` has the wrong sort for column `{}`",
                    c.name
                )));
            }
        }
        Ok(())
    }
}

fn check_node(node: &DetNode, columns: &[Column]) -> Result<()> {
    match node {
        DetNode::Leaf { mass } => {
            if mass < &Rat::zero() {
                return Err(Error::Shape("negative leaf mass".into()));
            }
            Ok(())
        }
        DetNode::SplitReal {
            col, left, right, ..
        } => {
            let c = columns
                .get(*col)
                .ok_or_else(|| Error::Shape(format!("split column {col} out of range")))?;
            if c.kind != ColumnType::Real {
                return Err(Error::Shape(format!(
                    "threshold split on boolean column `{}`",
                    c.name
                )));
            }
            check_node(left, columns)?;
            check_node(right, columns)
        }
        DetNode::SplitBool { col, left, right } => {
            let c = columns
                .get(*col)
                .ok_or_else(|| Error::Shape(format!("split column {col} out of range")))?;
            if c.kind != ColumnType::Bool {
                return Err(Error::Shape(format!(
                    "boolean split on real column `{}`",
                    c.name
                )));
            }
            check_node(left, columns)?;
            check_node(right, columns)
        }
    }
}

/// A cell of the partition: the root box cut by the path taken so far.
#[derive(Clone)]
struct Cell {
    reals: Vec<Option<(Rat, Rat)>>,
    free_bools: usize,
    col_kinds: Vec<ColumnType>,
    names: Vec<String>,
}

impl Cell {
    fn root(columns: &[Column], bounds: &[Option<(Rat, Rat)>]) -> Cell {
        Cell {
            reals: bounds.to_vec(),
            free_bools: columns.iter().filter(|c| c.kind == ColumnType::Bool).count(),
            col_kinds: columns.iter().map(|c| c.kind).collect(),
            names: columns.iter().map(|c| c.name.clone()).collect(),
        }
    }

    fn cut_real_left(&mut self, col: usize, t: &Rat) {
        if let Some((_, hi)) = &mut self.reals[col] {
            *hi = t.clone();
        }
    }

    fn cut_real_right(&mut self, col: usize, t: &Rat) {
        if let Some((lo, _)) = &mut self.reals[col] {
            *lo = t.clone();
        }
    }

    fn fix_bool(&mut self, _col: usize) {
        self.free_bools -= 1;
    }

    /// Cell volume: product of real widths times 2 per free boolean.
    fn volume(&self) -> Result<Rat> {
        let mut vol = Rat::one();
        for (i, r) in self.reals.iter().enumerate() {
            if let Some((lo, hi)) = r {
                let width = hi - lo;
                if width.is_zero() {
                    return Err(Error::ZeroVolumeLeaf {
                        var: self.names[i].clone(),
                    });
                }
                vol *= width;
            }
        }
        for _ in 0..self.free_bools {
            vol *= rat(2, 1);
        }
        Ok(vol)
    }
}

fn term_of(node: &DetNode, cell: &Cell, vars: &[Variable]) -> Result<TreeTerm> {
    match node {
        DetNode::Leaf { mass } => Ok(TreeTerm::Leaf(mass / cell.volume()?)),
        DetNode::SplitReal {
            col,
            threshold,
            left,
            right,
        } => {
            let mut lcell = cell.clone();
            lcell.cut_real_left(*col, threshold);
            let mut rcell = cell.clone();
            rcell.cut_real_right(*col, threshold);
            Ok(TreeTerm::Split {
                cond: Formula::le(
                    &crate::logic::LinearExpr::var(&vars[*col]),
                    &crate::logic::LinearExpr::constant(threshold.clone()),
                ),
                then: Box::new(term_of(left, &lcell, vars)?),
                els: Box::new(term_of(right, &rcell, vars)?),
            })
        }
        DetNode::SplitBool { col, left, right } => {
            let mut sub = cell.clone();
            sub.fix_bool(*col);
            Ok(TreeTerm::Split {
                cond: Formula::prop(&vars[*col]),
                then: Box::new(term_of(right, &sub, vars)?),
                els: Box::new(term_of(left, &sub, vars)?),
            })
        }
    }
}

fn weight_of_term(t: &TreeTerm) -> Weight {
    match t {
        TreeTerm::Leaf(v) => Weight::constant(v.clone()),
        TreeTerm::Split { cond, then, els } => {
            Weight::ite(cond.clone(), weight_of_term(then), weight_of_term(els))
        }
    }
}

/// The density weight of a tree over the given variables: leaf constants
/// are mass/cell-volume and the support is the bounding box, so
/// `WMI(support, weight) = 1` exactly.
pub fn encode_det_weight(tree: &DensityTree, vars: &[Variable]) -> Result<WeightFunction> {
    let term = tree.term(vars)?;
    let support = tree.support(vars)?;
    Ok(WeightFunction::new(weight_of_term(&term), support))
}

/// Greedy top-down density-tree training. Any leaf holding more than
/// `n_max` rows is split if a split exists that leaves at least `n_min`
/// rows on each side; among those, the split maximizing the integrated
/// squared error gain is chosen (ties: lowest column index, then lowest
/// threshold). Candidate thresholds are midpoints of consecutive sorted
/// unique values. Leaf mass is the fraction of rows in the leaf.
pub fn train_det(data: &Dataset, n_min: usize, n_max: usize) -> Result<DensityTree> {
    if data.is_empty() {
        return Err(Error::Dataset("cannot train a density tree on no rows".into()));
    }
    if n_min == 0 || n_min >= n_max {
        return Err(Error::Dataset(format!(
            "leaf size window {n_min}..{n_max} is not a valid range"
        )));
    }

    let columns = data.columns().to_vec();
    let mut bounds: Vec<Option<(Rat, Rat)>> = Vec::with_capacity(columns.len());
    for (ci, c) in columns.iter().enumerate() {
        match c.kind {
            ColumnType::Bool => bounds.push(None),
            ColumnType::Real => {
                let mut lo: Option<Rat> = None;
                let mut hi: Option<Rat> = None;
                for row in data.rows() {
                    let v = row[ci].as_real().expect("typed dataset");
                    if lo.as_ref().is_none_or(|l| v < l) {
                        lo = Some(v.clone());
                    }
                    if hi.as_ref().is_none_or(|h| v > h) {
                        hi = Some(v.clone());
                    }
                }
                bounds.push(Some((lo.expect("non-empty"), hi.expect("non-empty"))));
            }
        }
    }

    let all_rows: Vec<usize> = (0..data.len()).collect();
    let cell = Cell::root(&columns, &bounds);
    let root = grow(
        data,
        &all_rows,
        &cell,
        &Rat::one(),
        data.len(),
        n_min,
        n_max,
    );
    DensityTree::new(columns, bounds, root)
}

/// One candidate split of a cell.
enum Cand {
    Real { threshold: Rat },
    Bool,
}

fn grow(
    data: &Dataset,
    rows: &[usize],
    cell: &Cell,
    rel_vol: &Rat,
    total: usize,
    n_min: usize,
    n_max: usize,
) -> DetNode {
    let n = rows.len();
    let leaf = || DetNode::Leaf {
        mass: count_rat(n) / count_rat(total),
    };
    if n <= n_max {
        return leaf();
    }

    let mut best: Option<(Rat, usize, Cand)> = None;
    let mut consider = |gain: Rat, col: usize, cand: Cand| {
        // Strict improvement only: enumeration order (columns ascending,
        // thresholds ascending) then realizes the tie-break rule.
        if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
            best = Some((gain, col, cand));
        }
    };

    for (col, kind) in cell.col_kinds.iter().enumerate() {
        match kind {
            ColumnType::Real => {
                let Some((lo, hi)) = &cell.reals[col] else {
                    continue;
                };
                let width = hi - lo;
                if width.is_zero() {
                    continue;
                }
                let uniq: BTreeSet<&Rat> = rows
                    .iter()
                    .map(|&r| data.rows()[r][col].as_real().expect("typed dataset"))
                    .collect();
                let uniq: Vec<&Rat> = uniq.into_iter().collect();
                for pair in uniq.windows(2) {
                    let t = (pair[0] + pair[1]) / rat(2, 1);
                    let n_left = rows
                        .iter()
                        .filter(|&&r| data.rows()[r][col].as_real().expect("typed") <= &t)
                        .count();
                    let n_right = n - n_left;
                    if n_left < n_min || n_right < n_min {
                        continue;
                    }
                    let v_left = rel_vol * (&t - lo) / &width;
                    let v_right = rel_vol - &v_left;
                    consider(
                        split_score(n_left, &v_left) + split_score(n_right, &v_right),
                        col,
                        Cand::Real { threshold: t },
                    );
                }
            }
            ColumnType::Bool => {
                // A boolean column already fixed on this path yields an
                // empty side and is skipped by the n_min check.
                let n_true = rows
                    .iter()
                    .filter(|&&r| data.rows()[r][col].as_bool().expect("typed dataset"))
                    .count();
                let n_false = n - n_true;
                if n_false < n_min || n_true < n_min {
                    continue;
                }
                let v_half = rel_vol / rat(2, 1);
                consider(
                    split_score(n_false, &v_half) + split_score(n_true, &v_half),
                    col,
                    Cand::Bool,
                );
            }
        }
    }

    let Some((_, col, cand)) = best else {
        return leaf();
    };
    match cand {
        Cand::Real { threshold } => {
            let (lrows, rrows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .copied()
                .partition(|&r| data.rows()[r][col].as_real().expect("typed") <= &threshold);
            let mut lcell = cell.clone();
            lcell.cut_real_left(col, &threshold);
            let mut rcell = cell.clone();
            rcell.cut_real_right(col, &threshold);
            let (lo, hi) = cell.reals[col].as_ref().expect("real split on real col");
            let width = hi - lo;
            let v_left = rel_vol * (&threshold - lo) / width;
            let v_right = rel_vol - &v_left;
            DetNode::SplitReal {
                col,
                threshold: threshold.clone(),
                left: Box::new(grow(data, &lrows, &lcell, &v_left, total, n_min, n_max)),
                right: Box::new(grow(data, &rrows, &rcell, &v_right, total, n_min, n_max)),
            }
        }
        Cand::Bool => {
            let (trows, frows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .copied()
                .partition(|&r| data.rows()[r][col].as_bool().expect("typed"));
            let mut sub = cell.clone();
            sub.fix_bool(col);
            let v_half = rel_vol / rat(2, 1);
            DetNode::SplitBool {
                col,
                left: Box::new(grow(data, &frows, &sub, &v_half, total, n_min, n_max)),
                right: Box::new(grow(data, &trows, &sub, &v_half, total, n_min, n_max)),
            }
        }
    }
}

/// ISE surrogate contribution of one child: n² / volume (in units of the
/// parent's relative volume; constant factors cancel in the comparison).
fn split_score(n: usize, vol: &Rat) -> Rat {
    let nr = count_rat(n);
    &nr * &nr / vol
}

fn count_rat(n: usize) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::wmi::wmi_value;

    fn real_row(vals: &[Rat]) -> Vec<Value> {
        vals.iter().map(|v| Value::Real(v.clone())).collect()
    }

    #[test]
    fn identical_rows_stay_one_leaf() {
        let cols = vec![Column::real("x"), Column::real("y")];
        let rows = (0..100).map(|_| real_row(&[int(3), int(5)])).collect();
        let data = Dataset::new(cols, rows).unwrap();
        // No distinct values, so no candidate splits exist even though the
        // leaf holds more than n_max rows.
        let tree = train_det(&data, 10, 50).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(tree.total_mass(), int(1));
    }

    #[test]
    fn uniform_grid_splits_into_two_to_four_leaves() {
        let cols = vec![Column::real("x"), Column::real("y")];
        let rows: Vec<Vec<Value>> = (0..4000i64)
            .map(|i| real_row(&[rat(i % 64, 64), rat(i / 64, 64)]))
            .collect();
        let data = Dataset::new(cols, rows).unwrap();
        let tree = train_det(&data, 1000, 2000).unwrap();
        assert!((2..=4).contains(&tree.leaf_count()), "{}", tree.leaf_count());
        assert_eq!(tree.total_mass(), int(1));
    }

    #[test]
    fn single_leaf_on_unit_square_is_constant_one() {
        let tree = DensityTree::new(
            vec![Column::real("x"), Column::real("y")],
            vec![Some((int(0), int(1))), Some((int(0), int(1)))],
            DetNode::Leaf { mass: int(1) },
        )
        .unwrap();
        let x = Variable::real("x");
        let y = Variable::real("y");
        let wf = encode_det_weight(&tree, &[x, y]).unwrap();
        assert_eq!(wf.weight.as_poly().and_then(|p| p.as_constant()), Some(int(1)));
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));
    }

    #[test]
    fn two_leaf_densities_follow_mass_over_volume() {
        let tree = DensityTree::new(
            vec![Column::real("x"), Column::real("y")],
            vec![Some((int(0), int(1))), Some((int(0), int(1)))],
            DetNode::SplitReal {
                col: 0,
                threshold: rat(1, 2),
                left: Box::new(DetNode::Leaf { mass: rat(1, 4) }),
                right: Box::new(DetNode::Leaf { mass: rat(3, 4) }),
            },
        )
        .unwrap();
        // Densities: (1/4)/(1/2) = 1/2 and (3/4)/(1/2) = 3/2.
        assert_eq!(
            tree.density_at(&[Value::Real(rat(1, 4)), Value::Real(rat(1, 2))])
                .unwrap(),
            rat(1, 2)
        );
        assert_eq!(
            tree.density_at(&[Value::Real(rat(3, 4)), Value::Real(rat(1, 2))])
                .unwrap(),
            rat(3, 2)
        );
        let x = Variable::real("x");
        let y = Variable::real("y");
        let wf = encode_det_weight(&tree, &[x, y]).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));
    }

    #[test]
    fn boolean_splits_halve_cell_volume() {
        let tree = DensityTree::new(
            vec![Column::real("x"), Column::bool("b")],
            vec![Some((int(0), int(2))), None],
            DetNode::SplitBool {
                col: 1,
                left: Box::new(DetNode::Leaf { mass: rat(1, 3) }),
                right: Box::new(DetNode::Leaf { mass: rat(2, 3) }),
            },
        )
        .unwrap();
        // Each side's cell: width 2, boolean fixed, volume 2.
        assert_eq!(
            tree.density_at(&[Value::Real(int(1)), Value::Bool(false)]).unwrap(),
            rat(1, 6)
        );
        assert_eq!(
            tree.density_at(&[Value::Real(int(1)), Value::Bool(true)]).unwrap(),
            rat(1, 3)
        );
        let x = Variable::real("x");
        let b = Variable::bool("b");
        let wf = encode_det_weight(&tree, &[x, b]).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));
    }

    #[test]
    fn trained_tree_normalizes_exactly_and_matches_native_density() {
        let cols = vec![Column::real("x"), Column::bool("b")];
        // Mix a boolean cluster with spread-out reals.
        let rows: Vec<Vec<Value>> = (0..60i64)
            .map(|i| {
                vec![
                    Value::Real(rat(i % 10, 10)),
                    Value::Bool(i % 3 == 0),
                ]
            })
            .collect();
        let data = Dataset::new(cols, rows).unwrap();
        let tree = train_det(&data, 5, 20).unwrap();
        assert_eq!(tree.total_mass(), int(1));

        let x = Variable::real("x");
        let b = Variable::bool("b");
        let wf = encode_det_weight(&tree, &[x.clone(), b.clone()]).unwrap();
        assert_eq!(wmi_value(&Formula::tt(), &wf).unwrap(), int(1));

        // Point-wise agreement between the weight DAG and native density.
        for (xv, bv) in [(rat(1, 10), true), (rat(7, 10), false), (rat(1, 2), true)] {
            let point = crate::logic::Valuation::new()
                .with_real(&x, xv.clone())
                .with_bool(&b, bv);
            let native = tree
                .density_at(&[Value::Real(xv), Value::Bool(bv)])
                .unwrap();
            assert_eq!(wf.weight.evaluate(&point), Some(native));
        }
    }

    #[test]
    fn zero_width_dimension_is_reported_at_encoding() {
        let tree = DensityTree::new(
            vec![Column::real("x"), Column::real("y")],
            vec![Some((int(0), int(1))), Some((int(5), int(5)))],
            DetNode::Leaf { mass: int(1) },
        )
        .unwrap();
        let x = Variable::real("x");
        let y = Variable::real("y");
        match encode_det_weight(&tree, &[x, y]) {
            Err(Error::ZeroVolumeLeaf { var }) => assert_eq!(var, "y"),
            other => panic!("expected a zero-volume error, got {other:?}"),
        }
    }

    #[test]
    fn training_rejects_bad_inputs() {
        let cols = vec![Column::real("x")];
        let empty = Dataset::new(cols.clone(), vec![]).unwrap();
        assert!(train_det(&empty, 1, 2).is_err());
        let data = Dataset::new(cols, vec![real_row(&[int(1)])]).unwrap();
        assert!(train_det(&data, 2, 2).is_err());
        assert!(train_det(&data, 0, 2).is_err());
    }
}
