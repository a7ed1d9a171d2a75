//! Exact integration of polynomials over convex polyhedra.
//!
//! The pipeline is vertices → fan triangulation → per-simplex closed form.
//! Everything runs in rational arithmetic, so results are exact; regions of
//! lower dimension than the ambient space integrate to zero because every
//! candidate simplex is degenerate.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num::BigInt;
use num_traits::{One, Signed, Zero};

use crate::logic::{Constraint, ConstraintRel, LinearExpr, Variable};
use crate::lp::{self, LpOutcome, LpRel};
use crate::rational::Rat;
use crate::{Error, Result};

use super::polynomial::Polynomial;

type Point = Vec<Rat>;
/// One inequality `normal · x <= rhs` over the polytope's variable order.
type Row = (Vec<Rat>, Rat);

/// A closed convex polyhedron `{ x : N x <= b }` over an ordered set of
/// real variables.
#[derive(Clone, Debug)]
pub struct Polytope {
    vars: Vec<Variable>,
    rows: Vec<Row>,
    trivially_empty: bool,
}

impl Polytope {
    /// Builds the closed relaxation of a constraint set: strict inequalities
    /// are closed, equalities become opposing pairs, and disequalities are
    /// dropped (they only remove measure-zero slices). `extra_vars` forces
    /// additional coordinates into the ambient space, e.g. variables that
    /// appear in the integrand but not in any constraint.
    pub fn from_constraints<I>(cons: &[Constraint], extra_vars: I) -> Self
    where
        I: IntoIterator<Item = Variable>,
    {
        let mut vars: BTreeSet<Variable> = extra_vars.into_iter().collect();
        for c in cons {
            vars.extend(c.expr.variables().cloned());
        }
        let vars: Vec<Variable> = vars.into_iter().collect();
        let index: BTreeMap<&Variable, usize> =
            vars.iter().enumerate().map(|(i, v)| (v, i)).collect();

        let mut rows: BTreeSet<Row> = BTreeSet::new();
        let mut trivially_empty = false;
        let push = |expr: &LinearExpr, rows: &mut BTreeSet<Row>, empty: &mut bool| {
            // expr <= 0, i.e. coeffs . x <= -constant.
            let mut normal = vec![Rat::zero(); vars.len()];
            for (v, c) in expr.terms() {
                normal[index[v]] = c.clone();
            }
            let rhs = -expr.constant_part().clone();
            if normal.iter().all(Rat::is_zero) {
                if rhs.is_negative() {
                    *empty = true;
                }
                return;
            }
            rows.insert(canonical_row(normal, rhs));
        };
        for c in cons {
            match c.rel {
                ConstraintRel::Le | ConstraintRel::Lt => {
                    push(&c.expr, &mut rows, &mut trivially_empty)
                }
                ConstraintRel::Eq => {
                    push(&c.expr, &mut rows, &mut trivially_empty);
                    push(&-c.expr.clone(), &mut rows, &mut trivially_empty);
                }
                ConstraintRel::Ne => {}
            }
        }
        Polytope {
            vars,
            rows: rows.into_iter().collect(),
            trivially_empty,
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn dimension(&self) -> usize {
        self.vars.len()
    }

    /// Enumerates all vertices, or fails with [`Error::UnboundedRegion`] if
    /// some coordinate direction is unbounded over a nonempty region.
    pub fn vertices(&self) -> Result<Vec<Point>> {
        if self.trivially_empty {
            return Ok(Vec::new());
        }
        let d = self.vars.len();
        if d == 0 {
            return Ok(vec![Vec::new()]);
        }

        let lp_rows: Vec<(LinearExpr, LpRel)> = self
            .rows
            .iter()
            .map(|(normal, rhs)| {
                let mut e = LinearExpr::constant(-rhs.clone());
                for (i, c) in normal.iter().enumerate() {
                    e.add_term(c, &self.vars[i]);
                }
                (e, LpRel::Le)
            })
            .collect();
        for v in &self.vars {
            for sign in [Rat::one(), -Rat::one()] {
                let mut obj = LinearExpr::zero();
                obj.add_term(&sign, v);
                match lp::maximize(&obj, &lp_rows) {
                    LpOutcome::Infeasible => return Ok(Vec::new()),
                    LpOutcome::Unbounded => {
                        return Err(Error::UnboundedRegion {
                            var: v.name().to_string(),
                        })
                    }
                    LpOutcome::Optimal { .. } => {}
                }
            }
        }

        let mut verts: BTreeSet<Point> = BTreeSet::new();
        for subset in (0..self.rows.len()).combinations(d) {
            let mat: Vec<Vec<Rat>> = subset.iter().map(|&i| self.rows[i].0.clone()).collect();
            let rhs: Vec<Rat> = subset.iter().map(|&i| self.rows[i].1.clone()).collect();
            let Some(p) = solve_square(mat, rhs) else {
                continue;
            };
            if self.contains(&p) {
                verts.insert(p);
            }
        }
        Ok(verts.into_iter().collect())
    }

    fn contains(&self, p: &Point) -> bool {
        self.rows.iter().all(|(normal, rhs)| {
            let lhs: Rat = normal
                .iter()
                .zip(p)
                .map(|(c, x)| c * x)
                .fold(Rat::zero(), |a, b| a + b);
            lhs <= *rhs
        })
    }

    /// Splits the polytope into full-dimensional simplices, each given as
    /// `d + 1` vertices. Lower-dimensional polytopes yield no simplices.
    pub fn triangulate(&self) -> Result<Vec<Vec<Point>>> {
        let verts = self.vertices()?;
        let d = self.vars.len();
        if d == 0 || verts.is_empty() {
            return Ok(Vec::new());
        }
        if affine_rank(&verts) < d {
            return Ok(Vec::new());
        }
        Ok(fan(&verts, &self.rows, d))
    }

    /// Exact integral of `p` over the polytope. All variables of `p` must be
    /// coordinates of the polytope; in dimension zero the "integral" is the
    /// value of the (necessarily constant) integrand at the empty point.
    pub fn integrate(&self, p: &Polynomial) -> Result<Rat> {
        for v in p.variables() {
            if !self.vars.contains(&v) {
                return Err(Error::UnboundedRegion {
                    var: v.name().to_string(),
                });
            }
        }
        if self.trivially_empty {
            return Ok(Rat::zero());
        }
        if self.vars.is_empty() {
            return Ok(p.as_constant().expect("no variables to depend on"));
        }
        let mut total = Rat::zero();
        for simplex in self.triangulate()? {
            total += integrate_over_simplex(p, &self.vars, &simplex);
        }
        Ok(total)
    }
}

/// Convenience wrapper: integrate `p` over the closed relaxation of `cons`.
pub fn integrate_over(cons: &[Constraint], p: &Polynomial) -> Result<Rat> {
    Polytope::from_constraints(cons, p.variables()).integrate(p)
}

/// Scales a row so entries are coprime integers with unchanged direction,
/// giving every hyperplane a unique representation.
fn canonical_row(normal: Vec<Rat>, rhs: Rat) -> Row {
    let mut lcm = BigInt::one();
    for r in normal.iter().chain(std::iter::once(&rhs)) {
        lcm = num::Integer::lcm(&lcm, r.denom());
    }
    let ints: Vec<BigInt> = normal
        .iter()
        .chain(std::iter::once(&rhs))
        .map(|r| r.numer() * (&lcm / r.denom()))
        .collect();
    let mut gcd = BigInt::zero();
    for i in &ints {
        gcd = num::Integer::gcd(&gcd, i);
    }
    if gcd.is_zero() {
        gcd = BigInt::one();
    }
    let mut scaled: Vec<Rat> = ints.iter().map(|i| Rat::from_integer(i / &gcd)).collect();
    let rhs = scaled.pop().unwrap();
    (scaled, rhs)
}

/// Solves a square rational system by Gaussian elimination; `None` when the
/// matrix is singular.
fn solve_square(mut mat: Vec<Vec<Rat>>, mut rhs: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = mat.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !mat[r][col].is_zero())?;
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        let p = mat[col][col].clone();
        for r in 0..n {
            if r == col || mat[r][col].is_zero() {
                continue;
            }
            let factor = &mat[r][col] / &p;
            for c in col..n {
                let delta = &factor * &mat[col][c];
                mat[r][c] -= delta;
            }
            let delta = &factor * &rhs[col];
            rhs[r] -= delta;
        }
    }
    Some(
        (0..n)
            .map(|i| &rhs[i] / &mat[i][i])
            .collect(),
    )
}

/// Dimension of the affine hull of `points`.
fn affine_rank(points: &[Point]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<Point> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    matrix_rank(diffs)
}

fn matrix_rank(mut rows: Vec<Vec<Rat>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r == rank || rows[r][col].is_zero() {
                continue;
            }
            let factor = &rows[r][col] / &p;
            for c in col..ncols {
                let delta = &factor * &rows[rank][c];
                rows[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Fans a polytope of affine dimension `dim` from its lexicographically
/// smallest vertex: each facet avoiding the apex is triangulated recursively
/// and coned. Facets are identified by their vertex sets, so several rows
/// supporting the same face contribute it once.
fn fan(points: &[Point], rows: &[Row], dim: usize) -> Vec<Vec<Point>> {
    if dim == 0 {
        return vec![vec![points[0].clone()]];
    }
    let apex = &points[0];
    let mut faces: BTreeSet<Vec<Point>> = BTreeSet::new();
    for (normal, rhs) in rows {
        let face: Vec<Point> = points
            .iter()
            .filter(|p| {
                let lhs: Rat = normal
                    .iter()
                    .zip(p.iter())
                    .map(|(c, x)| c * x)
                    .fold(Rat::zero(), |a, b| a + b);
                lhs == *rhs
            })
            .cloned()
            .collect();
        if face.iter().any(|p| p == apex) {
            continue;
        }
        if face.len() < dim || affine_rank(&face) != dim - 1 {
            continue;
        }
        faces.insert(face);
    }
    let mut simplices = Vec::new();
    for face in faces {
        for mut s in fan(&face, rows, dim - 1) {
            s.push(apex.clone());
            simplices.push(s);
        }
    }
    simplices
}

/// Closed-form integral of a polynomial over one simplex, via the affine
/// change of variables onto the standard simplex and the factorial formula
/// for monomial moments.
fn integrate_over_simplex(p: &Polynomial, vars: &[Variable], simplex: &[Point]) -> Rat {
    let d = vars.len();
    debug_assert_eq!(simplex.len(), d + 1);
    let base = &simplex[d];
    let edges: Vec<Point> = simplex[..d]
        .iter()
        .map(|v| v.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let det = determinant(&edges);
    if det.is_zero() {
        return Rat::zero();
    }

    let params: Vec<Variable> = (0..d).map(|i| Variable::real(format!("@t{i}"))).collect();
    let mut composed = p.clone();
    for (j, v) in vars.iter().enumerate() {
        let mut e = LinearExpr::constant(base[j].clone());
        for (i, t) in params.iter().enumerate() {
            e.add_term(&edges[i][j], t);
        }
        composed = composed.substitute(v, &e);
    }

    let mut total = Rat::zero();
    for (mono, coeff) in composed.terms() {
        let exps: Vec<u32> = params.iter().map(|t| mono.exponent(t)).collect();
        total += coeff * &monomial_moment(&exps, d);
    }
    total * det.abs()
}

/// `∫ t1^a1 … td^ad dt` over the standard simplex: `∏ ai! / (d + Σ ai)!`.
fn monomial_moment(exps: &[u32], d: usize) -> Rat {
    let mut numer = BigInt::one();
    let mut sum = 0u32;
    for &a in exps {
        numer *= factorial(a);
        sum += a;
    }
    Rat::new(numer, factorial(d as u32 + sum))
}

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

fn determinant(rows: &[Point]) -> Rat {
    let n = rows.len();
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let mut det = Rat::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if pivot != col {
            m.swap(col, pivot);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}
