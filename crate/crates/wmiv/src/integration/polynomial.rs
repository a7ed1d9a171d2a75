//! Sparse multivariate polynomials with rational coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use crate::logic::text::{SExp, VarTable};
use crate::logic::{LinearExpr, Sort, Variable};
use crate::rational::{parse_rat, Rat};
use crate::{Error, Result};

/// A monomial: a map from variables to positive exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(BTreeMap<Variable, u32>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: &Variable) -> Self {
        Self::var_pow(v, 1)
    }

    pub fn var_pow(v: &Variable, e: u32) -> Self {
        let mut m = BTreeMap::new();
        if e > 0 {
            m.insert(v.clone(), e);
        }
        Monomial(m)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (v, e) in &other.0 {
            *out.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn exponent(&self, v: &Variable) -> u32 {
        self.0.get(v).copied().unwrap_or(0)
    }

    pub fn without(&self, v: &Variable) -> Monomial {
        let mut out = self.0.clone();
        out.remove(v);
        Monomial(out)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&Variable, u32)> {
        self.0.iter().map(|(v, e)| (v, *e))
    }
}

/// A polynomial stored as a monomial-to-coefficient map. Zero coefficients
/// are never kept, so `is_zero` is a structural check.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rat>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn var(v: &Variable) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::var(v), Rat::one());
        p
    }

    pub fn from_linear(e: &LinearExpr) -> Self {
        let mut p = Polynomial::constant(e.constant_part().clone());
        for (v, c) in e.terms() {
            p.add_term(Monomial::var(v), c.clone());
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` iff the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (m.degree() == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<Variable> {
        self.terms
            .keys()
            .flat_map(|m| m.exponents().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, k: &Rat) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero();
        }
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Replaces `v` by the linear expression `e`, which must not mention
    /// `v` itself.
    pub fn substitute(&self, v: &Variable, e: &LinearExpr) -> Polynomial {
        debug_assert!(
            e.coeff(v).is_zero(),
            "substitution must eliminate the variable"
        );
        let lin = Polynomial::from_linear(e);
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let vexp = m.exponent(v);
            let mut term = Polynomial::zero();
            term.add_term(m.without(v), c.clone());
            if vexp > 0 {
                term = term.mul(&lin.pow(vexp));
            }
            out = out.add(&term);
        }
        out
    }

    /// Renames variables according to `map`; unmapped variables are kept.
    pub fn rename(&self, map: &BTreeMap<Variable, Variable>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut renamed = Monomial::one();
            for (v, e) in m.exponents() {
                let target = map.get(v).unwrap_or(v);
                renamed = renamed.mul(&Monomial::var_pow(target, e));
            }
            out.add_term(renamed, c.clone());
        }
        out
    }

    /// Exact evaluation; `None` if the point misses a variable.
    pub fn eval(&self, point: &BTreeMap<Variable, Rat>) -> Option<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.exponents() {
                let x = point.get(v)?;
                for _ in 0..e {
                    t *= x;
                }
            }
            acc += t;
        }
        Some(acc)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.degree() == 0 {
                write!(f, "{c}")?;
                continue;
            }
            if !c.is_one() {
                write!(f, "{c}*")?;
            }
            let mut first = true;
            for (v, e) in m.exponents() {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                if e == 1 {
                    write!(f, "{v}")?;
                } else {
                    write!(f, "{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Parses a polynomial from an s-expression over `+`, `-`, `*`, `^`,
/// rational literals, and real variable names.
pub fn polynomial_from_sexp(sexp: &SExp, vars: &mut VarTable) -> Result<Polynomial> {
    match sexp {
        SExp::Sym(s) => {
            if let Ok(c) = parse_rat(s) {
                return Ok(Polynomial::constant(c));
            }
            let v = vars.intern(s, Sort::Real)?;
            Ok(Polynomial::var(&v))
        }
        SExp::List(items) => {
            let (head, rest) = items
                .split_first()
                .ok_or_else(|| Error::Parse("empty polynomial application".into()))?;
            let op = match head {
                SExp::Sym(s) => s.as_str(),
                SExp::List(_) => {
                    return Err(Error::Parse("operator must be a symbol".into()));
                }
            };
            match op {
                "+" => {
                    let mut acc = Polynomial::zero();
                    for item in rest {
                        acc = acc.add(&polynomial_from_sexp(item, vars)?);
                    }
                    Ok(acc)
                }
                "-" => match rest {
                    [only] => Ok(polynomial_from_sexp(only, vars)?.scale(&-Rat::one())),
                    [first, others @ ..] => {
                        let mut acc = polynomial_from_sexp(first, vars)?;
                        for item in others {
                            acc = acc.sub(&polynomial_from_sexp(item, vars)?);
                        }
                        Ok(acc)
                    }
                    [] => Err(Error::Parse("(-) needs at least one argument".into())),
                },
                "*" => {
                    let mut acc = Polynomial::one();
                    for item in rest {
                        acc = acc.mul(&polynomial_from_sexp(item, vars)?);
                    }
                    Ok(acc)
                }
                "^" => match rest {
                    [base, SExp::Sym(e)] => {
                        let exp: u32 = e
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad exponent {e}")))?;
                        Ok(polynomial_from_sexp(base, vars)?.pow(exp))
                    }
                    _ => Err(Error::Parse("(^ base exponent) expects two arguments".into())),
                },
                other => Err(Error::Parse(format!("unknown polynomial operator {other}"))),
            }
        }
    }
}

/// Emits a polynomial in the same s-expression dialect `polynomial_from_sexp`
/// reads.
pub fn emit_polynomial(p: &Polynomial) -> SExp {
    let terms: Vec<SExp> = p
        .terms()
        .map(|(m, c)| {
            let mut factors = vec![SExp::Sym(c.to_string())];
            for (v, e) in m.exponents() {
                if e == 1 {
                    factors.push(SExp::Sym(v.to_string()));
                } else {
                    factors.push(SExp::List(vec![
                        SExp::Sym("^".into()),
                        SExp::Sym(v.to_string()),
                        SExp::Sym(e.to_string()),
                    ]));
                }
            }
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                SExp::List(
                    std::iter::once(SExp::Sym("*".into()))
                        .chain(factors)
                        .collect(),
                )
            }
        })
        .collect();
    match terms.len() {
        0 => SExp::Sym("0".into()),
        1 => terms.into_iter().next().unwrap(),
        _ => SExp::List(std::iter::once(SExp::Sym("+".into())).chain(terms).collect()),
    }
}
