//! Linear expressions over real variables with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::logic::Variable;
use crate::rational::{int, Rat};

/// `sum(coeffs[v] * v) + constant`. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct LinearExpr {
    coeffs: BTreeMap<Variable, Rat>,
    constant: Rat,
}

impl LinearExpr {
    pub fn constant(c: Rat) -> Self {
        LinearExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn zero() -> Self {
        Self::constant(Rat::zero())
    }

    pub fn var(v: &Variable) -> Self {
        debug_assert!(v.is_real(), "linear expressions range over real variables");
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v.clone(), int(1));
        LinearExpr {
            coeffs,
            constant: Rat::zero(),
        }
    }

    pub fn term(c: Rat, v: &Variable) -> Self {
        LinearExpr::var(v) * c
    }

    /// Builds `sum(c_i * v_i) + constant` in one call.
    pub fn combination<'a>(terms: impl IntoIterator<Item = (Rat, &'a Variable)>, constant: Rat) -> Self {
        let mut e = LinearExpr::constant(constant);
        for (c, v) in terms {
            e.add_term(&c, v);
        }
        e
    }

    pub fn add_term(&mut self, c: &Rat, v: &Variable) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v.clone()).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(v);
        }
    }

    pub fn coeff(&self, v: &Variable) -> Rat {
        self.coeffs.get(v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn constant_part(&self) -> &Rat {
        &self.constant
    }

    /// Coefficient pairs in ascending variable order.
    pub fn terms(&self) -> impl Iterator<Item = (&Variable, &Rat)> {
        self.coeffs.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.coeffs.keys()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, point: &BTreeMap<Variable, Rat>) -> Option<Rat> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * point.get(v)?;
        }
        Some(acc)
    }

    /// Replaces `v` by `e` throughout.
    pub fn substitute(&self, v: &Variable, e: &LinearExpr) -> LinearExpr {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => {
                let mut out = self.clone();
                out.coeffs.remove(v);
                out + e.clone() * c.clone()
            }
        }
    }

    /// Renames variables according to `map`; unmapped variables are kept.
    pub fn rename(&self, map: &BTreeMap<Variable, Variable>) -> LinearExpr {
        let mut out = LinearExpr::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            out.add_term(c, map.get(v).unwrap_or(v));
        }
        out
    }
}

impl Add for LinearExpr {
    type Output = LinearExpr;
    fn add(mut self, rhs: LinearExpr) -> LinearExpr {
        for (v, c) in rhs.coeffs {
            self.add_term(&c, &v);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinearExpr {
    type Output = LinearExpr;
    fn sub(self, rhs: LinearExpr) -> LinearExpr {
        self + (-rhs)
    }
}

impl Neg for LinearExpr {
    type Output = LinearExpr;
    fn neg(mut self) -> LinearExpr {
        for c in self.coeffs.values_mut() {
            *c = -c.clone();
        }
        self.constant = -self.constant;
        self
    }
}

impl Mul<Rat> for LinearExpr {
    type Output = LinearExpr;
    fn mul(mut self, k: Rat) -> LinearExpr {
        if k.is_zero() {
            return LinearExpr::zero();
        }
        for c in self.coeffs.values_mut() {
            *c *= &k;
        }
        self.constant *= &k;
        self
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if first {
                if c == &int(1) {
                    write!(f, "{v}")?;
                } else {
                    write!(f, "{c}*{v}")?;
                }
                first = false;
            } else if c == &int(1) {
                write!(f, " + {v}")?;
            } else if c < &Rat::zero() {
                write!(f, " - {}*{v}", -c.clone())?;
            } else {
                write!(f, " + {c}*{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if !self.constant.is_zero() {
            if self.constant < Rat::zero() {
                write!(f, " - {}", -self.constant.clone())?;
            } else {
                write!(f, " + {}", self.constant)?;
            }
        }
        Ok(())
    }
}
