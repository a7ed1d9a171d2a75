//! Partial and total truth assignments over canonical atoms, and point
//! valuations of variables.

use std::collections::BTreeMap;
use std::fmt;

use crate::logic::atom::{Atom, LraAtom};
use crate::logic::{Formula, Variable};
use crate::rational::Rat;

/// Truth assignment over atoms; partial while being built by the
/// enumerator, total in its output.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Assignment {
    map: BTreeMap<Atom, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, atom: Atom, value: bool) {
        self.map.insert(atom, value);
    }

    pub fn unset(&mut self, atom: &Atom) {
        self.map.remove(atom);
    }

    pub fn get(&self, atom: &Atom) -> Option<bool> {
        self.map.get(atom).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, bool)> {
        self.map.iter().map(|(a, b)| (a, *b))
    }

    /// Linear literals of the assignment.
    pub fn lra_literals(&self) -> impl Iterator<Item = (&LraAtom, bool)> {
        self.map.iter().filter_map(|(a, b)| match a {
            Atom::Bool(_) => None,
            Atom::Lra(l) => Some((l, *b)),
        })
    }

    /// Boolean literals of the assignment.
    pub fn bool_literals(&self) -> impl Iterator<Item = (&Variable, bool)> {
        self.map.iter().filter_map(|(a, b)| match a {
            Atom::Bool(v) => Some((v, *b)),
            Atom::Lra(_) => None,
        })
    }

    /// The assignment as a conjunction of literals.
    pub fn to_formula(&self) -> Formula {
        Formula::and(self.iter().map(|(a, b)| Formula::lit(a.clone(), b)))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, b) in self.iter() {
            if !first {
                write!(f, " & ")?;
            }
            first = false;
            if b {
                write!(f, "({a})")?;
            } else {
                write!(f, "!({a})")?;
            }
        }
        if first {
            write!(f, "(empty)")?;
        }
        Ok(())
    }
}

/// A point: values for real and boolean variables.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Valuation {
    pub reals: BTreeMap<Variable, Rat>,
    pub bools: BTreeMap<Variable, bool>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_real(mut self, v: &Variable, x: Rat) -> Self {
        self.reals.insert(v.clone(), x);
        self
    }

    pub fn with_bool(mut self, v: &Variable, b: bool) -> Self {
        self.bools.insert(v.clone(), b);
        self
    }

    pub fn set_real(&mut self, v: &Variable, x: Rat) {
        self.reals.insert(v.clone(), x);
    }

    pub fn set_bool(&mut self, v: &Variable, b: bool) {
        self.bools.insert(v.clone(), b);
    }
}
