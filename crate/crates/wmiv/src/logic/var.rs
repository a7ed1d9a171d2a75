//! Variables of the two sorts, identified by a globally unique id.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

/// Variable sort: boolean proposition or real-valued unknown.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sort {
    Bool,
    Real,
}

/// A named variable. Identity and ordering are by creation id, so two
/// variables with the same name are distinct unless cloned; within one
/// context ids increase in creation order, which fixes every canonical
/// ordering in the crate.
#[derive(Clone, Eq)]
pub struct Variable {
    id: u64,
    sort: Sort,
    name: Arc<str>,
}

impl Variable {
    /// Fresh variable of the given sort. Ids come from a global counter.
    pub fn fresh(name: impl Into<String>, sort: Sort) -> Self {
        Variable {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            sort,
            name: name.into().into(),
        }
    }

    /// Fresh real variable.
    pub fn real(name: impl Into<String>) -> Self {
        Self::fresh(name, Sort::Real)
    }

    /// Fresh boolean variable.
    pub fn bool(name: impl Into<String>) -> Self {
        Self::fresh(name, Sort::Bool)
    }

    /// Fresh copy of `self`, same sort, name suffixed with a prime.
    pub fn primed(&self) -> Self {
        Self::fresh(format!("{}'", self.name), self.sort)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_real(&self) -> bool {
        self.sort == Sort::Real
    }

    pub fn is_bool(&self) -> bool {
        self.sort == Sort::Bool
    }
}

impl PartialEq for Variable {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl PartialOrd for Variable {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Variable {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl std::hash::Hash for Variable {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.name, self.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_variables_are_distinct() {
        let x = Variable::real("x");
        let y = Variable::real("x");
        assert_ne!(x, y);
        assert!(x < y);
        assert_eq!(x.name(), y.name());
    }

    #[test]
    fn primed_copy_keeps_sort() {
        let a = Variable::bool("A");
        let b = a.primed();
        assert_eq!(b.sort(), Sort::Bool);
        assert_eq!(b.name(), "A'");
        assert!(a < b);
    }
}
