//! Typed tabular data: the input format for density-tree training and the
//! reference trainers.

use crate::rational::Rat;
use crate::{Error, Result};

/// Column type of a dataset: real-valued or boolean.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ColumnType {
    Real,
    Bool,
}

/// One column: a name and its type.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Column {
    pub name: String,
    pub kind: ColumnType,
}

impl Column {
    pub fn real(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnType::Real,
        }
    }

    pub fn bool(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnType::Bool,
        }
    }
}

/// A single cell value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Value {
    Real(Rat),
    Bool(bool),
}

impl Value {
    pub fn kind(&self) -> ColumnType {
        match self {
            Value::Real(_) => ColumnType::Real,
            Value::Bool(_) => ColumnType::Bool,
        }
    }

    pub fn as_real(&self) -> Option<&Rat> {
        match self {
            Value::Real(r) => Some(r),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Real(_) => None,
        }
    }
}

/// A rectangular table of typed values.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

impl Dataset {
    /// Builds a dataset, checking that every row has one value per column
    /// and that each value matches its column's type.
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Value>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Dataset(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            for (v, c) in row.iter().zip(&columns) {
                if v.kind() != c.kind {
                    return Err(Error::Dataset(format!(
                        "row {i}, column `{}`: value type does not match column type",
                        c.name
                    )));
                }
            }
        }
        Ok(Dataset { columns, rows })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Projection onto the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Dataset> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            let i = self
                .column_index(name)
                .ok_or_else(|| Error::Dataset(format!("no column named `{name}`")))?;
            idx.push(i);
        }
        let columns = idx.iter().map(|&i| self.columns[i].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
            .collect();
        Dataset::new(columns, rows)
    }

    /// Splits off the named label column: returns the remaining features
    /// and the label values.
    pub fn split_label(&self, label: &str) -> Result<(Dataset, Vec<Value>)> {
        let li = self
            .column_index(label)
            .ok_or_else(|| Error::Dataset(format!("no column named `{label}`")))?;
        let columns: Vec<Column> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != li)
            .map(|(_, c)| c.clone())
            .collect();
        let mut labels = Vec::with_capacity(self.rows.len());
        let rows = self
            .rows
            .iter()
            .map(|r| {
                labels.push(r[li].clone());
                r.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != li)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        Ok((Dataset::new(columns, rows)?, labels))
    }

    /// Keeps only the rows at the given sorted positions.
    pub fn subset(&self, keep: &[usize]) -> Result<Dataset> {
        let rows = keep
            .iter()
            .map(|&i| {
                self.rows
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Dataset(format!("row index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.columns.clone(), rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn sample() -> Dataset {
        Dataset::new(
            vec![Column::real("x"), Column::bool("b"), Column::real("y")],
            vec![
                vec![Value::Real(int(1)), Value::Bool(true), Value::Real(int(10))],
                vec![Value::Real(int(2)), Value::Bool(false), Value::Real(int(20))],
            ],
        )
        .unwrap()
    }

    #[test]
    fn shape_and_type_checks() {
        let cols = vec![Column::real("x")];
        let bad_width = Dataset::new(cols.clone(), vec![vec![]]);
        assert!(bad_width.is_err());
        let bad_type = Dataset::new(cols, vec![vec![Value::Bool(true)]]);
        assert!(bad_type.is_err());
    }

    #[test]
    fn select_and_split() {
        let d = sample();
        let p = d.select(&["y", "x"]).unwrap();
        assert_eq!(p.columns()[0].name, "y");
        assert_eq!(p.rows()[1][1], Value::Real(int(2)));

        let (feats, labels) = d.split_label("b").unwrap();
        assert_eq!(feats.columns().len(), 2);
        assert_eq!(labels, vec![Value::Bool(true), Value::Bool(false)]);
        assert!(d.select(&["nope"]).is_err());
    }
}
