use std::collections::HashSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("{kind} id list has length {found}, expected {expected}")]
    IdCount { kind: &'static str, found: usize, expected: usize },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("entry ({row}, {col}) is {value}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: u8 },
}

/// Binary code-by-test outcome matrix: `get(i, j)` is true iff code `i` passes test `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassMatrix {
    code_ids: Vec<String>,
    test_ids: Vec<String>,
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

fn check_unique(kind: &'static str, ids: &[String]) -> Result<(), MatrixError> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(MatrixError::DuplicateId { kind, id: id.clone() });
        }
    }
    Ok(())
}

impl PassMatrix {
    pub fn new(code_ids: Vec<String>, test_ids: Vec<String>, entries: Vec<Vec<bool>>) -> Result<Self, MatrixError> {
        let rows = entries.len();
        let cols = test_ids.len();
        if code_ids.len() != rows {
            return Err(MatrixError::IdCount { kind: "code", found: code_ids.len(), expected: rows });
        }
        check_unique("code", &code_ids)?;
        check_unique("test", &test_ids)?;
        let mut cells = Vec::with_capacity(rows * cols);
        for (row, r) in entries.into_iter().enumerate() {
            if r.len() != cols {
                return Err(MatrixError::Ragged { row, found: r.len(), expected: cols });
            }
            cells.extend(r);
        }
        Ok(PassMatrix { code_ids, test_ids, rows, cols, cells })
    }

    /// Builds a matrix from 0/1 rows with ids `c0..` and `t0..`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, Vec::len);
        let code_ids = (0..rows.len()).map(|i| format!("c{i}")).collect();
        let test_ids = (0..cols).map(|j| format!("t{j}")).collect();
        Self::with_binary(code_ids, test_ids, rows)
    }

    pub fn with_binary(code_ids: Vec<String>, test_ids: Vec<String>, rows: &[Vec<u8>]) -> Result<Self, MatrixError> {
        let entries = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, &v)| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        value => Err(MatrixError::NotBinary { row: i, col: j, value }),
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<bool>>, _>>()?;
        Self::new(code_ids, test_ids, entries)
    }

    pub fn num_codes(&self) -> usize {
        self.rows
    }

    pub fn num_tests(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn code_ids(&self) -> &[String] {
        &self.code_ids
    }

    pub fn test_ids(&self) -> &[String] {
        &self.test_ids
    }

    pub fn get(&self, code: usize, test: usize) -> bool {
        self.cells[code * self.cols + test]
    }

    pub fn row(&self, code: usize) -> &[bool] {
        &self.cells[code * self.cols..(code + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|&b| b as u8).collect()).collect()
    }

    /// Reorders rows and columns: new row `i` is old row `row_perm[i]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let entries = row_perm
            .iter()
            .map(|&i| col_perm.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        PassMatrix::new(
            row_perm.iter().map(|&i| self.code_ids[i].clone()).collect(),
            col_perm.iter().map(|&j| self.test_ids[j].clone()).collect(),
            entries,
        )
        .expect("a permutation preserves shape and id uniqueness")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    code_ids: Vec<String>,
    test_ids: Vec<String>,
    entries: Vec<Vec<u8>>,
}

impl Serialize for PassMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixFile {
            code_ids: self.code_ids.clone(),
            test_ids: self.test_ids.clone(),
            entries: self.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PassMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = MatrixFile::deserialize(d)?;
        PassMatrix::with_binary(f.code_ids, f.test_ids, &f.entries).map_err(serde::de::Error::custom)
    }
}
