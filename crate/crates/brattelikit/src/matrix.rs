//! Nonnegative integer transition matrices.
//!
//! `F[v][w]` counts edges from source `w` (level k-1) to range `v` (level k), so
//! a matrix has `|V_k|` rows and `|V_{k-1}|` columns.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl TransitionMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Invalid("matrix needs at least one row and one column".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Invalid(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(TransitionMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Invalid("ragged matrix rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Panicking constructor for literals in code and tests.
    pub fn lit<const C: usize>(rows: &[[u64; C]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("valid literal matrix")
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        TransitionMatrix { rows: n, cols: n, data }
    }

    /// The matrix `[[p, n], [0, 1]]`.
    pub fn mpn(p: u64, n: u64) -> Self {
        TransitionMatrix { rows: 2, cols: 2, data: vec![p, n, 0, 1] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.get(r, c);
            }
        }
        TransitionMatrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn row_sum(&self, r: usize) -> u64 {
        self.row(r).iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.rows).map(|r| self.get(r, c)).sum()
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.row(r).iter().all(|&x| x == 0)).collect()
    }

    pub fn zero_cols(&self) -> Vec<usize> {
        (0..self.cols).filter(|&c| (0..self.rows).all(|r| self.get(r, c) == 0)).collect()
    }

    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|&x| x > 0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Self::identity(self.rows)
    }

    /// `self * rhs`, failing on overflow. `level` only labels the error.
    pub fn checked_mul(&self, rhs: &Self, level: i64) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { level, expected: self.cols, found: rhs.rows });
        }
        let mut data = vec![0u64; self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let cell = &mut data[i * rhs.cols + j];
                    *cell = a
                        .checked_mul(rhs.get(k, j))
                        .and_then(|x| cell.checked_add(x))
                        .ok_or(Error::EntryOverflow { level })?;
                }
            }
        }
        Ok(TransitionMatrix { rows: self.rows, cols: rhs.cols, data })
    }

    /// Boolean pattern of `self * rhs`; never overflows.
    pub fn support_mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "support product dimension mismatch");
        let mut data = vec![0u64; self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    if rhs.get(k, j) > 0 {
                        data[i * rhs.cols + j] = 1;
                    }
                }
            }
        }
        TransitionMatrix { rows: self.rows, cols: rhs.cols, data }
    }

    /// `F x` for `x` over the source level.
    pub fn apply<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r).iter().zip(x).fold(S::zero(), |acc, (&f, xi)| {
                    if f == 0 {
                        acc
                    } else {
                        acc + S::from_u64(f) * xi.clone()
                    }
                })
            })
            .collect()
    }

    /// `F^T y` for `y` over the range level.
    pub fn apply_transpose<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![S::zero(); self.cols];
        for r in 0..self.rows {
            for (c, o) in out.iter_mut().enumerate() {
                let f = self.get(r, c);
                if f > 0 {
                    *o = o.clone() + S::from_u64(f) * y[r].clone();
                }
            }
        }
        out
    }

    pub fn apply_big(&self, x: &[BigUint]) -> Vec<BigUint> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(BigUint::default(), |acc, (&f, xi)| acc + xi * f)
            })
            .collect()
    }

    pub fn apply_transpose_big(&self, y: &[BigUint]) -> Vec<BigUint> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|c| (0..self.rows).fold(BigUint::default(), |acc, r| acc + &y[r] * self.get(r, c)))
            .collect()
    }
}

impl TryFrom<Vec<Vec<u64>>> for TransitionMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<u64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<u64>> {
    fn from(m: TransitionMatrix) -> Self {
        m.to_rows()
    }
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_rows())
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
