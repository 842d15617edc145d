//! Two-player normal-form games over dense payoff matrices.

use ndarray::{Array1, Array2, ArrayView1};
use crate::error::{Error, Result};

/// Payoffs `a` for the row player (defender, leader) and `b` for the column
/// player (attacker, follower). Both share one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// True when `a` was divided by its largest absolute entry.
    pub normalized: bool,
}

fn check(m: &Array2<f64>) -> Result<()> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if let Some(((i, j), _)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinitePayoff(i, j));
    }
    Ok(())
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(Error::EmptyMatrix);
    }
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidParameter("ragged payoff rows".into()));
    }
    Ok(Array2::from_shape_fn((n, m), |(i, j)| rows[i][j]))
}

impl BimatrixGame {
    pub fn new(a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        check(&a)?;
        check(&b)?;
        if a.dim() != b.dim() {
            return Err(Error::InvalidParameter(format!(
                "payoff shapes differ: {:?} vs {:?}",
                a.dim(),
                b.dim()
            )));
        }
        let (n, m) = a.dim();
        Ok(BimatrixGame {
            a,
            b,
            row_labels: (0..n).map(|i| i.to_string()).collect(),
            col_labels: (0..m).map(|j| j.to_string()).collect(),
            normalized: false,
        })
    }

    /// Game with `b = -a`.
    pub fn zero_sum(a: Array2<f64>) -> Result<Self> {
        let b = a.mapv(|v| -v);
        Self::new(a, b)
    }

    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        Self::new(from_rows(a)?, from_rows(b)?)
    }

    pub fn zero_sum_from_rows(a: &[Vec<f64>]) -> Result<Self> {
        Self::zero_sum(from_rows(a)?)
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Result<Self> {
        if rows.len() != self.rows() || cols.len() != self.cols() {
            return Err(Error::InvalidParameter("label count does not match matrix shape".into()));
        }
        self.row_labels = rows;
        self.col_labels = cols;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_zero_sum(&self) -> bool {
        self.a.iter().zip(self.b.iter()).all(|(x, y)| *x == -*y)
    }

    /// Divides both matrices by `max |a_ij|`; an all-zero `a` is left as is.
    pub fn normalize_zero_sum(&mut self) {
        let scale = max_abs(&self.a);
        if scale > 0.0 {
            self.a.mapv_inplace(|v| v / scale);
            self.b.mapv_inplace(|v| v / scale);
        }
        self.normalized = true;
    }

    /// Multiplies both payoff matrices by `factor`.
    pub fn scale(&self, factor: f64) -> Self {
        let mut g = self.clone();
        g.a.mapv_inplace(|v| v * factor);
        g.b.mapv_inplace(|v| v * factor);
        g
    }

    /// Row-major nested copy of `m`.
    pub fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
        m.outer_iter().map(|r| r.to_vec()).collect()
    }
}

pub fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// `A y`: expected payoff of each row against column mix `y`.
pub fn row_values(a: &Array2<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    a.dot(&y)
}

/// `x^T A`: expected payoff of each column against row mix `x`.
pub fn col_values(a: &Array2<f64>, x: ArrayView1<f64>) -> Array1<f64> {
    x.dot(a)
}

/// `max_i (A y)_i - min_j (x^T A)_j` for the maximising row player; never
/// negative for valid mixed strategies.
pub fn duality_gap(a: &Array2<f64>, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    let best_row = row_values(a, y).fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let worst_col = col_values(a, x).fold(f64::INFINITY, |m, &v| m.min(v));
    best_row - worst_col
}
