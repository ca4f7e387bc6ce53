//! Design matrix and response container.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An `n x p` design matrix paired with its length-`n` response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Validates shapes (`n >= 1`, `p >= 1`, matching row counts) and that
    /// every entry is finite.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "design matrix must be at least 1x1, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                if !x[(i, j)].is_finite() {
                    return Err(Error::NonFinite(format!(
                        "design at row {}, column {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for i in 0..y.len() {
            if !y[i].is_finite() {
                return Err(Error::NonFinite(format!("response at row {}", i + 1)));
            }
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// The sub-dataset containing only the given rows, in the given order.
    /// Used by the cross-validation splits.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(rows.len(), self.p(), |i, j| self.x[(rows[i], j)]);
        let y = DVector::from_fn(rows.len(), |i, _| self.y[rows[i]]);
        Dataset { x, y }
    }

    /// The response scaled by a constant, sharing the design.
    pub fn scale_y(&self, c: f64) -> Dataset {
        Dataset {
            x: self.x.clone(),
            y: &self.y * c,
        }
    }
}
