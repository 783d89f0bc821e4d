//! Joint loss samples and portfolio weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N × n` joint loss observations: rows are scenarios, columns are assets.
///
/// Stored row-major. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "sample matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at row {}, column {}",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map(|c| c.as_ref().len()).unwrap_or(0);
        if columns.iter().any(|c| c.as_ref().len() != rows) {
            return Err(Error::InvalidInput("columns differ in length".into()));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.as_ref().iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Self::from_row_major(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.row_iter().map(|r| r[j]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Scenario sums `Σᵢ Xᵢ`.
    pub fn row_sums(&self) -> Vec<f64> {
        self.row_iter().map(|r| r.iter().sum()).collect()
    }

    /// The matrix `w ⊙ X`, each column scaled by its weight.
    pub fn weighted(&self, w: &Weights) -> Result<Self> {
        self.check_weights(w)?;
        let data = self
            .row_iter()
            .flat_map(|r| r.iter().zip(w.as_slice()).map(|(x, wi)| wi * x))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// A matrix holding the given rows of `self`, in order.
    pub fn select_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.rows {
            return Err(Error::InvalidInput(format!(
                "row range {range:?} invalid for {} rows",
                self.rows
            )));
        }
        Ok(Self {
            rows: range.len(),
            cols: self.cols,
            data: self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        })
    }

    /// `(X, X)`: the columns of `self` pasted twice.
    pub fn replicate(&self) -> Self {
        let cols = 2 * self.cols;
        let data = self
            .row_iter()
            .flat_map(|r| r.iter().chain(r.iter()).copied())
            .collect();
        Self {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// `(X, c)`: a constant column appended.
    pub fn with_constant_column(&self, c: f64) -> Self {
        let cols = self.cols + 1;
        let data = self
            .row_iter()
            .flat_map(|r| r.iter().copied().chain(std::iter::once(c)))
            .collect();
        Self {
            rows: self.rows,
            cols,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let cols = self.cols;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| f(k % cols, *v))
            .collect();
        Self::from_row_major(self.rows, self.cols, data)
    }

    pub(crate) fn check_weights(&self, w: &Weights) -> Result<()> {
        if w.len() != self.cols {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} assets",
                w.len(),
                self.cols
            )));
        }
        Ok(())
    }
}

/// A point of the simplex `Δ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight {i} is {} (must be finite and non-negative)",
                w[i]
            )));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > WEIGHT_SUM_TOL * w.len().max(1) as f64 {
            return Err(Error::InvalidInput(format!("weights sum to {s}, not 1")));
        }
        Ok(Self(w))
    }

    /// Normalizes a non-negative, non-zero vector onto the simplex.
    pub fn normalized(v: &[f64]) -> Result<Self> {
        if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput(
                "cannot normalize a vector with negative or non-finite entries".into(),
            ));
        }
        let s: f64 = v.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidInput("cannot normalize the zero vector".into()));
        }
        Self::new(v.iter().map(|x| x / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Weights::new(v)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(SampleMatrix::from_row_major(0, 2, vec![]).is_err());
        assert!(SampleMatrix::from_row_major(1, 2, vec![1.0]).is_err());
        assert!(SampleMatrix::from_row_major(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn rows_and_columns_agree() {
        let m = SampleMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let c = SampleMatrix::from_columns(&m.columns()).unwrap();
        assert_eq!(m, c);
        assert_eq!(m.row_sums(), vec![3.0, 7.0, 11.0]);
        assert_eq!(m.replicate().row(1), &[3.0, 4.0, 3.0, 4.0]);
        assert_eq!(m.with_constant_column(9.0).row(2), &[5.0, 6.0, 9.0]);
        assert_eq!(m.select_rows(1..3).unwrap().row(0), &[3.0, 4.0]);
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(vec![0.5, 0.5]).is_ok());
        assert!(Weights::new(vec![0.6, 0.5]).is_err());
        assert!(Weights::new(vec![1.5, -0.5]).is_err());
        assert!(Weights::new(vec![]).is_err());
        let w = Weights::normalized(&[1.0, 3.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
        assert!(Weights::normalized(&[0.0, 0.0]).is_err());
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "[0.25,0.75]");
        assert!(serde_json::from_str::<Weights>("[0.3,0.3]").is_err());
    }
}
