//! Dense square distance matrices.
//!
//! Elements are stored as `f32` in row-major order. Every statistic computed
//! from a matrix accumulates in `f64`.

use crate::error::{Error, Result};

/// Absolute tolerance used when checking symmetry on ingestion.
pub const SYMMETRY_TOLERANCE: f32 = 1e-6;

/// Square, symmetric, non-negative matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n_dims: usize,
    data: Vec<f32>,
}

impl DistanceMatrix {
    /// Wraps `data` without checking any invariant.
    ///
    /// The kernels only ever read the strict upper triangle, so a matrix
    /// built this way with a garbage lower triangle still produces the same
    /// statistics. `data.len()` must still be `n_dims * n_dims`.
    pub fn new_unchecked(n_dims: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), n_dims * n_dims, "data length must be n_dims^2");
        Self { n_dims, data }
    }

    /// Validates a list of rows. See [`validate_matrix`].
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let n_dims = rows.len();
        let mut data = Vec::with_capacity(n_dims * n_dims);
        for (row, values) in rows.iter().enumerate() {
            let values = values.as_ref();
            if values.len() != n_dims {
                return Err(Error::RaggedRow { row, len: values.len(), n_dims });
            }
            data.extend_from_slice(values);
        }
        validate_matrix(n_dims, data)
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f32] {
        let start = row * self.n_dims;
        &self.data[start..start + self.n_dims]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.n_dims + col]
    }

    /// Returns a copy with every distance multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        Self {
            n_dims: self.n_dims,
            data: self.data.iter().map(|&d| d * factor).collect(),
        }
    }

    /// Returns the matrix with rows and columns reordered so that new object
    /// `i` is old object `order[i]`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.n_dims);
        let n = self.n_dims;
        let mut data = Vec::with_capacity(n * n);
        for &r in order {
            let row = self.row(r);
            data.extend(order.iter().map(|&c| row[c]));
        }
        Self { n_dims: n, data }
    }
}

/// Validates a row-major `n_dims`×`n_dims` array into a [`DistanceMatrix`].
///
/// Entries must be finite and non-negative with an exact-zero diagonal.
/// Mirrored entries may differ by at most [`SYMMETRY_TOLERANCE`]; the upper
/// triangle is then copied over the lower one.
pub fn validate_matrix(n_dims: usize, mut data: Vec<f32>) -> Result<DistanceMatrix> {
    if n_dims < 2 {
        return Err(Error::TooSmall(n_dims));
    }
    match n_dims.checked_mul(n_dims) {
        Some(len) if len == data.len() => {}
        _ => return Err(Error::NonSquare { n_dims, len: data.len() }),
    }

    for (idx, &value) in data.iter().enumerate() {
        let (row, col) = (idx / n_dims, idx % n_dims);
        if !value.is_finite() {
            return Err(Error::NonFiniteEntry { row, col, value });
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { row, col, value });
        }
    }
    for index in 0..n_dims {
        let value = data[index * n_dims + index];
        if value != 0.0 {
            return Err(Error::NonzeroDiagonal { index, value });
        }
    }
    for row in 0..n_dims {
        for col in row + 1..n_dims {
            let upper = data[row * n_dims + col];
            let lower = data[col * n_dims + row];
            if (upper - lower).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::AsymmetricBeyondTolerance { row, col, upper, lower });
            }
            data[col * n_dims + row] = upper;
        }
    }
    Ok(DistanceMatrix { n_dims, data })
}
