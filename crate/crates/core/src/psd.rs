//! Symmetric positive-semidefinite matrix primitives.
//!
//! Every covariance that enters a distance or barycenter computation is held
//! as a [`SymMatrix`]. Square roots go through a symmetric eigendecomposition
//! with small negative eigenvalues clamped to zero; the clamp threshold is
//! relative to the largest eigenvalue so the behaviour is scale-free.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance on `|a_ij - a_ji|` accepted by [`SymMatrix::new`].
pub const SYMMETRY_RTOL: f64 = 1e-10;

/// Eigenvalues above `-CLAMP_RTOL * lambda_max` are treated as rounding noise.
pub const CLAMP_RTOL: f64 = 1e-8;

/// A dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m` after checking it is square, non-empty and symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        let asymmetry = max_asymmetry(&m);
        let scale = m.amax();
        if asymmetry > SYMMETRY_RTOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(SymMatrix(m))
    }

    /// Caller guarantees symmetry (e.g. the matrix came out of `symmetrize`).
    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.is_square());
        SymMatrix(m)
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Builds from nested rows, e.g. parsed JSON.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Eigenvalues after the PSD check, clamped at zero.
    pub fn clamped_eigenvalues(&self) -> Result<DVector<f64>> {
        let values = self.0.symmetric_eigenvalues();
        clamp_eigenvalues(values)
    }

    /// Smallest eigenvalue divided by the largest; 0 for the zero matrix.
    pub fn condition_ratio(&self) -> f64 {
        let values = self.0.symmetric_eigenvalues();
        let largest = values.max();
        if largest <= 0.0 {
            return 0.0;
        }
        values.min() / largest
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(())
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch {
            left: (nrows, ncols),
            right: (nrows, bad.len()),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn clamp_eigenvalues(mut values: DVector<f64>) -> Result<DVector<f64>> {
    let largest = values.max();
    let floor = -CLAMP_RTOL * largest.max(0.0);
    if let Some(&bad) = values.iter().find(|&&v| v < floor) {
        return Err(Error::NotPsd {
            eigenvalue: bad,
            largest,
        });
    }
    values.apply(|v| *v = v.max(0.0));
    Ok(values)
}

fn reconstruct(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (mut col, &v) in scaled.column_iter_mut().zip(values.iter()) {
        col *= v;
    }
    let m = scaled * vectors.transpose();
    (&m + m.transpose()) * 0.5
}

fn clamped_eigen(m: &SymMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(m.0.clone());
    let values = clamp_eigenvalues(eig.eigenvalues)?;
    Ok((values, eig.eigenvectors))
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let (values, vectors) = clamped_eigen(m)?;
    let roots = values.map(f64::sqrt);
    Ok(SymMatrix(reconstruct(&vectors, &roots)))
}

/// Square root, Moore-Penrose inverse square root, and whether any eigenvalue
/// fell below `singular_rtol * lambda_max` (those are dropped from the inverse).
pub(crate) fn sqrt_and_pinv_sqrt(
    m: &SymMatrix,
    singular_rtol: f64,
) -> Result<(SymMatrix, SymMatrix, bool)> {
    let (values, vectors) = clamped_eigen(m)?;
    let largest = values.max();
    let cutoff = singular_rtol * largest;
    let mut singular = largest <= 0.0;
    let roots = values.map(f64::sqrt);
    let inv_roots = values.map(|v| {
        if v > cutoff && v > 0.0 {
            1.0 / v.sqrt()
        } else {
            singular = true;
            0.0
        }
    });
    Ok((
        SymMatrix(reconstruct(&vectors, &roots)),
        SymMatrix(reconstruct(&vectors, &inv_roots)),
        singular,
    ))
}

pub fn trace(m: &SymMatrix) -> f64 {
    m.trace()
}

/// `(m + m^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> Result<SymMatrix> {
    check_square(m)?;
    Ok(SymMatrix((m + m.transpose()) * 0.5))
}
