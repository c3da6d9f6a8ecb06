//! Closed-form 2-Wasserstein and expectation distances between distributions
//! given by their first two moments.
//!
//! All functions return *squared* distances; square roots are only taken for
//! reporting.

use std::sync::atomic::{AtomicUsize, Ordering};

use log::warn;
use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionDataset, Moments};
use crate::error::{Error, Result};
use crate::psd::{psd_sqrt, SymMatrix};

/// Which distance an operation uses. `Euclidean` only applies to raw points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceKind {
    W2,
    Ed,
    Euclidean,
}

/// Raw ED values below this are reported; they mean the supplied cross
/// covariance is not consistent with the two marginals.
pub const ED_WARN_FLOOR: f64 = -1e-6;

static ED_CLAMP_WARNINGS: AtomicUsize = AtomicUsize::new(0);

/// Number of `ed_squared` calls whose raw value fell below [`ED_WARN_FLOOR`].
pub fn ed_clamp_warnings() -> usize {
    ED_CLAMP_WARNINGS.load(Ordering::Relaxed)
}

fn check_dims(a: &Moments, b: &Moments) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

fn mean_gap(a: &Moments, b: &Moments) -> f64 {
    (&a.mean - &b.mean).norm_squared()
}

/// `(A^{1/2} B A^{1/2})^{1/2}` given `A^{1/2}`.
fn coupling_from_root(a_root: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    let inner = a_root.matrix() * b.matrix() * a_root.matrix();
    let inner = SymMatrix::from_symmetric_unchecked((&inner + inner.transpose()) * 0.5);
    psd_sqrt(&inner)
}

/// Trace of the coupling term only needs the eigenvalues of the inner product.
fn coupling_trace_from_root(a_root: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    let inner = a_root.matrix() * b.matrix() * a_root.matrix();
    let inner = SymMatrix::from_symmetric_unchecked((&inner + inner.transpose()) * 0.5);
    Ok(inner.clamped_eigenvalues()?.iter().map(|v| v.sqrt()).sum())
}

/// Optimal-coupling covariance `(Sigma_a^{1/2} Sigma_b Sigma_a^{1/2})^{1/2}`.
pub fn optimal_coupling_cov(a: &SymMatrix, b: &SymMatrix) -> Result<DMatrix<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let a_root = psd_sqrt(a)?;
    Ok(coupling_from_root(&a_root, b)?.into_matrix())
}

/// Squared 2-Wasserstein distance between two Gaussians (or any pair of
/// distributions, restricted to their first two moments).
pub fn w2_squared(a: &Moments, b: &Moments) -> Result<f64> {
    check_dims(a, b)?;
    let a_root = psd_sqrt(&a.cov)?;
    w2_squared_with_root(a, &a_root, b)
}

/// [`w2_squared`] with `Sigma_a^{1/2}` precomputed.
pub(crate) fn w2_squared_with_root(a: &Moments, a_root: &SymMatrix, b: &Moments) -> Result<f64> {
    check_dims(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let coupling = coupling_trace_from_root(a_root, &b.cov)?;
    let raw = mean_gap(a, b) + a.cov.trace() + b.cov.trace() - 2.0 * coupling;
    Ok(raw.max(0.0))
}

/// Squared expectation distance `E||X - Y||^2` given the cross-covariance
/// `Sigma_ab`. Only the diagonal of `cross` matters, so it need not be
/// symmetric.
pub fn ed_squared(a: &Moments, b: &Moments, cross: DMatrixView<'_, f64>) -> Result<f64> {
    check_dims(a, b)?;
    if cross.shape() != (a.dim(), a.dim()) {
        return Err(Error::ShapeMismatch {
            left: (a.dim(), a.dim()),
            right: cross.shape(),
        });
    }
    Ok(ed_squared_from_trace(a, b, cross.trace()))
}

pub(crate) fn ed_squared_from_trace(a: &Moments, b: &Moments, cross_trace: f64) -> f64 {
    let raw = mean_gap(a, b) + a.cov.trace() + b.cov.trace() - 2.0 * cross_trace;
    if raw < ED_WARN_FLOOR {
        ED_CLAMP_WARNINGS.fetch_add(1, Ordering::Relaxed);
        warn!("expectation distance {raw:e} < 0: cross covariance inconsistent with marginals");
    }
    raw.max(0.0)
}

/// Dense symmetric-or-not `N x N` table of squared distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Squared distance between every pair of models in `ds`.
///
/// ED entries use `ds.cross_cov[i][j]`. Cells are filled in a fixed order so
/// the table is identical from run to run.
pub fn pairwise_matrix(ds: &DistributionDataset, kind: DistanceKind) -> Result<DistanceMatrix> {
    let n = ds.len();
    let mut data = vec![0.0; n * n];
    match kind {
        DistanceKind::W2 => {
            let roots = ds
                .models
                .iter()
                .map(|m| psd_sqrt(&m.moments().cov))
                .collect::<Result<Vec<_>>>()?;
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = w2_squared_with_root(ds.moments(i), &roots[i], ds.moments(j))?;
                    data[i * n + j] = d;
                    data[j * n + i] = d;
                }
            }
        }
        DistanceKind::Ed => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        data[i * n + j] = ed_squared_from_trace(
                            ds.moments(i),
                            ds.moments(j),
                            ds.cross_cov.trace(i, j),
                        );
                    }
                }
            }
        }
        DistanceKind::Euclidean => return Err(Error::UnsupportedKind(kind)),
    }
    Ok(DistanceMatrix { n, data })
}
