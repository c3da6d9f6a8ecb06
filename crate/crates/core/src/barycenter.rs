//! Wasserstein barycenters of Gaussian moment pairs and the cluster-center
//! cross-covariances used by the ED assignment step.

use nalgebra::{DMatrix, DVector};

use crate::distances::{optimal_coupling_cov, DistanceKind};
use crate::distributions::{DistributionDataset, Moments};
use crate::error::{Error, Result};
use crate::psd::{psd_sqrt, sqrt_and_pinv_sqrt, SymMatrix};

pub const BARYCENTER_RTOL: f64 = 1e-10;
pub const BARYCENTER_MAX_ITERS: usize = 500;
/// An iterate whose smallest eigenvalue is below this fraction of its largest
/// is treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult {
    pub moments: Moments,
    pub iterations: usize,
    /// Frobenius norm of the last covariance update.
    pub residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

/// Barycenter of `models` under W2: mean of the means, covariance by the
/// fixed-point iteration started from the average covariance.
///
/// Returns [`Error::NoConvergence`] carrying the best iterate when the cap is
/// hit.
pub fn barycenter(models: &[&Moments]) -> Result<BarycenterResult> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidConfig("barycenter of an empty set".into()))?;
    let dim = first.dim();
    if let Some(bad) = models.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimMismatch {
            left: dim,
            right: bad.dim(),
        });
    }
    let n = models.len() as f64;
    let mean = models
        .iter()
        .fold(DVector::zeros(dim), |acc, m| acc + &m.mean)
        / n;

    if models.len() == 1 {
        return Ok(BarycenterResult {
            moments: (*first).clone(),
            iterations: 0,
            residual: 0.0,
            converged: true,
            residual_history: Vec::new(),
        });
    }

    let avg = models
        .iter()
        .fold(DMatrix::zeros(dim, dim), |acc, m| acc + m.cov.matrix())
        / n;
    let mut cov = SymMatrix::from_symmetric_unchecked((&avg + avg.transpose()) * 0.5);

    // Singular inputs are checked through the clamped eigenvalues so NotPsd
    // surfaces here rather than mid-iteration.
    let mut any_nonsingular = false;
    let mut all_zero = true;
    for m in models {
        let values = m.cov.clamped_eigenvalues()?;
        let largest = values.max();
        if largest > 0.0 {
            all_zero = false;
            if values.min() >= SINGULAR_RTOL * largest {
                any_nonsingular = true;
            }
        }
    }
    if all_zero {
        return Ok(BarycenterResult {
            moments: Moments::new(mean, SymMatrix::zeros(dim))?,
            iterations: 0,
            residual: 0.0,
            converged: true,
            residual_history: Vec::new(),
        });
    }

    let mut history = Vec::new();
    let mut best: Option<(f64, SymMatrix, usize)> = None;
    for iteration in 1..=BARYCENTER_MAX_ITERS {
        let (root, inv_root, singular) = sqrt_and_pinv_sqrt(&cov, SINGULAR_RTOL)?;
        if singular && any_nonsingular {
            return Err(Error::SingularIterate { iteration });
        }
        let mut inner = DMatrix::zeros(dim, dim);
        for m in models {
            let t = root.matrix() * m.cov.matrix() * root.matrix();
            let t = SymMatrix::from_symmetric_unchecked((&t + t.transpose()) * 0.5);
            inner += psd_sqrt(&t)?.matrix();
        }
        inner /= n;
        let next = inv_root.matrix() * &inner * &inner * inv_root.matrix();
        let next = SymMatrix::from_symmetric_unchecked((&next + next.transpose()) * 0.5);

        let residual = (next.matrix() - cov.matrix()).norm();
        let scale = cov.frobenius_norm();
        history.push(residual);
        cov = next;
        if best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
            best = Some((residual, cov.clone(), iteration));
        }
        if residual <= BARYCENTER_RTOL * (1.0 + scale) {
            return Ok(BarycenterResult {
                moments: Moments::new(mean, cov)?,
                iterations: iteration,
                residual,
                converged: true,
                residual_history: history,
            });
        }
    }

    let (residual, cov, _) = best.expect("at least one iteration ran");
    Err(Error::NoConvergence {
        best: Box::new(BarycenterResult {
            moments: Moments::new(mean, cov)?,
            iterations: BARYCENTER_MAX_ITERS,
            residual,
            converged: false,
            residual_history: history,
        }),
    })
}

/// Cross-covariance between model `member` and the center of `cluster`.
///
/// ED averages the estimated cross-covariances `ds.cross_cov[member][j]`;
/// W2 averages the optimal couplings. `member` need not belong to `cluster`:
/// the assignment step evaluates every model against every center.
pub fn center_cross_cov(
    ds: &DistributionDataset,
    member: usize,
    cluster: &[usize],
    kind: DistanceKind,
) -> Result<DMatrix<f64>> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster(member));
    }
    let dim = ds.dim();
    let mut acc = DMatrix::zeros(dim, dim);
    match kind {
        DistanceKind::Ed => {
            for &j in cluster {
                acc += ds.cross_cov.get(member, j);
            }
        }
        DistanceKind::W2 => {
            let a = &ds.moments(member).cov;
            for &j in cluster {
                acc += optimal_coupling_cov(a, &ds.moments(j).cov)?;
            }
        }
        DistanceKind::Euclidean => return Err(Error::UnsupportedKind(kind)),
    }
    Ok(acc / cluster.len() as f64)
}

/// Trace of the ED center cross-covariance, without forming the matrix.
pub(crate) fn center_cross_trace(
    ds: &DistributionDataset,
    member: usize,
    cluster: &[usize],
) -> f64 {
    cluster
        .iter()
        .map(|&j| ds.cross_cov.trace(member, j))
        .sum::<f64>()
        / cluster.len() as f64
}
