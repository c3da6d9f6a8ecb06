//! Gaussian and lognormal models estimated from index-aligned sample windows.
//!
//! A window is an `m x n` matrix: `m` samples (days) of an `n`-dimensional
//! variable. Cross-covariances between two windows pair samples by row index,
//! so every window in a dataset must have the same shape.

use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psd::{symmetrize, SymMatrix};

/// Mean vector and covariance of one distribution; the currency every
/// distance and barycenter formula consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
}

impl Moments {
    pub fn new(mean: DVector<f64>, cov: SymMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimMismatch {
                left: mean.len(),
                right: cov.dim(),
            });
        }
        Ok(Moments { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    pub moments: Moments,
    pub sample_count: usize,
}

/// Lognormal model: `ln X ~ N(theta, delta)`, plus the moments of `X` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LognormalModel {
    pub theta: DVector<f64>,
    pub delta: SymMatrix,
    pub moments: Moments,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Lognormal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionModel {
    Gaussian(GaussianModel),
    Lognormal(LognormalModel),
}

impl DistributionModel {
    pub fn moments(&self) -> &Moments {
        match self {
            DistributionModel::Gaussian(g) => &g.moments,
            DistributionModel::Lognormal(l) => &l.moments,
        }
    }
}

fn column_means(window: &DMatrix<f64>) -> DVector<f64> {
    let m = window.nrows() as f64;
    DVector::from_iterator(window.ncols(), window.column_iter().map(|c| c.sum() / m))
}

fn centered(window: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = window.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    c
}

fn require_samples(window: &DMatrix<f64>, needed: usize) -> Result<()> {
    if window.nrows() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: window.nrows(),
        });
    }
    if window.ncols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(())
}

/// Column means and unbiased (`m - 1`) sample covariance.
pub fn estimate_gaussian(window: &DMatrix<f64>) -> Result<GaussianModel> {
    require_samples(window, 2)?;
    let mean = column_means(window);
    let c = centered(window, &mean);
    let cov = symmetrize(&(c.transpose() * &c / (window.nrows() as f64 - 1.0)))?;
    Ok(GaussianModel {
        moments: Moments { mean, cov },
        sample_count: window.nrows(),
    })
}

/// Index-aligned sample cross-covariance `E[(X - mu_X)(Y - mu_Y)^T]`, entry
/// `(a, b)` pairing column `a` of `a_window` with column `b` of `b_window`.
/// Not symmetrized.
pub fn estimate_cross_cov(
    a_window: &DMatrix<f64>,
    b_window: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if a_window.shape() != b_window.shape() {
        return Err(Error::ShapeMismatch {
            left: a_window.shape(),
            right: b_window.shape(),
        });
    }
    require_samples(a_window, 2)?;
    let ca = centered(a_window, &column_means(a_window));
    let cb = centered(b_window, &column_means(b_window));
    Ok(ca.transpose() * cb / (a_window.nrows() as f64 - 1.0))
}

/// Elementwise `ln(p[t] / p[t-1])`, giving `m - 1` rows.
pub fn log_returns(prices: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    // negated so NaN is rejected too
    if let Some((idx, &value)) = prices.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        let (row, col) = (idx % prices.nrows(), idx / prices.nrows());
        return Err(Error::NonPositivePrice {
            value,
            context: format!("row {row}, column {col}"),
        });
    }
    require_samples(prices, 3)?;
    let m = prices.nrows();
    Ok(DMatrix::from_fn(m - 1, prices.ncols(), |t, j| {
        (prices[(t + 1, j)] / prices[(t, j)]).ln()
    }))
}

/// Fits a lognormal model to a window of price levels via the sample mean and
/// covariance of consecutive log-ratios.
pub fn estimate_lognormal(prices: &DMatrix<f64>) -> Result<LognormalModel> {
    let returns = log_returns(prices)?;
    let log_model = estimate_gaussian(&returns)?;
    let theta = log_model.moments.mean;
    let delta = log_model.moments.cov;
    let self_moments = lognormal_moments((&theta, &delta), (&theta, &delta), delta.matrix())?;
    let cov = symmetrize(&self_moments.cross_cov)?;
    Ok(LognormalModel {
        moments: Moments {
            mean: self_moments.mean_x,
            cov,
        },
        theta,
        delta,
        sample_count: prices.nrows(),
    })
}

/// Means, second moment and covariance of a pair of jointly lognormal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LognormalMoments {
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    /// `E[X Y^T]`.
    pub second_moment: DMatrix<f64>,
    /// `Sigma_XY = E[X Y^T] - E[X] E[Y]^T`.
    pub cross_cov: DMatrix<f64>,
}

fn check_psd(m: &SymMatrix) -> Result<()> {
    m.clamped_eigenvalues().map(|_| ())
}

/// Moments of `X = exp(A)`, `Y = exp(B)` where `(A, B)` is jointly normal with
/// means `theta_x`, `theta_y`, covariances `delta_x`, `delta_y` and
/// cross-covariance `delta_xy`. Passing the same parameters twice with
/// `delta_xy = delta_x` gives `Sigma_X`.
pub fn lognormal_moments(
    x: (&DVector<f64>, &SymMatrix),
    y: (&DVector<f64>, &SymMatrix),
    delta_xy: &DMatrix<f64>,
) -> Result<LognormalMoments> {
    let (theta_x, delta_x) = x;
    let (theta_y, delta_y) = y;
    let (nx, ny) = (theta_x.len(), theta_y.len());
    if delta_x.dim() != nx {
        return Err(Error::DimMismatch {
            left: nx,
            right: delta_x.dim(),
        });
    }
    if delta_y.dim() != ny {
        return Err(Error::DimMismatch {
            left: ny,
            right: delta_y.dim(),
        });
    }
    if delta_xy.shape() != (nx, ny) {
        return Err(Error::ShapeMismatch {
            left: (nx, ny),
            right: delta_xy.shape(),
        });
    }
    check_psd(delta_x)?;
    check_psd(delta_y)?;
    let dx = delta_x.matrix();
    let dy = delta_y.matrix();
    let mean_x = DVector::from_fn(nx, |i, _| (theta_x[i] + 0.5 * dx[(i, i)]).exp());
    let mean_y = DVector::from_fn(ny, |j, _| (theta_y[j] + 0.5 * dy[(j, j)]).exp());
    let second_moment = DMatrix::from_fn(nx, ny, |i, j| {
        (theta_x[i] + theta_y[j] + 0.5 * (dx[(i, i)] + dy[(j, j)] + 2.0 * delta_xy[(i, j)])).exp()
    });
    // exp_m1 keeps precision when delta_xy is tiny.
    let cross_cov = DMatrix::from_fn(nx, ny, |i, j| {
        mean_x[i] * mean_y[j] * delta_xy[(i, j)].exp_m1()
    });
    Ok(LognormalMoments {
        mean_x,
        mean_y,
        second_moment,
        cross_cov,
    })
}

/// Dense `N x N` table of `n x n` cross-covariance blocks.
#[derive(Debug, Clone)]
pub struct CrossCovTable {
    count: usize,
    dim: usize,
    // block (i, j) stored column-major at ((i * count) + j) * dim * dim
    data: Vec<f64>,
}

impl CrossCovTable {
    fn zeros(count: usize, dim: usize) -> Self {
        CrossCovTable {
            count,
            dim,
            data: vec![0.0; count * count * dim * dim],
        }
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        (i * self.count + j) * self.dim * self.dim
    }

    fn set(&mut self, i: usize, j: usize, block: &DMatrix<f64>) {
        let off = self.offset(i, j);
        let len = self.dim * self.dim;
        self.data[off..off + len].copy_from_slice(block.as_slice());
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Sigma_{X_i X_j}`.
    pub fn get(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        let off = self.offset(i, j);
        DMatrixView::from_slice(
            &self.data[off..off + self.dim * self.dim],
            self.dim,
            self.dim,
        )
    }

    pub fn trace(&self, i: usize, j: usize) -> f64 {
        let off = self.offset(i, j);
        (0..self.dim)
            .map(|a| self.data[off + a * self.dim + a])
            .sum()
    }
}

/// Estimated models, their pairwise cross-covariances, and the raw windows.
#[derive(Debug, Clone)]
pub struct DistributionDataset {
    pub family: Family,
    pub models: Vec<DistributionModel>,
    pub cross_cov: CrossCovTable,
    pub windows: Vec<DMatrix<f64>>,
    pub labels_true: Option<Vec<usize>>,
}

impl DistributionDataset {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cross_cov.dim()
    }

    pub fn moments(&self, i: usize) -> &Moments {
        self.models[i].moments()
    }

    /// Samples per window.
    pub fn window_len(&self) -> usize {
        self.windows.first().map_or(0, DMatrix::nrows)
    }
}

/// Estimates one model per window and the full cross-covariance table.
///
/// Lognormal cross-covariances come from `lognormal_moments` with `Delta_XY`
/// estimated from index-paired log-returns.
pub fn build_dataset(
    windows: Vec<DMatrix<f64>>,
    family: Family,
    labels_true: Option<Vec<usize>>,
) -> Result<DistributionDataset> {
    let first = windows
        .first()
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let shape = first.shape();
    if let Some(bad) = windows.iter().find(|w| w.shape() != shape) {
        return Err(Error::ShapeMismatch {
            left: shape,
            right: bad.shape(),
        });
    }
    if let Some(labels) = &labels_true {
        if labels.len() != windows.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: windows.len(),
            });
        }
    }
    let count = windows.len();
    let dim = shape.1;

    // Centered series whose index-aligned products give the cross blocks:
    // the windows themselves for Gaussians, log-returns for lognormals.
    let (models, series): (Vec<DistributionModel>, Vec<DMatrix<f64>>) = match family {
        Family::Gaussian => windows
            .iter()
            .map(|w| {
                let g = estimate_gaussian(w)?;
                let c = centered(w, &g.moments.mean);
                Ok((DistributionModel::Gaussian(g), c))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        Family::Lognormal => windows
            .iter()
            .map(|w| {
                let l = estimate_lognormal(w)?;
                let r = log_returns(w)?;
                let c = centered(&r, &l.theta);
                Ok((DistributionModel::Lognormal(l), c))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
    };
    let divisor = series[0].nrows() as f64 - 1.0;

    let mut table = CrossCovTable::zeros(count, dim);
    for i in 0..count {
        table.set(i, i, models[i].moments().cov.matrix());
        for j in (i + 1)..count {
            let raw = series[i].transpose() * &series[j] / divisor;
            let block = match (&models[i], &models[j]) {
                (DistributionModel::Lognormal(a), DistributionModel::Lognormal(b)) => {
                    lognormal_moments((&a.theta, &a.delta), (&b.theta, &b.delta), &raw)?.cross_cov
                }
                _ => raw,
            };
            table.set(j, i, &block.transpose());
            table.set(i, j, &block);
        }
    }

    Ok(DistributionDataset {
        family,
        models,
        cross_cov: table,
        windows,
        labels_true,
    })
}
