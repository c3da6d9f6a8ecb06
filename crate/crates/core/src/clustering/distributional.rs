//! WKM/EKM (barycenter centers) and WKMd/EKMd (medoid centers) on a
//! [`DistributionDataset`].

use std::time::Instant;

use log::warn;

use super::{
    best_of_restarts, into_result, objective, Centers, ClusterConfig, ClusteringResult, Engine,
};
use crate::barycenter::{barycenter, center_cross_trace, BarycenterResult};
use crate::distances::{
    ed_squared_from_trace, pairwise_matrix, w2_squared_with_root, DistanceKind, DistanceMatrix,
};
use crate::distributions::{DistributionDataset, Moments};
use crate::error::{Error, Result};
use crate::psd::{psd_sqrt, SymMatrix};

#[derive(Clone)]
struct BaryCenter {
    moments: Moments,
    /// `Sigma^{1/2}` of the center, for W2 assignment.
    root: Option<SymMatrix>,
    /// Members the center was computed from, for the ED cross term.
    members: Vec<usize>,
}

struct Means<'a> {
    ds: &'a DistributionDataset,
    kind: DistanceKind,
}

impl Means<'_> {
    fn center(&self, moments: Moments, members: Vec<usize>) -> Result<BaryCenter> {
        let root = match self.kind {
            DistanceKind::W2 => Some(psd_sqrt(&moments.cov)?),
            _ => None,
        };
        Ok(BaryCenter {
            moments,
            root,
            members,
        })
    }
}

fn barycenter_or_best(models: &[&Moments]) -> Result<BarycenterResult> {
    match barycenter(models) {
        Err(Error::NoConvergence { best }) => {
            warn!(
                "barycenter of {} models stopped at residual {:e}; using best iterate",
                models.len(),
                best.residual
            );
            Ok(*best)
        }
        other => other,
    }
}

impl Engine for Means<'_> {
    type Center = BaryCenter;

    fn len(&self) -> usize {
        self.ds.len()
    }

    fn seed_center(&self, idx: usize) -> Result<BaryCenter> {
        self.center(self.ds.moments(idx).clone(), vec![idx])
    }

    fn update(&self, members: &[usize]) -> Result<BaryCenter> {
        let models: Vec<&Moments> = members.iter().map(|&i| self.ds.moments(i)).collect();
        let bary = barycenter_or_best(&models)?;
        self.center(bary.moments, members.to_vec())
    }

    fn dist(&self, i: usize, c: &BaryCenter) -> Result<f64> {
        let model = self.ds.moments(i);
        match &c.root {
            Some(root) => w2_squared_with_root(&c.moments, root, model),
            None => Ok(ed_squared_from_trace(
                model,
                &c.moments,
                center_cross_trace(self.ds, i, &c.members),
            )),
        }
    }
}

struct Medoids {
    table: DistanceMatrix,
}

impl Engine for Medoids {
    type Center = usize;

    fn len(&self) -> usize {
        self.table.len()
    }

    fn seed_center(&self, idx: usize) -> Result<usize> {
        Ok(idx)
    }

    fn update(&self, members: &[usize]) -> Result<usize> {
        let mut best = (members[0], f64::INFINITY);
        for &c in members {
            let row = self.table.row(c);
            let cost: f64 = members.iter().map(|&j| row[j]).sum();
            if cost < best.1 {
                best = (c, cost);
            }
        }
        Ok(best.0)
    }

    fn dist(&self, i: usize, c: &usize) -> Result<f64> {
        Ok(self.table.get(i, *c))
    }
}

fn check_kind(kind: DistanceKind) -> Result<()> {
    match kind {
        DistanceKind::W2 | DistanceKind::Ed => Ok(()),
        DistanceKind::Euclidean => Err(Error::UnsupportedKind(kind)),
    }
}

/// K-means over distributions: WKM for `W2`, EKM for `Ed`. Centers are W2
/// barycenters of the members in both cases; EKM measures the distance to a
/// center with the member-averaged estimated cross-covariance.
pub fn cluster_distributions_kmeans(
    ds: &DistributionDataset,
    kind: DistanceKind,
    cfg: &ClusterConfig,
) -> Result<ClusteringResult> {
    check_kind(kind)?;
    let engine = Means { ds, kind };
    let (run, wall) = best_of_restarts(&engine, cfg)?;
    Ok(into_result(run, wall, |c| {
        Centers::Barycenters(c.into_iter().map(|b| b.moments).collect())
    }))
}

/// K-medoids over distributions (WKMd / EKMd) on the full pairwise table.
/// The reported wall time includes building the table.
pub fn cluster_distributions_kmedoids(
    ds: &DistributionDataset,
    kind: DistanceKind,
    cfg: &ClusterConfig,
) -> Result<ClusteringResult> {
    check_kind(kind)?;
    cfg.validate(ds.len())?;
    let start = Instant::now();
    let engine = Medoids {
        table: pairwise_matrix(ds, kind)?,
    };
    let table_time = start.elapsed().as_secs_f64();
    let (run, wall) = best_of_restarts(&engine, cfg)?;
    Ok(into_result(run, wall + table_time, Centers::Medoids))
}

/// Recomputes the objective of `result` from its labels and centers.
pub fn objective_for(
    ds: &DistributionDataset,
    kind: DistanceKind,
    result: &ClusteringResult,
) -> Result<f64> {
    check_kind(kind)?;
    let k = result.k();
    let mut members = vec![Vec::new(); k];
    for (i, &l) in result.labels.iter().enumerate() {
        members[l].push(i);
    }
    match &result.centers {
        Centers::Barycenters(c) => {
            let engine = Means { ds, kind };
            let centers = c
                .iter()
                .zip(members)
                .map(|(m, mem)| engine.center(m.clone(), mem))
                .collect::<Result<Vec<_>>>()?;
            objective(&engine, &result.labels, &centers)
        }
        Centers::Medoids(c) => {
            let engine = Medoids {
                table: pairwise_matrix(ds, kind)?,
            };
            objective(&engine, &result.labels, c)
        }
        Centers::Points(_) => Err(Error::InvalidConfig(
            "raw-point centers have no distributional objective".into(),
        )),
    }
}
