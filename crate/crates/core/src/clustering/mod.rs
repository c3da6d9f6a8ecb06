//! K-means and K-medoids on raw points and on estimated distributions.
//!
//! All six engines share one alternating loop ([`lloyd`]): assign every item
//! to its nearest center, repair empty clusters, stop if the labels did not
//! change, otherwise recompute centers. They differ only in what a center is
//! and how the distance to it is measured.

mod distributional;
mod raw;

use std::time::Instant;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionDataset, Moments};
use crate::error::{Error, Result};

pub use distributional::{
    cluster_distributions_kmeans, cluster_distributions_kmedoids, objective_for,
};
pub use raw::{kmeans_raw, kmedoids_raw};

pub const DEFAULT_MAX_ITERS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `k` distinct item indices drawn uniformly per restart.
    RandomPoints,
    /// Fixed starting centers; restarts are pointless and only one run is made.
    GivenIndices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub init: Init,
    pub restarts: usize,
}

impl ClusterConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        ClusterConfig {
            k,
            max_iters: DEFAULT_MAX_ITERS,
            seed,
            init: Init::RandomPoints,
            restarts: DEFAULT_RESTARTS,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::KTooLarge { k: self.k, n });
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if let Init::GivenIndices(idx) = &self.init {
            if idx.len() != self.k {
                return Err(Error::InvalidConfig(format!(
                    "{} initial indices given for k = {}",
                    idx.len(),
                    self.k
                )));
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != idx.len() || sorted.last().is_some_and(|&i| i >= n) {
                return Err(Error::InvalidConfig(
                    "initial indices must be distinct and in range".into(),
                ));
            }
        }
        Ok(())
    }

    /// Starting center indices for every restart, drawn from one seeded stream.
    pub fn initial_indices(&self, n: usize) -> Vec<Vec<usize>> {
        match &self.init {
            Init::GivenIndices(idx) => vec![idx.clone()],
            Init::RandomPoints => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.restarts)
                    .map(|_| sample(&mut rng, n, self.k).into_vec())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Centers {
    Points(Vec<DVector<f64>>),
    Barycenters(Vec<Moments>),
    Medoids(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub centers: Centers,
    pub iterations: usize,
    /// Sum over items of the squared distance to their center.
    pub objective: f64,
    pub wall_time_seconds: f64,
    pub converged: bool,
    /// Objective after each center update of the winning run.
    pub objective_history: Vec<f64>,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        match &self.centers {
            Centers::Points(c) => c.len(),
            Centers::Barycenters(c) => c.len(),
            Centers::Medoids(c) => c.len(),
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Gives every raw sample of window `i` the label of distribution `i`.
pub fn propagate_labels(ds: &DistributionDataset, result: &ClusteringResult) -> Vec<usize> {
    let m = ds.window_len();
    result
        .labels
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, m))
        .collect()
}

pub(crate) trait Engine {
    type Center: Clone;

    fn len(&self) -> usize;
    /// Center consisting of item `idx` alone.
    fn seed_center(&self, idx: usize) -> Result<Self::Center>;
    /// Center of a nonempty, ascending member list.
    fn update(&self, members: &[usize]) -> Result<Self::Center>;
    fn dist(&self, i: usize, center: &Self::Center) -> Result<f64>;
}

pub(crate) struct Run<C> {
    pub labels: Vec<usize>,
    pub centers: Vec<C>,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

fn assign<E: Engine>(e: &E, centers: &[E::Center]) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = e.len();
    let mut labels = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = (0, f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let d = e.dist(i, center)?;
            // strict: ties keep the lowest cluster index
            if d < best.1 {
                best = (c, d);
            }
        }
        labels.push(best.0);
        dists.push(best.1);
    }
    Ok((labels, dists))
}

/// Moves the item farthest from its center into each empty cluster, taking
/// only from clusters that keep at least one member.
fn repair_empty<E: Engine>(
    e: &E,
    labels: &mut [usize],
    dists: &mut [f64],
    centers: &mut [E::Center],
) -> Result<()> {
    let k = centers.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return Ok(());
        };
        let mut donor: Option<usize> = None;
        for i in 0..labels.len() {
            if sizes[labels[i]] > 1 && donor.is_none_or(|d| dists[i] > dists[d]) {
                donor = Some(i);
            }
        }
        let donor = donor.ok_or(Error::EmptyCluster(empty))?;
        log::debug!("cluster {empty} empty; reseeding with item {donor}");
        labels[donor] = empty;
        dists[donor] = 0.0;
        centers[empty] = e.seed_center(donor)?;
    }
}

fn groups(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    out
}

/// Summed in item order so the value does not depend on evaluation order.
pub(crate) fn objective<E: Engine>(e: &E, labels: &[usize], centers: &[E::Center]) -> Result<f64> {
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        total += e.dist(i, &centers[l])?;
    }
    Ok(total)
}

pub(crate) fn lloyd<E: Engine>(e: &E, init: &[usize], max_iters: usize) -> Result<Run<E::Center>> {
    let k = init.len();
    let mut centers = init
        .iter()
        .map(|&i| e.seed_center(i))
        .collect::<Result<Vec<_>>>()?;
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut objective_value = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let (mut next, mut dists) = assign(e, &centers)?;
        repair_empty(e, &mut next, &mut dists, &mut centers)?;
        if next == labels {
            converged = true;
            break;
        }
        iterations += 1;
        centers = groups(&next, k)
            .iter()
            .map(|g| e.update(g))
            .collect::<Result<Vec<_>>>()?;
        objective_value = objective(e, &next, &centers)?;
        history.push(objective_value);
        labels = next;
    }
    Ok(Run {
        labels,
        centers,
        iterations,
        objective: objective_value,
        converged,
        history,
    })
}

/// Runs [`lloyd`] from every configured start and keeps the lowest objective
/// (the earliest run on exact ties).
pub(crate) fn best_of_restarts<E: Engine>(
    e: &E,
    cfg: &ClusterConfig,
) -> Result<(Run<E::Center>, f64)> {
    cfg.validate(e.len())?;
    let start = Instant::now();
    let mut best: Option<Run<E::Center>> = None;
    for init in cfg.initial_indices(e.len()) {
        let run = lloyd(e, &init, cfg.max_iters)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let run = best.expect("restarts >= 1");
    Ok((run, start.elapsed().as_secs_f64()))
}

pub(crate) fn into_result<C>(
    run: Run<C>,
    wall: f64,
    centers: impl FnOnce(Vec<C>) -> Centers,
) -> ClusteringResult {
    ClusteringResult {
        labels: run.labels,
        centers: centers(run.centers),
        iterations: run.iterations,
        objective: run.objective,
        wall_time_seconds: wall,
        converged: run.converged,
        objective_history: run.history,
    }
}
