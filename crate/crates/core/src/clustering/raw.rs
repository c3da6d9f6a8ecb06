//! Classical K-means and K-medoids on raw points, squared Euclidean cost.

use nalgebra::{DMatrix, DVector};

use super::{best_of_restarts, into_result, Centers, ClusterConfig, ClusteringResult, Engine};
use crate::error::Result;

/// Rows of an `M x n` matrix, stored contiguously.
struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    fn new(points: &DMatrix<f64>) -> Self {
        let dim = points.ncols();
        let mut data = Vec::with_capacity(points.len());
        for r in points.row_iter() {
            data.extend(r.iter());
        }
        Points { data, dim }
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Means(Points);

impl Means {
    fn mean_of(points: &Points, members: &[usize]) -> Vec<f64> {
        let mut acc = vec![0.0; points.dim];
        for &i in members {
            for (a, x) in acc.iter_mut().zip(points.row(i)) {
                *a += x;
            }
        }
        let n = members.len() as f64;
        acc.into_iter().map(|a| a / n).collect()
    }
}

impl Engine for Means {
    type Center = Vec<f64>;

    fn len(&self) -> usize {
        self.0.len()
    }

    fn seed_center(&self, idx: usize) -> Result<Vec<f64>> {
        Ok(self.0.row(idx).to_vec())
    }

    fn update(&self, members: &[usize]) -> Result<Vec<f64>> {
        Ok(Means::mean_of(&self.0, members))
    }

    fn dist(&self, i: usize, center: &Vec<f64>) -> Result<f64> {
        Ok(sq_dist(self.0.row(i), center))
    }
}

struct Medoids(Points);

impl Engine for Medoids {
    type Center = usize;

    fn len(&self) -> usize {
        self.0.len()
    }

    fn seed_center(&self, idx: usize) -> Result<usize> {
        Ok(idx)
    }

    /// For squared Euclidean cost, `sum_j |c - x_j|^2 = |S| |c - mean|^2 +
    /// sum_j |x_j - mean|^2`, so the medoid is the member closest to the
    /// cluster mean. Same argmin as the O(c^2) search, in O(c).
    fn update(&self, members: &[usize]) -> Result<usize> {
        let mean = Means::mean_of(&self.0, members);
        let mut best = (members[0], f64::INFINITY);
        for &c in members {
            let d = sq_dist(self.0.row(c), &mean);
            if d < best.1 {
                best = (c, d);
            }
        }
        Ok(best.0)
    }

    fn dist(&self, i: usize, center: &usize) -> Result<f64> {
        Ok(sq_dist(self.0.row(i), self.0.row(*center)))
    }
}

/// Lloyd's K-means on the rows of `points`.
pub fn kmeans_raw(points: &DMatrix<f64>, cfg: &ClusterConfig) -> Result<ClusteringResult> {
    let engine = Means(Points::new(points));
    let (run, wall) = best_of_restarts(&engine, cfg)?;
    Ok(into_result(run, wall, |c| {
        Centers::Points(c.into_iter().map(DVector::from_vec).collect())
    }))
}

/// Voronoi-iteration K-medoids on the rows of `points`; the medoid of a
/// cluster is the member with the smallest sum of squared distances to the
/// other members.
pub fn kmedoids_raw(points: &DMatrix<f64>, cfg: &ClusterConfig) -> Result<ClusteringResult> {
    let engine = Medoids(Points::new(points));
    let (run, wall) = best_of_restarts(&engine, cfg)?;
    Ok(into_result(run, wall, Centers::Medoids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Init;
    use crate::error::Error;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k_equals_m_gives_zero_objective() {
        let pts = dmatrix![0.0, 1.0; 3.0, 2.0; -1.0, 5.0];
        let cfg = ClusterConfig::new(3, 1);
        assert_eq!(kmeans_raw(&pts, &cfg).unwrap().objective, 0.0);
        assert_eq!(kmedoids_raw(&pts, &cfg).unwrap().objective, 0.0);
    }

    #[test]
    fn two_blobs() {
        let pts = dmatrix![0.0; 0.1; 10.0; 10.1];
        let r = kmeans_raw(&pts, &ClusterConfig::new(2, 3)).unwrap();
        let Centers::Points(c) = &r.centers else {
            panic!()
        };
        let mut xs: Vec<f64> = c.iter().map(|v| v[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_relative_eq!(xs[0], 0.05, epsilon = 1e-12);
        assert_relative_eq!(xs[1], 10.05, epsilon = 1e-12);
        assert_relative_eq!(r.objective, 0.01, epsilon = 1e-12);
        // exhaustive over all 2-cluster assignments
        let vals = [0.0, 0.1, 10.0, 10.1];
        let mut best = f64::INFINITY;
        for mask in 1u32..15 {
            let mut sse = 0.0;
            for side in [true, false] {
                let g: Vec<f64> = (0..4)
                    .filter(|b| (mask >> b & 1 == 1) == side)
                    .map(|b| vals[b])
                    .collect();
                let m = g.iter().sum::<f64>() / g.len() as f64;
                sse += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
            }
            best = best.min(sse);
        }
        assert_relative_eq!(r.objective, best, epsilon = 1e-12);
    }

    #[test]
    fn medoid_of_three_points() {
        let pts = dmatrix![0.0; 1.0; 10.0];
        let r = kmedoids_raw(&pts, &ClusterConfig::new(1, 0)).unwrap();
        assert_eq!(r.centers, Centers::Medoids(vec![1]));
        assert_eq!(r.objective, 82.0);
    }

    #[test]
    fn medoid_update_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = rng.random_range(1..60);
            let dim = rng.random_range(1..8);
            let pts = DMatrix::from_fn(m, dim, |_, _| rng.random_range(-5.0..5.0));
            let e = Medoids(Points::new(&pts));
            let members: Vec<usize> = (0..m).collect();
            let cost = |c: usize| members.iter().map(|&j| e.dist(j, &c).unwrap()).sum::<f64>();
            let want = members
                .iter()
                .copied()
                .min_by(|&a, &b| cost(a).total_cmp(&cost(b)))
                .unwrap();
            assert_eq!(e.update(&members).unwrap(), want);
        }
    }

    #[test]
    fn objective_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = DMatrix::from_fn(300, 2, |_, _| rng.random_range(-5.0..5.0));
        for f in [kmeans_raw, kmedoids_raw] {
            let r = f(&pts, &ClusterConfig::new(5, 4)).unwrap();
            for w in r.objective_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs());
            }
            assert!(r.cluster_sizes().iter().all(|&s| s > 0));
        }
    }

    #[test]
    fn given_indices_and_errors() {
        let pts = dmatrix![0.0; 1.0; 5.0; 6.0];
        let mut cfg = ClusterConfig::new(2, 0);
        cfg.init = Init::GivenIndices(vec![0, 2]);
        let r = kmeans_raw(&pts, &cfg).unwrap();
        assert_eq!(r.labels, vec![0, 0, 1, 1]);
        assert!(matches!(
            kmeans_raw(&pts, &ClusterConfig::new(5, 0)),
            Err(Error::KTooLarge { .. })
        ));
    }
}
