//! External clustering scores against ground truth: accuracy under the best
//! one-to-one label alignment, NMI (base 2) and ARI.

use itertools::Itertools;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Above this many labels on either side, accuracy uses the Hungarian method
/// instead of enumerating permutations.
pub const EXHAUSTIVE_MAX_K: usize = 8;

/// `counts[i][j]` = number of items with predicted label `i` and true label `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let cols = counts.first().map_or(0, Vec::len);
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..cols)
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        let total = row_sums.iter().sum();
        ContingencyTable {
            counts,
            row_sums,
            col_sums,
            total,
        }
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.col_sums.len()
    }
}

pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<ContingencyTable> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let k = pred.iter().max().map_or(0, |m| m + 1);
    let k_true = truth.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0u64; k_true]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    Ok(ContingencyTable::from_counts(counts))
}

/// Best one-to-one pairing of predicted to true labels. Entry `i` is the
/// true label matched to predicted label `i`, if any.
pub fn best_alignment(tbl: &ContingencyTable) -> (u64, Vec<Option<usize>>) {
    let (r, c) = (tbl.rows(), tbl.cols());
    if r == 0 || c == 0 {
        return (0, vec![None; r]);
    }
    if r.max(c) <= EXHAUSTIVE_MAX_K {
        exhaustive_alignment(tbl)
    } else {
        hungarian_alignment(tbl)
    }
}

fn exhaustive_alignment(tbl: &ContingencyTable) -> (u64, Vec<Option<usize>>) {
    let (r, c) = (tbl.rows(), tbl.cols());
    let mut best = (0u64, vec![None; r]);
    let mut first = true;
    if r <= c {
        for perm in (0..c).permutations(r) {
            let s: u64 = perm
                .iter()
                .enumerate()
                .map(|(i, &j)| tbl.counts[i][j])
                .sum();
            if first || s > best.0 {
                best = (s, perm.into_iter().map(Some).collect());
                first = false;
            }
        }
    } else {
        for perm in (0..r).permutations(c) {
            let s: u64 = perm
                .iter()
                .enumerate()
                .map(|(j, &i)| tbl.counts[i][j])
                .sum();
            if first || s > best.0 {
                let mut map = vec![None; r];
                for (j, &i) in perm.iter().enumerate() {
                    map[i] = Some(j);
                }
                best = (s, map);
                first = false;
            }
        }
    }
    best
}

fn hungarian_alignment(tbl: &ContingencyTable) -> (u64, Vec<Option<usize>>) {
    let (r, c) = (tbl.rows(), tbl.cols());
    let weight = |i: usize, j: usize| tbl.counts[i][j] as i64;
    let mut map = vec![None; r];
    let total = if r <= c {
        let m = Matrix::from_fn(r, c, |(i, j)| weight(i, j));
        let (total, assign) = kuhn_munkres(&m);
        for (i, j) in assign.into_iter().enumerate() {
            map[i] = Some(j);
        }
        total
    } else {
        let m = Matrix::from_fn(c, r, |(j, i)| weight(i, j));
        let (total, assign) = kuhn_munkres(&m);
        for (j, i) in assign.into_iter().enumerate() {
            map[i] = Some(j);
        }
        total
    };
    (total as u64, map)
}

pub fn accuracy(tbl: &ContingencyTable) -> f64 {
    if tbl.total == 0 {
        return 0.0;
    }
    best_alignment(tbl).0 as f64 / tbl.total as f64
}

/// Sum of `terms` in ascending order, so equal multisets give equal sums.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn entropy(sizes: &[u64], n: f64) -> f64 {
    -sorted_sum(
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                p * p.log2()
            })
            .collect(),
    )
}

/// `2 I(C*; C) / (H(C*) + H(C))`, with `I = H(C*) - H(C* | C)`.
/// Two single-cluster partitions score 1.
pub fn nmi(tbl: &ContingencyTable) -> f64 {
    let n = tbl.total as f64;
    if tbl.total == 0 {
        return 1.0;
    }
    let h_true = entropy(&tbl.col_sums, n);
    let h_pred = entropy(&tbl.row_sums, n);
    if h_true + h_pred == 0.0 {
        return 1.0;
    }
    let mut cond = Vec::new();
    for (i, row) in tbl.counts.iter().enumerate() {
        let a = tbl.row_sums[i] as f64;
        for &nij in row.iter().filter(|&&x| x > 0) {
            let q = nij as f64 / a;
            cond.push(a / n * q * q.log2());
        }
    }
    let h_cond = -sorted_sum(cond);
    let mutual = h_true - h_cond;
    (2.0 * mutual / (h_true + h_pred)).clamp(0.0, 1.0)
}

fn choose2(x: u64) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

/// Adjusted Rand index from pair counts; numerator and denominator are
/// formed in exact integer arithmetic before the final division.
pub fn ari(tbl: &ContingencyTable) -> f64 {
    let pairs = choose2(tbl.total);
    let index: i128 = tbl.counts.iter().flatten().map(|&x| choose2(x)).sum();
    let sa: i128 = tbl.row_sums.iter().map(|&x| choose2(x)).sum();
    let sb: i128 = tbl.col_sums.iter().map(|&x| choose2(x)).sum();
    // both scaled by 2 * pairs
    let num = 2 * (index * pairs - sa * sb);
    let den = (sa + sb) * pairs - 2 * sa * sb;
    if den == 0 {
        return 1.0;
    }
    num as f64 / den as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub nmi: f64,
    pub ari: f64,
    pub alignment: Vec<Option<usize>>,
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<EvalReport> {
    let tbl = contingency(pred, truth)?;
    let (matched, alignment) = best_alignment(&tbl);
    Ok(EvalReport {
        accuracy: if tbl.total == 0 {
            0.0
        } else {
            matched as f64 / tbl.total as f64
        },
        nmi: nmi(&tbl),
        ari: ari(&tbl),
        alignment,
    })
}
