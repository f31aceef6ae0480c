//! Spectral clustering of kernel matrices and partition-agreement metrics.
//!
//! NMI is normalized by the geometric mean of the two label entropies.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::random;
use crate::spectral::SymMatrix;

/// Degree floor for the normalized affinity.
pub const DEGREE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<usize>,
    c: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<usize>, c: usize) -> Result<Self> {
        if c == 0 || labels.len() < c {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= c <= n, got c = {c}, n = {}",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::InvalidArgument(format!("label {bad} is not below {c}")));
        }
        Ok(Self { labels, c })
    }

    /// Uses `max + 1` as the cluster count.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let c = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(labels, c)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn clusters(&self) -> usize {
        self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub nmi: f64,
    pub ari: f64,
    pub acc: f64,
}

/// All three metrics for a predicted partition against the truth.
pub fn evaluate(predicted: &ClusterLabels, truth: &ClusterLabels) -> Result<MetricReport> {
    Ok(MetricReport {
        nmi: nmi(predicted, truth)?,
        ari: ari(predicted, truth)?,
        acc: acc(predicted, truth)?,
    })
}

fn contingency(a: &ClusterLabels, b: &ClusterLabels) -> Result<DMatrix<f64>> {
    if a.n() != b.n() {
        return Err(Error::LengthMismatch(a.n(), b.n()));
    }
    let mut table = DMatrix::zeros(a.c, b.c);
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        table[(x, y)] += 1.0;
    }
    Ok(table)
}

fn entropy_of(counts: impl Iterator<Item = f64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0.0)
        .map(|c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(a; b) / sqrt(H(a) H(b))`; 1 when both partitions are a single cluster.
pub fn nmi(a: &ClusterLabels, b: &ClusterLabels) -> Result<f64> {
    let t = contingency(a, b)?;
    let n = a.n() as f64;
    let rows: Vec<f64> = t.row_iter().map(|r| r.sum()).collect();
    let cols: Vec<f64> = t.column_iter().map(|c| c.sum()).collect();
    let ha = entropy_of(rows.iter().copied(), n);
    let hb = entropy_of(cols.iter().copied(), n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for i in 0..t.nrows() {
        for j in 0..t.ncols() {
            let nij = t[(i, j)];
            if nij > 0.0 {
                mi += nij / n * (n * nij / (rows[i] * cols[j])).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from pair counts; 1 when the denominator vanishes.
pub fn ari(a: &ClusterLabels, b: &ClusterLabels) -> Result<f64> {
    let t = contingency(a, b)?;
    let n = a.n() as f64;
    let index: f64 = t.iter().map(|&x| comb2(x)).sum();
    let sa: f64 = t.row_iter().map(|r| comb2(r.sum())).sum();
    let sb: f64 = t.column_iter().map(|c| comb2(c.sum())).sum();
    let expected = sa * sb / comb2(n);
    let max = 0.5 * (sa + sb);
    let denom = max - expected;
    if denom.abs() < 1e-300 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Accuracy under the best one-to-one matching of predicted to true labels.
pub fn acc(predicted: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    let t = contingency(predicted, truth)?;
    let c = t.nrows().max(t.ncols());
    let weights = DMatrix::from_fn(
        c,
        c,
        |i, j| {
            if i < t.nrows() && j < t.ncols() {
                t[(i, j)]
            } else {
                0.0
            }
        },
    );
    let assignment = max_weight_assignment(&weights);
    let matched: f64 = assignment.iter().enumerate().map(|(i, &j)| weights[(i, j)]).sum();
    Ok(matched / predicted.n() as f64)
}

/// Hungarian algorithm on a square weight matrix, maximizing total weight.
///
/// Returns `assignment[row] = column`. Runs in `O(c^3)`.
pub fn max_weight_assignment(weights: &DMatrix<f64>) -> Vec<usize> {
    let n = weights.nrows();
    assert_eq!(n, weights.ncols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    let top = weights.max();
    let cost = |i: usize, j: usize| top - weights[(i, j)];
    // 1-based potentials over rows (u) and columns (v); p[j] is the row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansSettings {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for KMeansSettings {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding, best inertia over restarts.
///
/// Ties in inertia keep the earliest restart.
pub fn kmeans(points: &[Vec<f64>], k: usize, settings: KMeansSettings, seed: u64) -> Result<KMeansResult> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in [1, {n}]")));
    }
    let mut rng = random::rng(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..settings.restarts.max(1) {
        let mut centers = kmeans_pp(points, k, &mut rng);
        let mut labels = vec![0; n];
        for _ in 0..settings.max_iters {
            let mut changed = false;
            for (i, p) in points.iter().enumerate() {
                let nearest = nearest_center(p, &centers).0;
                if nearest != labels[i] {
                    labels[i] = nearest;
                    changed = true;
                }
            }
            let dim = points[0].len();
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &l) in points.iter().zip(&labels) {
                counts[l] += 1;
                sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
            }
            for c in 0..k {
                if counts[c] > 0 {
                    centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                }
            }
            if !changed {
                break;
            }
        }
        for (i, p) in points.iter().enumerate() {
            labels[i] = nearest_center(p, &centers).0;
        }
        let inertia: f64 = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KMeansResult { labels, inertia });
        }
    }
    Ok(best.expect("at least one restart"))
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(c, ctr)| (c, sq_dist(p, ctr)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
}

fn kmeans_pp<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    if target < d {
                        pick = i;
                        break;
                    }
                    target -= d;
                }
            }
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // fewer distinct points than clusters
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Spectral embedding: top-`c` eigenvectors of `D^-1/2 max(K, 0) D^-1/2`
/// with rows scaled to unit length.
pub fn spectral_embedding(k: &SymMatrix, c: usize) -> Result<Vec<Vec<f64>>> {
    let n = k.dim();
    if c == 0 || c > n {
        return Err(Error::InvalidArgument(format!("c = {c} must lie in [1, {n}]")));
    }
    let a = k.as_matrix().map(|x| x.max(0.0));
    let mut inv_sqrt = Vec::with_capacity(n);
    for (i, row) in a.row_iter().enumerate() {
        let d = row.sum();
        if d < DEGREE_FLOOR {
            return Err(Error::DegenerateAffinity(i));
        }
        inv_sqrt.push(1.0 / d.sqrt());
    }
    let norm = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let eig = SymMatrix::symmetrized(norm).eigen()?;
    let top = eig.vectors.columns(n - c, c);
    Ok(top
        .row_iter()
        .map(|row| {
            let len = row.norm();
            row.iter().map(|x| if len > 0.0 { x / len } else { 0.0 }).collect()
        })
        .collect())
}

/// Spectral clustering with the default k-means settings.
pub fn spectral_cluster(k: &SymMatrix, c: usize, seed: u64) -> Result<ClusterLabels> {
    spectral_cluster_with(k, c, KMeansSettings::default(), seed)
}

pub fn spectral_cluster_with(k: &SymMatrix, c: usize, settings: KMeansSettings, seed: u64) -> Result<ClusterLabels> {
    let points = spectral_embedding(k, c)?;
    let km = kmeans(&points, c, settings, seed)?;
    ClusterLabels::new(km.labels, c)
}
