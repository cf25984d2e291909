use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::laplacian::LaplacianSpectrum;
use crate::error::{Error, Result};
use crate::rmt::CorrelationEstimate;

pub const KMEANS_RESTARTS: usize = 20;
pub const KMEANS_ROUNDS: usize = 5;
const KMEANS_MAX_ITER: usize = 300;

/// Cluster id per asset; ids run over `0..k` and are numbered in order of
/// each cluster's lowest asset index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl Clustering {
    /// Validates that every id in `0..k` is used and relabels canonically.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        let mut relabel = vec![usize::MAX; k];
        let mut next = 0;
        for &c in &assignment {
            if relabel[c] == usize::MAX {
                relabel[c] = next;
                next += 1;
            }
        }
        if next != k {
            return Err(Error::InvalidArgument(format!("cluster ids do not cover 0..{k}")));
        }
        Ok(Self { assignment: assignment.iter().map(|&c| relabel[c]).collect(), k })
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == cluster).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

struct KMeansFit {
    assignment: Vec<usize>,
    inertia: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: each new centre is drawn with probability
/// proportional to the squared distance to the nearest existing centre.
fn seed_centres(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centres = vec![points[rng.random_range(0..points.len())].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|x| squared_distance(x, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let centre = points[pick].clone();
        for (d, x) in nearest.iter_mut().zip(points) {
            *d = d.min(squared_distance(x, &centre));
        }
        centres.push(centre);
    }
    centres
}

/// One Lloyd run; `None` if a cluster ends up empty.
fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Option<KMeansFit> {
    let dim = points[0].len();
    let mut centres = seed_centres(points, k, rng);
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, x) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| squared_distance(x, &centres[a]).total_cmp(&squared_distance(x, &centres[b])))
                .expect("k >= 1");
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x) {
                *s += v;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for c in 0..k {
            centres[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().zip(&assignment).map(|(x, &c)| squared_distance(x, &centres[c])).sum();
    Some(KMeansFit { assignment, inertia })
}

/// Best-of-`KMEANS_RESTARTS` k-means on the rows of `points`. Each restart
/// draws from its own ChaCha stream so the result does not depend on
/// scheduling.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!("cannot form {k} clusters from {} points", points.len())));
    }
    for round in 0..KMEANS_ROUNDS {
        let fits: Vec<Option<KMeansFit>> = (0..KMEANS_RESTARTS)
            .into_par_iter()
            .map(|restart| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((round * KMEANS_RESTARTS + restart) as u64);
                lloyd(points, k, &mut rng)
            })
            .collect();
        let best = fits
            .into_iter()
            .flatten()
            .reduce(|best, fit| if fit.inertia < best.inertia { fit } else { best });
        if let Some(fit) = best {
            return Clustering::new(fit.assignment);
        }
        log::debug!("k-means round {round} produced only empty clusters; re-seeding");
    }
    Err(Error::EmptyCluster(KMEANS_ROUNDS))
}

/// Clusters the rows of the `p × k` matrix of the `k` smallest-eigenvalue
/// Laplacian eigenvectors, each row scaled to unit length.
pub fn spectral_cluster(spectrum: &LaplacianSpectrum, k: usize, seed: u64) -> Result<Clustering> {
    let p = spectrum.len();
    if k < 2 || k + 1 > p {
        return Err(Error::InvalidArgument(format!("cluster count {k} is outside [2, {}]", p.saturating_sub(1))));
    }
    let points: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let row: Vec<f64> = (0..k).map(|c| spectrum.eigenvectors[(i, c)]).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|v| v / norm).collect()
            } else {
                row
            }
        })
        .collect();
    kmeans(&points, k, seed)
}

/// Symmetric permutation placing each cluster's assets contiguously, in
/// cluster order and ascending index within a cluster. Returns the sorted
/// matrix and `order`, where `order[new] = old`.
pub fn sort_by_cluster(xi: &CorrelationEstimate, clustering: &Clustering) -> Result<(CorrelationEstimate, Vec<usize>)> {
    let p = xi.p();
    if clustering.assignment.len() != p {
        return Err(Error::InvalidArgument(format!(
            "clustering covers {} assets but the matrix has {p}",
            clustering.assignment.len()
        )));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by_key(|&i| (clustering.assignment[i], i));
    let matrix = DMatrix::from_fn(p, p, |i, j| xi.matrix[(order[i], order[j])]);
    Ok((CorrelationEstimate { matrix, ..xi.clone() }, order))
}
