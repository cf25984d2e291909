//! Nested clustered optimization on a spectral clustering of the
//! correlation MST.
//!
//! Pipeline: dissimilarity → minimum spanning tree → inverted weights →
//! normalized Laplacian → eigengap cluster count → k-means on the leading
//! eigenvectors → per-cluster minimum-variance weights → minimum-variance
//! weights across the cluster portfolios → product of the two layers.

mod cluster;
mod graph;
mod laplacian;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use cluster::{kmeans, sort_by_cluster, spectral_cluster, Clustering, KMEANS_RESTARTS, KMEANS_ROUNDS};
pub use graph::{
    affinity_from_mst, dissimilarity, dissimilarity_matrix, minimum_spanning_tree, DissimilarityMatrix, Edge,
    GraphKind, WeightedGraph, AFFINITY_EPSILON,
};
pub use laplacian::{eigengap_k, laplacian_matrix, normalized_laplacian, LaplacianSpectrum, GAP_TIE_TOLERANCE};

use crate::error::{Error, Result};
use crate::markowitz::{min_variance_weights, AllocationResult, GainSpec, Strategy};
use crate::rmt::CorrelationEstimate;

pub const DEFAULT_K_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcoConfig {
    /// Upper end of the eigengap search; capped at `p − 1`.
    pub k_max: usize,
    pub seed: u64,
}

impl NcoConfig {
    pub fn new(seed: u64) -> Self {
        Self { k_max: DEFAULT_K_MAX, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedWeights {
    /// Weights inside each cluster, ordered as `Clustering::members(c)`.
    pub w_intra: Vec<DVector<f64>>,
    pub w_inter: DVector<f64>,
    pub w_final: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct NcoAllocation {
    pub allocation: AllocationResult,
    pub nested: NestedWeights,
    pub clustering: Clustering,
    pub mst: WeightedGraph,
    pub k_star: usize,
}

impl NcoAllocation {
    pub fn diagnostics(&self) -> NcoDiagnostics {
        let mut clusters = BTreeMap::new();
        for c in 0..self.clustering.k {
            clusters.insert(c.to_string(), self.clustering.members(c));
        }
        NcoDiagnostics {
            clusters,
            mst_edges: self.mst.edges.iter().map(|e| (e.a, e.b, e.weight)).collect(),
            k_star: self.k_star,
        }
    }
}

/// JSON payload for external graph rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcoDiagnostics {
    /// Cluster id → asset indices.
    pub clusters: BTreeMap<String, Vec<usize>>,
    pub mst_edges: Vec<(usize, usize, f64)>,
    pub k_star: usize,
}

/// Full pipeline: cluster `xi`, then allocate in two layers.
pub fn nco_allocate(xi: &CorrelationEstimate, gain: &GainSpec, config: &NcoConfig) -> Result<NcoAllocation> {
    let p = xi.p();
    if p < 3 {
        return Err(Error::InvalidArgument(format!("nested allocation needs at least 3 assets, got {p}")));
    }
    let d = dissimilarity(xi)?;
    let mst = minimum_spanning_tree(&d)?;
    let affinity = affinity_from_mst(&mst);
    let mut spectrum = normalized_laplacian(&affinity)?;
    let k_star = eigengap_k(&spectrum, config.k_max)?;
    spectrum.k_star = Some(k_star);
    let clustering = spectral_cluster(&spectrum, k_star, config.seed)?;
    let (nested, gamma) = nested_with_gamma(xi, gain, &clustering)?;
    let allocation = AllocationResult {
        weights: nested.w_final.clone(),
        gamma,
        strategy: Strategy::Nco,
        estimator: xi.estimator,
    };
    Ok(NcoAllocation { allocation, nested, clustering, mst, k_star })
}

/// `S_cd = w_cᵀ Ξ[c, d] w_d`.
fn reduced_covariance(xi: &CorrelationEstimate, w_intra: &[DVector<f64>], clustering: &Clustering) -> DMatrix<f64> {
    let members: Vec<Vec<usize>> = (0..clustering.k).map(|c| clustering.members(c)).collect();
    let k = clustering.k;
    let mut s = DMatrix::zeros(k, k);
    for c in 0..k {
        for d in c..k {
            let mut acc = 0.0;
            for (a, &i) in members[c].iter().enumerate() {
                for (b, &j) in members[d].iter().enumerate() {
                    acc += w_intra[c][a] * xi.matrix[(i, j)] * w_intra[d][b];
                }
            }
            s[(c, d)] = acc;
            s[(d, c)] = acc;
        }
    }
    s
}

/// Two-layer allocation for a given clustering. Each cluster gets the
/// minimum-variance portfolio with gain target 1 on its own block; the
/// cluster portfolios are then combined with `g = 1_k` and target
/// `gain.target`.
pub fn nested_allocate(xi: &CorrelationEstimate, gain: &GainSpec, clustering: &Clustering) -> Result<NestedWeights> {
    nested_with_gamma(xi, gain, clustering).map(|(nested, _)| nested)
}

/// Also returns the multiplier of the inter-cluster solve.
fn nested_with_gamma(xi: &CorrelationEstimate, gain: &GainSpec, clustering: &Clustering) -> Result<(NestedWeights, f64)> {
    let p = xi.p();
    if clustering.assignment.len() != p || gain.len() != p {
        return Err(Error::InvalidArgument(format!(
            "clustering covers {} assets and gain {} but the matrix has {p}",
            clustering.assignment.len(),
            gain.len()
        )));
    }
    let mut w_intra = Vec::with_capacity(clustering.k);
    for c in 0..clustering.k {
        let members = clustering.members(c);
        let g = DVector::from_iterator(members.len(), members.iter().map(|&i| gain.g[i]));
        if members.len() == 1 {
            if g[0] == 0.0 {
                return Err(Error::NonPositiveGainForm(0.0));
            }
            w_intra.push(DVector::from_element(1, 1.0 / g[0]));
            continue;
        }
        let block = DMatrix::from_fn(members.len(), members.len(), |a, b| xi.matrix[(members[a], members[b])]);
        let (w, _) = min_variance_weights(&block, &GainSpec { g, target: 1.0 })?;
        w_intra.push(w);
    }

    let reduced = reduced_covariance(xi, &w_intra, clustering);
    let (w_inter, gamma) = min_variance_weights(&reduced, &GainSpec::minimum_variance(clustering.k, gain.target))?;

    let mut w_final = DVector::zeros(p);
    for c in 0..clustering.k {
        for (a, &i) in clustering.members(c).iter().enumerate() {
            w_final[i] = w_intra[c][a] * w_inter[c];
        }
    }
    Ok((NestedWeights { w_intra, w_inter, w_final }, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markowitz::optimal_weights;
    use crate::rmt::Estimator;

    fn estimate(matrix: DMatrix<f64>) -> CorrelationEstimate {
        CorrelationEstimate::new(matrix, Estimator::Naive, 50).unwrap()
    }

    fn block_diagonal(blocks: &[(usize, f64)]) -> DMatrix<f64> {
        let p: usize = blocks.iter().map(|b| b.0).sum();
        let mut m = DMatrix::identity(p, p);
        let mut start = 0;
        for &(size, rho) in blocks {
            for i in start..start + size {
                for j in start..start + size {
                    if i != j {
                        m[(i, j)] = rho;
                    }
                }
            }
            start += size;
        }
        m
    }

    #[test]
    fn identity_with_forced_clusters_is_uniform() {
        let xi = estimate(DMatrix::identity(4, 4));
        let clustering = Clustering::new(vec![0, 0, 1, 1]).unwrap();
        let nested = nested_allocate(&xi, &GainSpec::minimum_variance(4, 1.0), &clustering).unwrap();
        assert!(nested.w_final.iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn identical_blocks_split_evenly() {
        let xi = estimate(block_diagonal(&[(2, 0.6), (2, 0.6)]));
        let clustering = Clustering::new(vec![0, 0, 1, 1]).unwrap();
        let nested = nested_allocate(&xi, &GainSpec::minimum_variance(4, 1.0), &clustering).unwrap();
        assert!((nested.w_inter[0] - 0.5).abs() < 1e-15 && (nested.w_inter[1] - 0.5).abs() < 1e-15);
        for w in &nested.w_intra {
            assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn singleton_cluster_gets_unit_intra_weight() {
        let xi = estimate(block_diagonal(&[(3, 0.5), (1, 0.0)]));
        let clustering = Clustering::new(vec![0, 0, 0, 1]).unwrap();
        let nested = nested_allocate(&xi, &GainSpec::minimum_variance(4, 1.0), &clustering).unwrap();
        assert_eq!(nested.w_intra[1].as_slice(), &[1.0]);
        assert!((nested.w_final.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_blocks_and_matches_markowitz() {
        let xi = estimate(block_diagonal(&[(4, 0.7), (3, 0.4), (5, 0.8)]));
        let gain = GainSpec::minimum_variance(12, 1.0);
        let res = nco_allocate(&xi, &gain, &NcoConfig::new(1)).unwrap();
        assert_eq!(res.k_star, 3);
        assert_eq!(res.clustering.assignment, vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2]);
        let full = optimal_weights(&xi, &gain).unwrap();
        assert!((&res.allocation.weights - &full.weights).amax() < 1e-8);
        assert!((res.allocation.weights.sum() - 1.0).abs() < 1e-12);
        assert!((res.allocation.gamma - full.gamma).abs() < 1e-10);
        assert_eq!(res.allocation.strategy, Strategy::Nco);
        assert!(res.mst.is_spanning_tree());

        let diag = res.diagnostics();
        assert_eq!(diag.k_star, 3);
        assert_eq!(diag.clusters["1"], vec![4, 5, 6]);
        assert_eq!(diag.mst_edges.len(), 11);
    }

    #[test]
    fn gain_target_scales_weights() {
        let xi = estimate(block_diagonal(&[(3, 0.7), (3, 0.2)]));
        let a = nco_allocate(&xi, &GainSpec::minimum_variance(6, 1.0), &NcoConfig::new(4)).unwrap();
        let b = nco_allocate(&xi, &GainSpec::minimum_variance(6, 2.5), &NcoConfig::new(4)).unwrap();
        assert!((&b.allocation.weights - &a.allocation.weights * 2.5).amax() < 1e-12);
    }

    #[test]
    fn too_small_or_mismatched_inputs() {
        let xi = estimate(DMatrix::identity(2, 2));
        assert!(nco_allocate(&xi, &GainSpec::minimum_variance(2, 1.0), &NcoConfig::new(0)).is_err());
        let xi = estimate(DMatrix::identity(4, 4));
        let clustering = Clustering::new(vec![0, 1, 1]).unwrap();
        assert!(nested_allocate(&xi, &GainSpec::minimum_variance(4, 1.0), &clustering).is_err());
    }
}
