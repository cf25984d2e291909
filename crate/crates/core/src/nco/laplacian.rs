use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::graph::WeightedGraph;
use crate::error::{Error, Result};

/// Spectrum of a normalized graph Laplacian, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub k_star: Option<usize>,
}

impl LaplacianSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// `L = B^{-1/2} (B − W) B^{-1/2}` with `B` the diagonal degree matrix.
pub fn laplacian_matrix(graph: &WeightedGraph) -> Result<DMatrix<f64>> {
    let w = graph.adjacency();
    let p = graph.nodes;
    let degree: Vec<f64> = (0..p).map(|i| w.row(i).sum()).collect();
    if let Some(i) = degree.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::IsolatedNode(i));
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|b| 1.0 / b.sqrt()).collect();
    Ok(DMatrix::from_fn(p, p, |i, j| {
        let off = -w[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 + off
        } else {
            off
        }
    }))
}

pub fn normalized_laplacian(graph: &WeightedGraph) -> Result<LaplacianSpectrum> {
    let l = laplacian_matrix(graph)?;
    let p = graph.nodes;
    let eig = SymmetricEigen::new(l);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(LaplacianSpectrum {
        eigenvalues: DVector::from_iterator(p, order.iter().map(|&k| eig.eigenvalues[k])),
        eigenvectors: DMatrix::from_fn(p, p, |i, k| eig.eigenvectors[(i, order[k])]),
        k_star: None,
    })
}

/// Absolute tolerance for treating two eigengaps as equal.
pub const GAP_TIE_TOLERANCE: f64 = 1e-9;

/// Cluster count at the largest gap `λ_{k+1} − λ_k` (1-based, ascending)
/// for `k` in `[2, min(k_max, p − 1)]`; ties go to the smaller `k`.
pub fn eigengap_k(spectrum: &LaplacianSpectrum, k_max: usize) -> Result<usize> {
    let p = spectrum.len();
    if p < 3 {
        return Err(Error::InvalidArgument(format!("eigengap selection needs at least 3 nodes, got {p}")));
    }
    let upper = k_max.min(p - 1);
    if upper < 2 {
        return Err(Error::InvalidArgument(format!("k_max = {k_max} leaves no admissible cluster count")));
    }
    let ev = &spectrum.eigenvalues;
    let mut best = 2;
    let mut best_gap = f64::NEG_INFINITY;
    for k in 2..=upper {
        let gap = ev[k] - ev[k - 1];
        // Gaps equal up to rounding count as ties and keep the smaller k.
        if gap > best_gap + GAP_TIE_TOLERANCE {
            best = k;
            best_gap = gap;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nco::graph::{Edge, GraphKind};

    fn graph(nodes: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
        WeightedGraph {
            nodes,
            edges: edges.iter().map(|&(a, b, weight)| Edge { a, b, weight }).collect(),
            kind: GraphKind::Affinity,
        }
    }

    fn spectrum(values: &[f64]) -> LaplacianSpectrum {
        let p = values.len();
        LaplacianSpectrum {
            eigenvalues: DVector::from_column_slice(values),
            eigenvectors: DMatrix::identity(p, p),
            k_star: None,
        }
    }

    #[test]
    fn two_node_path() {
        let s = normalized_laplacian(&graph(2, &[(0, 1, 1.0)])).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-15);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn three_node_star() {
        let s = normalized_laplacian(&graph(3, &[(0, 1, 1.0), (0, 2, 1.0)])).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn null_vector_is_root_degree() {
        let g = graph(4, &[(0, 1, 2.0), (1, 2, 0.5), (1, 3, 3.0)]);
        let s = normalized_laplacian(&g).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-12);
        let w = g.adjacency();
        let root: DVector<f64> = DVector::from_fn(4, |i, _| w.row(i).sum().sqrt()).normalize();
        let v = s.eigenvectors.column(0);
        assert!((v.dot(&root).abs() - 1.0).abs() < 1e-12);
        assert!(s.eigenvalues.iter().all(|&l| l > -1e-10 && l < 2.0 + 1e-10));
    }

    #[test]
    fn isolated_node_is_rejected() {
        assert!(matches!(normalized_laplacian(&graph(3, &[(0, 1, 1.0)])), Err(Error::IsolatedNode(2))));
    }

    #[test]
    fn eigengap_examples() {
        assert_eq!(eigengap_k(&spectrum(&[0.0, 0.01, 0.02, 0.9, 1.0]), 4).unwrap(), 3);
        assert_eq!(eigengap_k(&spectrum(&[0.0, 0.25, 0.5, 0.75, 1.0]), 4).unwrap(), 2);
        // k_max beyond p − 1 is clamped.
        assert_eq!(eigengap_k(&spectrum(&[0.0, 0.01, 0.02, 0.9, 1.0]), 50).unwrap(), 3);
        assert!(eigengap_k(&spectrum(&[0.0, 1.0]), 2).is_err());
        assert!(eigengap_k(&spectrum(&[0.0, 0.5, 1.0]), 1).is_err());
    }
}
