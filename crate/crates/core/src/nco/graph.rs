use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::CorrelationEstimate;

/// Distances below this are treated as this value when inverting weights.
pub const AFFINITY_EPSILON: f64 = 1e-8;

/// `D_ij = sqrt((1 − Ξ_ij) / 2)`, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix(pub DMatrix<f64>);

impl DissimilarityMatrix {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }
}

pub fn dissimilarity(xi: &CorrelationEstimate) -> Result<DissimilarityMatrix> {
    dissimilarity_matrix(&xi.matrix)
}

pub fn dissimilarity_matrix(corr: &DMatrix<f64>) -> Result<DissimilarityMatrix> {
    let p = corr.nrows();
    if let Some(bad) = corr.iter().find(|v| !(v.abs() <= 1.0 + 1e-9)) {
        return Err(Error::InvalidArgument(format!("correlation entry {bad} lies outside [-1, 1]")));
    }
    let d = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            0.0
        } else {
            (0.5 * (1.0 - corr[(i, j)].clamp(-1.0, 1.0))).sqrt()
        }
    });
    Ok(DissimilarityMatrix(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Mst,
    Affinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub nodes: usize,
    pub edges: Vec<Edge>,
    pub kind: GraphKind,
}

impl WeightedGraph {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Dense symmetric weight matrix.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.nodes, self.nodes);
        for e in &self.edges {
            w[(e.a, e.b)] += e.weight;
            w[(e.b, e.a)] += e.weight;
        }
        w
    }

    pub fn is_spanning_tree(&self) -> bool {
        if self.nodes == 0 || self.edges.len() != self.nodes - 1 {
            return false;
        }
        let mut sets = DisjointSets::new(self.nodes);
        self.edges.iter().all(|e| sets.union(e.a, e.b))
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal over the complete graph; ties broken by `(weight, a, b)` so the
/// tree is unique.
pub fn minimum_spanning_tree(d: &DissimilarityMatrix) -> Result<WeightedGraph> {
    let p = d.len();
    if p < 2 {
        return Err(Error::InvalidArgument(format!("a spanning tree needs at least 2 nodes, got {p}")));
    }
    let mut candidates = Vec::with_capacity(p * (p - 1) / 2);
    for a in 0..p {
        for b in (a + 1)..p {
            candidates.push(Edge { a, b, weight: d.0[(a, b)] });
        }
    }
    candidates.sort_by(|x, y| x.weight.total_cmp(&y.weight).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b)));
    let mut sets = DisjointSets::new(p);
    let mut edges = Vec::with_capacity(p - 1);
    for e in candidates {
        if sets.union(e.a, e.b) {
            edges.push(e);
            if edges.len() == p - 1 {
                break;
            }
        }
    }
    Ok(WeightedGraph { nodes: p, edges, kind: GraphKind::Mst })
}

/// Same topology with every weight `w` replaced by `1 / max(w, ε)`.
pub fn affinity_from_mst(tree: &WeightedGraph) -> WeightedGraph {
    let edges = tree
        .edges
        .iter()
        .map(|e| Edge { weight: 1.0 / e.weight.max(AFFINITY_EPSILON), ..*e })
        .collect();
    WeightedGraph { nodes: tree.nodes, edges, kind: GraphKind::Affinity }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmt::Estimator;

    #[test]
    fn dissimilarity_examples() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, -1.0, 1.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
        let d = dissimilarity(&CorrelationEstimate { matrix: m, estimator: Estimator::Naive, n: 1 }).unwrap();
        assert_eq!(d.0[(0, 1)], 0.0);
        assert_eq!(d.0[(0, 2)], 1.0);
        assert!((d.0[(1, 2)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((0..3).all(|i| d.0[(i, i)] == 0.0));

        let out_of_range = DMatrix::from_row_slice(2, 2, &[1.0, 1.1, 1.1, 1.0]);
        assert!(dissimilarity_matrix(&out_of_range).is_err());
        let rounding = DMatrix::from_row_slice(2, 2, &[1.0, 1.0 + 1e-12, 1.0 + 1e-12, 1.0]);
        assert_eq!(dissimilarity_matrix(&rounding).unwrap().0[(0, 1)], 0.0);
    }

    #[test]
    fn two_node_tree() {
        let d = DissimilarityMatrix(DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.4, 0.0]));
        let t = minimum_spanning_tree(&d).unwrap();
        assert_eq!(t.edges, vec![Edge { a: 0, b: 1, weight: 0.4 }]);
        assert!(t.is_spanning_tree());
        assert!(minimum_spanning_tree(&DissimilarityMatrix(DMatrix::zeros(1, 1))).is_err());
    }

    #[test]
    fn three_node_tree() {
        let d = DissimilarityMatrix(DMatrix::from_row_slice(3, 3, &[0.0, 0.1, 0.2, 0.1, 0.0, 0.3, 0.2, 0.3, 0.0]));
        let t = minimum_spanning_tree(&d).unwrap();
        let pairs: Vec<(usize, usize)> = t.edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
        assert!((t.total_weight() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn ties_resolve_by_index() {
        let d = DissimilarityMatrix(DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 0.5 }));
        let t = minimum_spanning_tree(&d).unwrap();
        let pairs: Vec<(usize, usize)> = t.edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn affinity_inverts_weights() {
        let tree = WeightedGraph {
            nodes: 4,
            edges: vec![
                Edge { a: 0, b: 1, weight: 0.5 },
                Edge { a: 1, b: 2, weight: 1.0 },
                Edge { a: 2, b: 3, weight: 0.0 },
            ],
            kind: GraphKind::Mst,
        };
        let aff = affinity_from_mst(&tree);
        let weights: Vec<f64> = aff.edges.iter().map(|e| e.weight).collect();
        assert_eq!(weights, vec![2.0, 1.0, 1e8]);
        assert_eq!(aff.kind, GraphKind::Affinity);
        assert_eq!(aff.adjacency()[(3, 2)], 1e8);
    }
}
