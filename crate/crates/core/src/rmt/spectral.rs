use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order and
/// eigenvector `k` stored in column `k`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(values) Vᵀ` with this decomposition's eigenvectors.
    pub fn rebuild_with(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dimension(), self.dimension(), |i, k| {
            self.eigenvectors[(i, k)] * values[k]
        });
        let mut out = scaled * self.eigenvectors.transpose();
        symmetrize(&mut out);
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.rebuild_with(&self.eigenvalues)
    }

    /// Largest over smallest eigenvalue; infinite when the smallest is not positive.
    pub fn condition_number(&self) -> f64 {
        let max = self.eigenvalues[0];
        let min = self.eigenvalues[self.dimension() - 1];
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

pub fn max_asymmetry(matrix: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..matrix.nrows() {
        for j in (i + 1)..matrix.ncols() {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(matrix: &mut DMatrix<f64>) {
    for i in 0..matrix.nrows() {
        for j in (i + 1)..matrix.ncols() {
            let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg;
        }
    }
}

/// Sorted eigendecomposition of a symmetric matrix.
pub fn eigendecompose(matrix: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "expected a non-empty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let asym = max_asymmetry(matrix);
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let mut sym = matrix.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);

    let p = matrix.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    // Ties keep the solver's order so the result stays deterministic.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(p, order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = DMatrix::from_fn(p, p, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let s = eigendecompose(&DMatrix::identity(3, 3)).unwrap();
        assert!(s.eigenvalues.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn diagonal_spectrum_is_axis_aligned() {
        let s = eigendecompose(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert_eq!(s.eigenvalues.as_slice(), &[3.0, 1.0]);
        assert!((s.eigenvectors[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(s.eigenvectors[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn two_by_two_correlation() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let s = eigendecompose(&m).unwrap();
        assert!((s.eigenvalues[0] - 1.5).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 0.5).abs() < 1e-14);
        assert!((s.reconstruct() - m).amax() < 1e-12);
        assert!((s.condition_number() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(eigendecompose(&m), Err(Error::NotSymmetric(_))));
        assert!(eigendecompose(&DMatrix::zeros(2, 3)).is_err());
    }
}
