use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Limiting spectral law of a white sample correlation matrix with ratio
/// `q = p / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoPastur {
    pub q: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl MarchenkoPastur {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidArgument(format!("ratio q = {q} is outside (0, 1)")));
        }
        let root = q.sqrt();
        Ok(Self { q, lambda_minus: (1.0 - root).powi(2), lambda_plus: (1.0 + root).powi(2) })
    }

    pub fn density(&self, lambda: f64) -> f64 {
        if lambda <= self.lambda_minus || lambda >= self.lambda_plus {
            return 0.0;
        }
        ((self.lambda_plus - lambda) * (lambda - self.lambda_minus)).sqrt() / (2.0 * PI * self.q * lambda)
    }

    pub fn contains(&self, lambda: f64, margin: f64) -> bool {
        lambda >= self.lambda_minus - margin && lambda <= self.lambda_plus + margin
    }

    /// Fraction of `eigenvalues` outside the support widened by `margin`.
    pub fn violation_fraction(&self, eigenvalues: &[f64], margin: f64) -> f64 {
        if eigenvalues.is_empty() {
            return 0.0;
        }
        let outside = eigenvalues.iter().filter(|&&l| !self.contains(l, margin)).count();
        outside as f64 / eigenvalues.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson after the substitution λ = a + (b − a)(1 − cos θ)/2,
    /// which removes the square-root endpoint singularities.
    fn integrate_density(mp: &MarchenkoPastur, steps: usize) -> f64 {
        let (a, b) = (mp.lambda_minus, mp.lambda_plus);
        let f = |theta: f64| {
            let lambda = a + (b - a) * (1.0 - theta.cos()) / 2.0;
            mp.density(lambda) * (b - a) * theta.sin() / 2.0
        };
        let h = PI / steps as f64;
        let mut sum = f(0.0) + f(PI);
        for k in 1..steps {
            sum += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    }

    #[test]
    fn edges() {
        let mp = MarchenkoPastur::new(0.25).unwrap();
        assert!((mp.lambda_minus - 0.25).abs() < 1e-15);
        assert!((mp.lambda_plus - 2.25).abs() < 1e-15);

        let mp = MarchenkoPastur::new(0.5).unwrap();
        assert!((mp.lambda_minus - 0.085_786_437_626_904_95).abs() < 1e-12);
        assert!((mp.lambda_plus - 2.914_213_562_373_095).abs() < 1e-12);
        assert_eq!(mp.density(mp.lambda_minus), 0.0);
        assert_eq!(mp.density(mp.lambda_plus), 0.0);
        assert_eq!(mp.density(5.0), 0.0);
    }

    #[test]
    fn density_integrates_to_one() {
        for q in [0.1, 0.25, 0.5, 0.9] {
            let mp = MarchenkoPastur::new(q).unwrap();
            assert!((integrate_density(&mp, 2000) - 1.0).abs() < 1e-6, "q = {q}");
        }
    }

    #[test]
    fn rejects_ratio_outside_unit_interval() {
        for q in [0.0, 1.0, -0.3, 2.0, f64::NAN] {
            assert!(MarchenkoPastur::new(q).is_err());
        }
    }
}
