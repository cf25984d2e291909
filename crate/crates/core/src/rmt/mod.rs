//! Correlation estimation: the sample matrix, Tracy–Widom eigenvalue
//! clipping and linear shrinkage towards the identity, plus the spectral
//! tools they are built on.

mod estimators;
mod marchenko_pastur;
mod spectral;
mod tracy_widom;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use estimators::{
    linear_shrink, sample_correlation, shrinkage_intensity, tw_clip, tw_clip_with, ClipResult, ShrinkageResult,
};
pub use marchenko_pastur::MarchenkoPastur;
pub use spectral::{eigendecompose, max_asymmetry, SpectralDecomposition};
pub use tracy_widom::{tw_critical, tw_critical_with, tw_signal_count, TracyWidomTable, TracyWidomTest};

use crate::error::{Error, Result};
use crate::marketdata::ReturnPanel;

pub const DEFAULT_TW_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Naive,
    Linear,
    Tw,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Naive, Estimator::Linear, Estimator::Tw];

    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Naive => "naive",
            Estimator::Linear => "linear",
            Estimator::Tw => "tw",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(Estimator::Naive),
            "linear" => Ok(Estimator::Linear),
            "tw" => Ok(Estimator::Tw),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

/// A symmetric, unit-diagonal correlation matrix and the estimator that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub matrix: DMatrix<f64>,
    pub estimator: Estimator,
    /// Number of observations behind the estimate.
    pub n: usize,
}

impl CorrelationEstimate {
    pub fn new(matrix: DMatrix<f64>, estimator: Estimator, n: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument("correlation matrix must be square".into()));
        }
        let asym = max_asymmetry(&matrix);
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        if let Some(i) = (0..matrix.nrows()).find(|&i| (matrix[(i, i)] - 1.0).abs() > 1e-10) {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry {i} is {} rather than 1",
                matrix[(i, i)]
            )));
        }
        Ok(Self { matrix, estimator, n })
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> Result<SpectralDecomposition> {
        eigendecompose(&self.matrix)
    }
}

/// Rescales to exact unit diagonal, `D^{-1/2} M D^{-1/2}`.
pub fn to_correlation(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = matrix.nrows();
    let scale: Vec<f64> = (0..p)
        .map(|i| {
            let d = matrix[(i, i)];
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::ZeroVariance(format!("index {i}")))
            }
        })
        .collect::<Result<_>>()?;
    let mut out = DMatrix::from_fn(p, p, |i, j| matrix[(i, j)] * scale[i] * scale[j]);
    spectral::symmetrize(&mut out);
    for i in 0..p {
        out[(i, i)] = 1.0;
    }
    Ok(out)
}

/// Runs `estimator` on a standardized window.
pub fn estimate(window: &ReturnPanel, estimator: Estimator, tw_alpha: f64) -> Result<CorrelationEstimate> {
    let naive = sample_correlation(window)?;
    match estimator {
        Estimator::Naive => Ok(naive),
        Estimator::Linear => Ok(linear_shrink(&naive, window)?.estimate),
        Estimator::Tw => {
            let clip = tw_clip(&naive, tw_alpha)?;
            if clip.degenerate {
                log::warn!("every eigenvalue rejected the white null; returning the sample matrix unchanged");
            }
            Ok(clip.estimate)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.as_str().parse::<Estimator>().unwrap(), e);
        }
        assert!("ledoit".parse::<Estimator>().is_err());
        assert_eq!(serde_json::to_string(&Estimator::Tw).unwrap(), "\"tw\"");
    }

    #[test]
    fn correlation_estimate_validates_shape() {
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert!(CorrelationEstimate::new(ok, Estimator::Naive, 10).is_ok());
        let bad_diag = DMatrix::from_row_slice(2, 2, &[1.1, 0.3, 0.3, 1.0]);
        assert!(CorrelationEstimate::new(bad_diag, Estimator::Naive, 10).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]);
        assert!(matches!(CorrelationEstimate::new(asym, Estimator::Naive, 10), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn correlation_rescaling() {
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 1.0]);
        let corr = to_correlation(&cov).unwrap();
        assert_eq!(corr[(0, 0)], 1.0);
        assert!((corr[(0, 1)] - 0.5).abs() < 1e-15);
        assert!(to_correlation(&DMatrix::zeros(2, 2)).is_err());
    }
}
