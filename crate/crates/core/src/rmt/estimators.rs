use nalgebra::{DMatrix, DVector};

use super::{eigendecompose, to_correlation, tw_critical, tw_signal_count, CorrelationEstimate, Estimator, TracyWidomTest};
use crate::error::{Error, Result};
use crate::marketdata::ReturnPanel;

/// `E = (1/n) R Rᵀ`, rescaled to an exact unit diagonal.
pub fn sample_correlation(window: &ReturnPanel) -> Result<CorrelationEstimate> {
    if !window.standardized {
        return Err(Error::InvalidArgument("sample correlation expects a standardized window".into()));
    }
    let n = window.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least two observations, got {n}")));
    }
    let r = &window.returns;
    let mut e = r * r.transpose();
    e /= n as f64;
    if let Some(i) = (0..e.nrows()).find(|&i| !(e[(i, i)] > 0.0)) {
        return Err(Error::ZeroVariance(window.tickers[i].clone()));
    }
    Ok(CorrelationEstimate { matrix: to_correlation(&e)?, estimator: Estimator::Naive, n })
}

#[derive(Debug, Clone)]
pub struct ClipResult {
    pub estimate: CorrelationEstimate,
    /// Leading eigenvalues that rejected the white null.
    pub signals: usize,
    /// Eigenvalues after clipping, before the unit-diagonal rescaling.
    pub clipped_eigenvalues: DVector<f64>,
    /// Every eigenvalue rejected the null; the sample matrix is returned as is.
    pub degenerate: bool,
}

/// Tracy–Widom eigenvalue clipping at significance `alpha`.
pub fn tw_clip(e: &CorrelationEstimate, alpha: f64) -> Result<ClipResult> {
    let test = tw_critical(e.n, e.p(), alpha)?;
    tw_clip_with(e, &test)
}

/// Keeps the eigenvalues that reject the null, replaces the rest by their
/// average, rebuilds with the sample eigenvectors and rescales to unit
/// diagonal.
pub fn tw_clip_with(e: &CorrelationEstimate, test: &TracyWidomTest) -> Result<ClipResult> {
    if e.estimator != Estimator::Naive {
        return Err(Error::InvalidArgument(format!("clipping expects a naive estimate, got {}", e.estimator)));
    }
    if test.p != e.p() {
        return Err(Error::InvalidArgument(format!("test dimension {} does not match matrix dimension {}", test.p, e.p())));
    }
    let spectrum = eigendecompose(&e.matrix)?;
    let p = e.p();
    let signals = tw_signal_count(&spectrum, test);
    if signals == p {
        return Ok(ClipResult {
            estimate: CorrelationEstimate { estimator: Estimator::Tw, ..e.clone() },
            signals,
            clipped_eigenvalues: spectrum.eigenvalues,
            degenerate: true,
        });
    }
    let mut clipped = spectrum.eigenvalues.clone();
    let noise = clipped.rows(signals, p - signals).sum() / (p - signals) as f64;
    clipped.rows_mut(signals, p - signals).fill(noise);
    let rebuilt = spectrum.rebuild_with(&clipped);
    Ok(ClipResult {
        estimate: CorrelationEstimate { matrix: to_correlation(&rebuilt)?, estimator: Estimator::Tw, n: e.n },
        signals,
        clipped_eigenvalues: clipped,
        degenerate: false,
    })
}

#[derive(Debug, Clone)]
pub struct ShrinkageResult {
    pub alpha_hat: f64,
    pub estimate: CorrelationEstimate,
}

/// Optimal intensity for shrinking `E` towards `I`:
/// `min{(1/n²) Σ_t ‖x_t x_tᵀ − E‖², ‖E − I‖²} / ‖E − I‖²`, with `x_t` the
/// observation vectors (columns) of the window. Returns 0 when `E = I`.
pub fn shrinkage_intensity(e: &CorrelationEstimate, window: &ReturnPanel) -> Result<f64> {
    let p = e.p();
    if window.dimension() != p {
        return Err(Error::InvalidArgument(format!(
            "window has {} assets but the estimate is {p}x{p}",
            window.dimension()
        )));
    }
    let n = window.len();
    let identity = DMatrix::<f64>::identity(p, p);
    let distance = (&e.matrix - identity).norm_squared();
    if distance == 0.0 {
        return Ok(0.0);
    }
    // ‖x xᵀ − E‖² = (xᵀx)² − 2 xᵀ E x + ‖E‖²
    let e_norm = e.matrix.norm_squared();
    let dispersion: f64 = window
        .returns
        .column_iter()
        .map(|x| {
            let xx = x.norm_squared();
            xx * xx - 2.0 * x.dot(&(&e.matrix * x)) + e_norm
        })
        .sum::<f64>()
        / (n as f64 * n as f64);
    Ok((dispersion.min(distance) / distance).clamp(0.0, 1.0))
}

/// `α̂ I + (1 − α̂) E`.
pub fn linear_shrink(e: &CorrelationEstimate, window: &ReturnPanel) -> Result<ShrinkageResult> {
    if e.estimator != Estimator::Naive {
        return Err(Error::InvalidArgument(format!("shrinkage expects a naive estimate, got {}", e.estimator)));
    }
    let alpha_hat = shrinkage_intensity(e, window)?;
    Ok(ShrinkageResult { alpha_hat, estimate: shrink_towards_identity(e, alpha_hat) })
}

pub(crate) fn shrink_towards_identity(e: &CorrelationEstimate, alpha: f64) -> CorrelationEstimate {
    let p = e.p();
    let mut matrix = e.matrix.map(|x| (1.0 - alpha) * x);
    for i in 0..p {
        matrix[(i, i)] = 1.0;
    }
    CorrelationEstimate { matrix, estimator: Estimator::Linear, n: e.n }
}
