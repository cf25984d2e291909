//! Monte Carlo checks of the white-noise limits on Σ = I Gaussian data.
//!
//! The limits are stated for the plain sample correlation (rows demeaned,
//! scaled to unit variance). The return pipeline also divides each
//! observation by its cross-sectional norm, which pulls the top eigenvalue
//! down; the size check reports that variant alongside.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::{demean, standardize, ReturnPanel};
use crate::rmt::{eigendecompose, sample_correlation, to_correlation, tw_critical, MarchenkoPastur};
use crate::synthetic::gaussian_matrix;

/// Sample count for dimension `p` at ratio `q = p / n`.
pub fn sample_count(p: usize, q: f64) -> Result<usize> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio q = {q} is outside (0, 1)")));
    }
    let n = (p as f64 / q).round() as usize;
    if p < 2 || n <= p {
        return Err(Error::InvalidArgument(format!("need 2 ≤ p < n, got p = {p}, n = {n}")));
    }
    Ok(n)
}

/// Descending spectra of the plain and the pipeline sample correlation of
/// one white draw.
fn white_spectra(p: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    let panel = ReturnPanel::from_matrix(gaussian_matrix(p, n, rng));
    let centred = demean(&panel).returns;
    let plain = to_correlation(&(&centred * centred.transpose() / n as f64))?;
    let pipeline = sample_correlation(&standardize(&panel)?)?;
    let values = |m| -> Result<Vec<f64>> { Ok(eigendecompose(m)?.eigenvalues.iter().copied().collect()) };
    Ok((values(&plain)?, values(&pipeline.matrix)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpCheck {
    pub p: usize,
    pub n: usize,
    pub q: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub margin: f64,
    pub violation_fraction: f64,
}

/// Fraction of one white sample-correlation spectrum outside the
/// Marchenko–Pastur support widened by `margin`.
pub fn mp_edge_check(p: usize, q: f64, margin: f64, seed: u64) -> Result<MpCheck> {
    let n = sample_count(p, q)?;
    let law = MarchenkoPastur::new(p as f64 / n as f64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (eigenvalues, _) = white_spectra(p, n, &mut rng)?;
    Ok(MpCheck {
        p,
        n,
        q: law.q,
        lambda_minus: law.lambda_minus,
        lambda_plus: law.lambda_plus,
        margin,
        violation_fraction: law.violation_fraction(&eigenvalues, margin),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwSizeCheck {
    pub p: usize,
    pub n: usize,
    pub trials: usize,
    pub alpha: f64,
    pub rejections: usize,
    pub rejection_rate: f64,
    /// Same draws after the full return standardization.
    pub pipeline_rejection_rate: f64,
}

/// Empirical size of the largest-eigenvalue test under the white null.
/// Trial `i` draws from ChaCha stream `i`.
pub fn tw_size_check(p: usize, n: usize, trials: usize, alpha: f64, seed: u64) -> Result<TwSizeCheck> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let test = tw_critical(n, p, alpha)?;
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            white_spectra(p, n, &mut rng).map(|(plain, pipeline)| (test.rejects(plain[0]), test.rejects(pipeline[0])))
        })
        .collect::<Result<_>>()?;
    let rejections = outcomes.iter().filter(|o| o.0).count();
    let pipeline = outcomes.iter().filter(|o| o.1).count();
    Ok(TwSizeCheck {
        p,
        n,
        trials,
        alpha,
        rejections,
        rejection_rate: rejections as f64 / trials as f64,
        pipeline_rejection_rate: pipeline as f64 / trials as f64,
    })
}
