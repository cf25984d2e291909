//! Closed-form mean-variance allocation and in/out-of-sample risk.
//!
//! Weights solve `min wᵀ M w` subject to `wᵀ g = G`, i.e.
//! `w = γ M⁻¹ g` with `γ = G / (gᵀ M⁻¹ g)`. No sign or budget constraints
//! are imposed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::{max_asymmetry, CorrelationEstimate, Estimator};

/// Smallest eigenvalue a matrix may have before it is treated as singular.
pub const SINGULARITY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GainSpec {
    /// Expected profit per asset.
    pub g: DVector<f64>,
    /// Target expected gain `G`.
    pub target: f64,
}

impl GainSpec {
    pub fn new(g: DVector<f64>, target: f64) -> Result<Self> {
        if g.iter().any(|x| !x.is_finite()) || !target.is_finite() {
            return Err(Error::InvalidArgument("gain vector and target must be finite".into()));
        }
        Ok(Self { g, target })
    }

    /// `g = 1`, `G = target`.
    pub fn minimum_variance(p: usize, target: f64) -> Self {
        Self { g: DVector::repeat(p, 1.0), target }
    }

    pub fn with_target(&self, target: f64) -> Self {
        Self { g: self.g.clone(), target }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Markowitz,
    Nco,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Markowitz, Strategy::Nco];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Markowitz => "markowitz",
            Strategy::Nco => "nco",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markowitz" => Ok(Strategy::Markowitz),
            "nco" => Ok(Strategy::Nco),
            other => Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub weights: DVector<f64>,
    /// Multiplier implied by the binding gain constraint.
    pub gamma: f64,
    pub strategy: Strategy,
    pub estimator: Estimator,
}

impl AllocationResult {
    pub fn sum_abs_weights(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// Cholesky factor of a symmetric positive-definite matrix whose smallest
/// eigenvalue clears [`SINGULARITY_GUARD`].
pub struct SpdSolver {
    chol: Cholesky<f64, Dyn>,
}

impl SpdSolver {
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("expected a non-empty square matrix".into()));
        }
        let asym = max_asymmetry(matrix);
        if asym > 1e-10 {
            return Err(Error::NotSymmetric(asym));
        }
        let smallest = SymmetricEigen::new(matrix.clone()).eigenvalues.min();
        if !(smallest > SINGULARITY_GUARD) {
            return Err(Error::Singular(smallest));
        }
        let chol = Cholesky::new(matrix.clone()).ok_or(Error::Singular(smallest))?;
        Ok(Self { chol })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

/// Minimum-variance weights for `matrix` under `gain`; returns `(w, γ)`.
pub fn min_variance_weights(matrix: &DMatrix<f64>, gain: &GainSpec) -> Result<(DVector<f64>, f64)> {
    if gain.len() != matrix.nrows() {
        return Err(Error::InvalidArgument(format!(
            "gain vector has length {} but the matrix is {}x{}",
            gain.len(),
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let solver = SpdSolver::new(matrix)?;
    let direction = solver.solve(&gain.g);
    let form = gain.g.dot(&direction);
    if !(form > 0.0) {
        return Err(Error::NonPositiveGainForm(form));
    }
    let gamma = gain.target / form;
    Ok((direction * gamma, gamma))
}

pub fn optimal_weights(xi: &CorrelationEstimate, gain: &GainSpec) -> Result<AllocationResult> {
    let (weights, gamma) = min_variance_weights(&xi.matrix, gain)?;
    Ok(AllocationResult { weights, gamma, strategy: Strategy::Markowitz, estimator: xi.estimator })
}

/// `wᵀ M w`.
pub fn portfolio_variance(weights: &DVector<f64>, matrix: &DMatrix<f64>) -> f64 {
    weights.dot(&(matrix * weights))
}

/// `G² / (gᵀ Σ⁻¹ g)`.
pub fn risk_true(sigma: &DMatrix<f64>, gain: &GainSpec) -> Result<f64> {
    let solver = SpdSolver::new(sigma)?;
    let form = gain.g.dot(&solver.solve(&gain.g));
    if !(form > 0.0) {
        return Err(Error::NonPositiveGainForm(form));
    }
    Ok(gain.target * gain.target / form)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskTriple {
    pub r2_in: f64,
    pub r2_out: f64,
    /// Only known for synthetic data with a given population matrix.
    pub r2_true: Option<f64>,
}

/// In-sample risk `G² / (gᵀ E_in⁻¹ g)` and out-of-sample risk
/// `G² gᵀ E_in⁻¹ E_out E_in⁻¹ g / (gᵀ E_in⁻¹ g)²`.
pub fn risk_in_out(e_in: &DMatrix<f64>, e_out: &DMatrix<f64>, gain: &GainSpec) -> Result<RiskTriple> {
    if e_out.shape() != e_in.shape() {
        return Err(Error::InvalidArgument("in- and out-of-sample matrices differ in shape".into()));
    }
    let solver = SpdSolver::new(e_in)?;
    let direction = solver.solve(&gain.g);
    let form = gain.g.dot(&direction);
    if !(form > 0.0) {
        return Err(Error::NonPositiveGainForm(form));
    }
    let g2 = gain.target * gain.target;
    Ok(RiskTriple {
        r2_in: g2 / form,
        r2_out: g2 * portfolio_variance(&direction, e_out) / (form * form),
        r2_true: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub gain_target: f64,
    pub r2_in: f64,
    pub r2_out: f64,
}

/// In/out-of-sample frontier with weights fitted on `xi_in` for every level.
pub fn efficient_frontier(
    xi_in: &DMatrix<f64>,
    xi_out: &DMatrix<f64>,
    g: &DVector<f64>,
    levels: &[f64],
) -> Result<Vec<FrontierPoint>> {
    if levels.iter().any(|&l| !(l > 0.0)) || levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("frontier gain levels must be positive and sorted".into()));
    }
    levels
        .iter()
        .map(|&level| {
            let gain = GainSpec { g: g.clone(), target: level };
            let risk = risk_in_out(xi_in, xi_out, &gain)?;
            Ok(FrontierPoint { gain_target: level, r2_in: risk.r2_in, r2_out: risk.r2_out })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskInequalityReport {
    pub p: usize,
    pub n: usize,
    pub q: f64,
    pub trials: usize,
    /// Mean of `R²_in / (1 − q)`.
    pub in_scaled: f64,
    pub true_risk: f64,
    /// Mean of `(1 − q) R²_out`.
    pub out_scaled: f64,
    /// Largest pairwise `|a − b| / min(a, b)` among the three.
    pub max_relative_spread: f64,
}

/// Monte Carlo check of `R²_in/(1−q) ≈ R²_true ≈ (1−q) R²_out` for white
/// Gaussian data, `g = 1` (so `gᵀg = p`) and `G = 1`. The in-sample matrix
/// is the sample covariance of `n = round(p/q)` draws; the out-of-sample
/// matrix is the population covariance `I`.
pub fn risk_inequality_check(p: usize, q: f64, trials: usize, seed: u64) -> Result<RiskInequalityReport> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio q = {q} is outside (0, 1)")));
    }
    if p < 1 || trials < 1 {
        return Err(Error::InvalidArgument("p and trials must be positive".into()));
    }
    let n = (p as f64 / q).round() as usize;
    if n <= p {
        return Err(Error::InvalidArgument(format!("n = {n} must exceed p = {p}")));
    }
    let gain = GainSpec::minimum_variance(p, 1.0);
    let sigma = DMatrix::<f64>::identity(p, p);
    let true_risk = risk_true(&sigma, &gain)?;

    let samples: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let x = crate::synthetic::gaussian_matrix(p, n, &mut rng);
            let e = (&x * x.transpose()) / n as f64;
            risk_in_out(&e, &sigma, &gain).map(|r| (r.r2_in, r.r2_out))
        })
        .collect::<Result<_>>()?;

    let mean = |f: fn(&(f64, f64)) -> f64| samples.iter().map(f).sum::<f64>() / trials as f64;
    let in_scaled = mean(|s| s.0) / (1.0 - q);
    let out_scaled = mean(|s| s.1) * (1.0 - q);
    let values = [in_scaled, true_risk, out_scaled];
    let mut spread = 0.0_f64;
    for a in 0..3 {
        for b in (a + 1)..3 {
            spread = spread.max((values[a] - values[b]).abs() / values[a].min(values[b]));
        }
    }
    Ok(RiskInequalityReport { p, n, q, trials, in_scaled, true_risk, out_scaled, max_relative_spread: spread })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(p: usize, entries: &[(usize, usize, f64)]) -> CorrelationEstimate {
        let mut m = DMatrix::identity(p, p);
        for &(i, j, v) in entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        CorrelationEstimate::new(m, Estimator::Naive, 100).unwrap()
    }

    /// Solves the KKT system [[2M, g], [gᵀ, 0]] [w; ν] = [0; G] with LU.
    fn kkt_oracle(m: &DMatrix<f64>, gain: &GainSpec) -> DVector<f64> {
        let p = m.nrows();
        let mut k = DMatrix::zeros(p + 1, p + 1);
        k.view_mut((0, 0), (p, p)).copy_from(&(m * 2.0));
        for i in 0..p {
            k[(i, p)] = gain.g[i];
            k[(p, i)] = gain.g[i];
        }
        let mut rhs = DVector::zeros(p + 1);
        rhs[p] = gain.target;
        k.lu().solve(&rhs).unwrap().rows(0, p).into_owned()
    }

    #[test]
    fn identity_gives_equal_weights() {
        let res = optimal_weights(&corr(4, &[]), &GainSpec::minimum_variance(4, 1.0)).unwrap();
        assert!(res.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
        assert!((res.gamma - 0.25).abs() < 1e-15);
        assert_eq!(res.strategy, Strategy::Markowitz);
    }

    #[test]
    fn exchangeable_pair_splits_evenly() {
        let res = optimal_weights(&corr(2, &[(0, 1, 0.5)]), &GainSpec::minimum_variance(2, 1.0)).unwrap();
        assert!((res.weights[0] - 0.5).abs() < 1e-15);
        assert!((res.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_assets_match_kkt_oracle() {
        let xi = corr(3, &[(0, 1, 0.8)]);
        let gain = GainSpec::minimum_variance(3, 1.0);
        let res = optimal_weights(&xi, &gain).unwrap();
        let oracle = kkt_oracle(&xi.matrix, &gain);
        assert!((&res.weights - &oracle).amax() < 1e-8);
        // Correlated pair shares what the independent asset gets alone.
        assert!((res.weights[0] - 1.0 / 3.8).abs() < 1e-12);
        assert!((res.weights[2] - 1.8 / 3.8).abs() < 1e-12);
    }

    #[test]
    fn singular_and_indefinite_inputs() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let gain = GainSpec::minimum_variance(2, 1.0);
        assert!(matches!(min_variance_weights(&singular, &gain), Err(Error::Singular(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(min_variance_weights(&indefinite, &gain), Err(Error::Singular(_))));
        let zero_gain = GainSpec { g: DVector::zeros(2), target: 1.0 };
        assert!(matches!(
            min_variance_weights(&DMatrix::identity(2, 2), &zero_gain),
            Err(Error::NonPositiveGainForm(_))
        ));
        assert!(min_variance_weights(&DMatrix::identity(3, 3), &gain).is_err());
        assert!(GainSpec::new(DVector::from_vec(vec![f64::NAN]), 1.0).is_err());
    }

    #[test]
    fn true_risk_examples() {
        for p in 1..6 {
            let r = risk_true(&DMatrix::identity(p, p), &GainSpec::minimum_variance(p, 1.0)).unwrap();
            assert!((r - 1.0 / p as f64).abs() < 1e-15);
        }
        let r = risk_true(&DMatrix::from_element(1, 1, 4.0), &GainSpec::minimum_variance(1, 1.0)).unwrap();
        assert!((r - 4.0).abs() < 1e-15);

        // Equicorrelation inverse: (1/(1−ρ)) (I − ρ/(1+(p−1)ρ) 11ᵀ), so
        // 1ᵀΣ⁻¹1 = p / (1 + (p−1)ρ) and the risk is (1 + 2ρ)/3 for p = 3.
        let sigma = corr(3, &[(0, 1, 0.5), (0, 2, 0.5), (1, 2, 0.5)]).matrix;
        let r = risk_true(&sigma, &GainSpec::minimum_variance(3, 1.0)).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-14);
        assert!(risk_true(&DMatrix::zeros(2, 2), &GainSpec::minimum_variance(2, 1.0)).is_err());
    }

    #[test]
    fn in_out_risk_collapses_when_matrices_agree() {
        let gain = GainSpec::minimum_variance(4, 1.0);
        let id = DMatrix::identity(4, 4);
        let r = risk_in_out(&id, &id, &gain).unwrap();
        assert!((r.r2_in - 0.25).abs() < 1e-15 && (r.r2_out - 0.25).abs() < 1e-15);
        let m = corr(4, &[(0, 1, 0.3), (2, 3, -0.2), (0, 3, 0.1)]).matrix;
        let r = risk_in_out(&m, &m, &gain).unwrap();
        assert!((r.r2_in - r.r2_out).abs() < 1e-14);
        assert!(r.r2_true.is_none());
    }

    fn random_pd(p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = crate::synthetic::gaussian_matrix(p, 2 * p, &mut rng);
        (&a * a.transpose()) / (2 * p) as f64 + DMatrix::identity(p, p) * 0.1
    }

    #[test]
    fn in_out_risk_matches_straight_line_formula() {
        let e_in = random_pd(5, 1);
        let e_out = random_pd(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = DVector::from_column_slice(crate::synthetic::gaussian_matrix(5, 1, &mut rng).as_slice());
        let gain = GainSpec { g: g.clone(), target: 1.7 };
        let r = risk_in_out(&e_in, &e_out, &gain).unwrap();

        let inv = e_in.clone().try_inverse().unwrap();
        let form = (g.transpose() * &inv * &g)[(0, 0)];
        let numer = (g.transpose() * &inv * &e_out * &inv * &g)[(0, 0)];
        assert!((r.r2_in - 1.7 * 1.7 / form).abs() < 1e-10 * r.r2_in.abs());
        assert!((r.r2_out - 1.7 * 1.7 * numer / (form * form)).abs() < 1e-10 * r.r2_out.abs());

        // Same numbers through explicit weights.
        let (w, _) = min_variance_weights(&e_in, &gain).unwrap();
        assert!((portfolio_variance(&w, &e_in) - r.r2_in).abs() < 1e-12);
        assert!((portfolio_variance(&w, &e_out) - r.r2_out).abs() < 1e-12);
    }

    #[test]
    fn frontier_properties() {
        let a = random_pd(6, 4);
        let b = random_pd(6, 5);
        let g = DVector::repeat(6, 1.0);
        let levels = [0.5, 1.0, 2.0, 3.0];
        let same = efficient_frontier(&a, &a, &g, &levels).unwrap();
        assert!(same.iter().all(|pt| (pt.r2_in - pt.r2_out).abs() < 1e-14));
        let pts = efficient_frontier(&a, &b, &g, &levels).unwrap();
        assert!((pts[2].r2_in - 4.0 * pts[1].r2_in).abs() < 1e-12);
        assert!((pts[2].r2_out - 4.0 * pts[1].r2_out).abs() < 1e-12);
        assert!(pts.windows(2).all(|w| w[1].r2_in > w[0].r2_in && w[1].r2_out > w[0].r2_out));
        assert!(efficient_frontier(&a, &b, &g, &[2.0, 1.0]).is_err());
        assert!(efficient_frontier(&a, &b, &g, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn risk_inequality_is_reproducible_and_tight_for_small_q() {
        let a = risk_inequality_check(10, 0.5, 1, 42).unwrap();
        let b = risk_inequality_check(10, 0.5, 1, 42).unwrap();
        assert_eq!(a, b);
        let wide = risk_inequality_check(10, 0.01, 50, 7).unwrap();
        assert_eq!(wide.n, 1000);
        assert!(wide.max_relative_spread < 0.03, "{wide:?}");
        assert!(risk_inequality_check(10, 1.0, 5, 1).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("hrp".parse::<Strategy>().is_err());
    }
}
