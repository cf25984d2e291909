//! Rolling-window experiment: for every window `t` and every
//! (estimator, strategy) case, fit weights on window `t`, evaluate the
//! in-sample risk on window `t` and the out-of-sample risk on window
//! `t + 1`, then aggregate the risk gap and weight concentration.

mod report;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{emit_report, read_report, REPORT_FILES};

use crate::error::{Error, Result};
use crate::marketdata::{standardize, ReturnPanel, WindowSet};
use crate::markowitz::{efficient_frontier, optimal_weights, portfolio_variance, FrontierPoint, GainSpec, Strategy};
use crate::nco::{nco_allocate, NcoConfig, NcoDiagnostics, DEFAULT_K_MAX};
use crate::rmt::{estimate, CorrelationEstimate, Estimator, DEFAULT_TW_ALPHA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub estimators: Vec<Estimator>,
    pub strategies: Vec<Strategy>,
    /// Target gain `G`; the gain vector is `g = 1` (minimum variance).
    pub gain_target: f64,
    pub tw_alpha: f64,
    pub seed: u64,
    pub k_max: usize,
    /// Evaluate out-of-sample risk on the raw sample matrix of window
    /// `t + 1` instead of the case's own estimator.
    pub out_sample_raw: bool,
    /// Gain levels for the per-window frontier output.
    pub frontier_levels: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            estimators: Estimator::ALL.to_vec(),
            strategies: Strategy::ALL.to_vec(),
            gain_target: 1.0,
            tw_alpha: DEFAULT_TW_ALPHA,
            seed: 0,
            k_max: DEFAULT_K_MAX,
            out_sample_raw: false,
            frontier_levels: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidArgument("at least one estimator and one strategy are required".into()));
        }
        if !(self.gain_target.is_finite() && self.gain_target != 0.0) {
            return Err(Error::InvalidArgument(format!("gain target {} must be finite and nonzero", self.gain_target)));
        }
        if !(self.tw_alpha > 0.0 && self.tw_alpha <= 0.5) {
            return Err(Error::InvalidArgument(format!("tw alpha {} is outside (0, 0.5]", self.tw_alpha)));
        }
        if self.k_max < 2 {
            return Err(Error::InvalidArgument(format!("k_max = {} must be at least 2", self.k_max)));
        }
        if self.frontier_levels.iter().any(|&l| !(l > 0.0)) || self.frontier_levels.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("frontier levels must be positive and sorted".into()));
        }
        Ok(())
    }

    /// Cases in strategy-major order, duplicates removed.
    pub fn cases(&self) -> Vec<Case> {
        let mut cases = Vec::new();
        for &strategy in &self.strategies {
            for &estimator in &self.estimators {
                let case = Case { strategy, estimator };
                if !cases.contains(&case) {
                    cases.push(case);
                }
            }
        }
        cases
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Case {
    pub strategy: Strategy,
    pub estimator: Estimator,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.strategy, self.estimator)
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (strategy, estimator) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("case {s:?} is not `strategy-estimator`")))?;
        Ok(Case { strategy: strategy.parse()?, estimator: estimator.parse()? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub t: usize,
    pub weights: Vec<f64>,
    pub r2_in: f64,
    pub r2_out: f64,
    pub sum_abs_weights: f64,
    pub frontier: Vec<FrontierPoint>,
    pub diagnostics: Option<NcoDiagnostics>,
}

impl WindowResult {
    pub fn gap(&self) -> f64 {
        self.r2_out - self.r2_in
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub msaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub case: Case,
    pub windows: Vec<WindowResult>,
    pub failed_windows: usize,
    /// `None` when every window failed.
    pub metrics: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub tickers: Vec<String>,
    pub window_length: usize,
    pub shift: usize,
    pub window_count: usize,
    pub cases: Vec<CaseReport>,
}

impl BacktestReport {
    pub fn case(&self, case: Case) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.case == case)
    }
}

/// Mean squared gap, mean absolute gap and mean sum of absolute weights.
pub fn aggregate_metrics(gaps: &[f64], weight_sums: &[f64]) -> Result<Metrics> {
    if gaps.is_empty() || weight_sums.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mean = |xs: &[f64], f: fn(f64) -> f64| xs.iter().map(|&x| f(x)).sum::<f64>() / xs.len() as f64;
    Ok(Metrics { mse: mean(gaps, |g| g * g), mae: mean(gaps, f64::abs), msaw: mean(weight_sums, |s| s) })
}

/// SplitMix64 step; decorrelates per-window seeds.
pub fn window_seed(seed: u64, t: usize) -> u64 {
    let mut z = seed.wrapping_add((t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type Estimates = Vec<std::result::Result<CorrelationEstimate, String>>;

fn estimate_all(windows: &[std::result::Result<ReturnPanel, String>], estimator: Estimator, alpha: f64) -> Estimates {
    windows
        .par_iter()
        .map(|w| match w {
            Ok(w) => estimate(w, estimator, alpha).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        })
        .collect()
}

pub fn run_backtest(windows: &WindowSet, config: &RunConfig) -> Result<BacktestReport> {
    config.validate()?;
    let m = windows.count();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("backtest needs at least 2 windows, got {m}")));
    }
    let p = windows.dimension();
    let standardized: Vec<std::result::Result<ReturnPanel, String>> = windows
        .windows
        .par_iter()
        .map(|w| if w.standardized { Ok(w.clone()) } else { standardize(w).map_err(|e| e.to_string()) })
        .collect();

    let mut estimators: Vec<Estimator> = config.estimators.clone();
    if config.out_sample_raw {
        estimators.push(Estimator::Naive);
    }
    estimators.sort();
    estimators.dedup();
    let estimates: Vec<(Estimator, Estimates)> = estimators
        .iter()
        .map(|&e| (e, estimate_all(&standardized, e, config.tw_alpha)))
        .collect();
    let lookup = |e: Estimator| &estimates.iter().find(|(k, _)| *k == e).expect("estimated above").1;

    let gain = GainSpec::minimum_variance(p, config.gain_target);
    let cases = config
        .cases()
        .into_iter()
        .map(|case| {
            let fitted = lookup(case.estimator);
            let realized = if config.out_sample_raw { lookup(Estimator::Naive) } else { fitted };
            let outcomes: Vec<Option<WindowResult>> = (0..m - 1)
                .into_par_iter()
                .map(|t| {
                    let (Ok(xi_in), Ok(xi_out)) = (&fitted[t], &realized[t + 1]) else {
                        return None;
                    };
                    match evaluate_window(t, case, xi_in, xi_out, &gain, config) {
                        Ok(result) => Some(result),
                        Err(e) => {
                            log::debug!("{case} window {t} failed: {e}");
                            None
                        }
                    }
                })
                .collect();
            let failed_windows = outcomes.iter().filter(|o| o.is_none()).count();
            let windows: Vec<WindowResult> = outcomes.into_iter().flatten().collect();
            let gaps: Vec<f64> = windows.iter().map(WindowResult::gap).collect();
            let sums: Vec<f64> = windows.iter().map(|w| w.sum_abs_weights).collect();
            CaseReport { case, metrics: aggregate_metrics(&gaps, &sums).ok(), windows, failed_windows }
        })
        .collect();

    Ok(BacktestReport {
        tickers: windows.windows[0].tickers.clone(),
        window_length: windows.window_length,
        shift: windows.shift,
        window_count: m,
        cases,
    })
}

fn evaluate_window(
    t: usize,
    case: Case,
    xi_in: &CorrelationEstimate,
    xi_out: &CorrelationEstimate,
    gain: &GainSpec,
    config: &RunConfig,
) -> Result<WindowResult> {
    let (weights, diagnostics): (DVector<f64>, Option<NcoDiagnostics>) = match case.strategy {
        Strategy::Markowitz => (optimal_weights(xi_in, gain)?.weights, None),
        Strategy::Nco => {
            let nco = NcoConfig { k_max: config.k_max, seed: window_seed(config.seed, t) };
            let res = nco_allocate(xi_in, gain, &nco)?;
            let diag = res.diagnostics();
            (res.allocation.weights, Some(diag))
        }
    };
    let r2_in = portfolio_variance(&weights, &xi_in.matrix);
    let r2_out = portfolio_variance(&weights, &xi_out.matrix);
    let frontier = if config.frontier_levels.is_empty() {
        Vec::new()
    } else {
        match case.strategy {
            Strategy::Markowitz => efficient_frontier(&xi_in.matrix, &xi_out.matrix, &gain.g, &config.frontier_levels)?,
            // Nested weights are linear in the target gain.
            Strategy::Nco => config
                .frontier_levels
                .iter()
                .map(|&level| {
                    let scale = level / gain.target;
                    FrontierPoint { gain_target: level, r2_in: scale * scale * r2_in, r2_out: scale * scale * r2_out }
                })
                .collect(),
        }
    };
    Ok(WindowResult {
        t,
        sum_abs_weights: weights.iter().map(|w| w.abs()).sum(),
        weights: weights.iter().copied().collect(),
        r2_in,
        r2_out,
        frontier,
        diagnostics,
    })
}
