use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rmtport::backtest::{emit_report, run_backtest, window_seed, Case, RunConfig};
use rmtport::marketdata::{impute_linear, load_prices, log_returns, make_windows, standardize, ReturnPanel, WindowSet};
use rmtport::markowitz::{efficient_frontier, optimal_weights, portfolio_variance, FrontierPoint, GainSpec, Strategy};
use rmtport::nco::{nco_allocate, NcoConfig, DEFAULT_K_MAX};
use rmtport::rmt::{estimate, linear_shrink, sample_correlation, tw_clip, DEFAULT_TW_ALPHA};
use rmtport::verify::{mp_edge_check, sample_count, tw_size_check};
use rmtport::Estimator;

const CONFIG_FILE: &str = "resolved_config.json";
const MP_MARGIN: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "rmtport", version, about = "Random-matrix correlation filtering and portfolio allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, filter and impute a price file.
    Prices(Opts),
    /// Correlation estimates for one window.
    Estimate(Opts),
    /// Weights for one window.
    Allocate(Opts),
    /// Rolling in/out-of-sample experiment over every window.
    Backtest(Opts),
    /// Gain/risk frontier for one window against the next.
    Frontier(Opts),
    /// Monte Carlo checks on white noise.
    Verify(Opts),
}

impl Command {
    fn parts(&self) -> (&'static str, &Opts) {
        match self {
            Command::Prices(o) => ("prices", o),
            Command::Estimate(o) => ("estimate", o),
            Command::Allocate(o) => ("allocate", o),
            Command::Backtest(o) => ("backtest", o),
            Command::Frontier(o) => ("frontier", o),
            Command::Verify(o) => ("verify", o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Mp,
    Tw,
    Inequality,
}

#[derive(Args, Debug)]
struct Opts {
    /// Close-price CSV: a date column followed by one column per ticker.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Drop assets with a larger fraction of missing prices [default: 0.10].
    #[arg(long)]
    missing_threshold: Option<f64>,
    /// Window length n [default: 2p].
    #[arg(long)]
    window: Option<usize>,
    /// Step between windows [default: 1].
    #[arg(long)]
    shift: Option<usize>,
    /// Comma-separated subset of naive,linear,tw [default: all].
    #[arg(long, value_delimiter = ',', value_parser = parse_estimator)]
    estimators: Option<Vec<Estimator>>,
    /// Comma-separated subset of markowitz,nco [default: both].
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Option<Vec<Strategy>>,
    /// Target gain G [default: 1].
    #[arg(long)]
    gain_target: Option<f64>,
    /// Tracy–Widom significance level [default: 0.01].
    #[arg(long)]
    tw_alpha: Option<f64>,
    /// Largest cluster count considered by the eigengap rule [default: 10].
    #[arg(long)]
    k_max: Option<usize>,
    /// Seed for k-means and Monte Carlo draws [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core [default: 0].
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, created if missing. Optional for verify.
    #[arg(long)]
    out: Option<PathBuf>,
    /// A resolved_config.json from an earlier run; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Measure out-of-sample risk on the raw sample matrix of the next window.
    #[arg(long)]
    out_sample_raw: bool,
    /// Use the last window ending on or before this date [default: last window].
    #[arg(long)]
    window_end: Option<NaiveDate>,
    /// Estimator for allocate [default: naive].
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<Estimator>,
    /// Strategy for allocate [default: markowitz].
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    /// Check run by verify.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Dimension for verify [default: 50].
    #[arg(long)]
    p: Option<usize>,
    /// Ratio p/n for verify [default: 0.5].
    #[arg(long)]
    q: Option<f64>,
    /// Monte Carlo trials for verify [default: 500].
    #[arg(long)]
    trials: Option<usize>,
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse().map_err(|e: rmtport::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: rmtport::Error| e.to_string())
}

/// Every setting of a run, defaults filled in. Written next to the outputs;
/// passing it back through `--config` reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolvedConfig {
    command: String,
    prices: Option<PathBuf>,
    missing_threshold: f64,
    window: Option<usize>,
    shift: usize,
    estimators: Vec<Estimator>,
    strategies: Vec<Strategy>,
    gain_target: f64,
    tw_alpha: f64,
    k_max: usize,
    seed: u64,
    threads: usize,
    out_sample_raw: bool,
    frontier_levels: Vec<f64>,
    window_end: Option<NaiveDate>,
    estimator: Estimator,
    strategy: Strategy,
    mode: Option<Mode>,
    p: usize,
    q: f64,
    trials: usize,
}

impl ResolvedConfig {
    fn defaults(command: &str) -> Self {
        let run = RunConfig::default();
        Self {
            command: command.into(),
            prices: None,
            missing_threshold: 0.10,
            window: None,
            shift: 1,
            estimators: run.estimators,
            strategies: run.strategies,
            gain_target: run.gain_target,
            tw_alpha: DEFAULT_TW_ALPHA,
            k_max: DEFAULT_K_MAX,
            seed: 0,
            threads: 0,
            out_sample_raw: false,
            frontier_levels: run.frontier_levels,
            window_end: None,
            estimator: Estimator::Naive,
            strategy: Strategy::Markowitz,
            mode: None,
            p: 50,
            q: 0.5,
            trials: 500,
        }
    }

    fn apply(&mut self, o: &Opts) {
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = &o.$field {
                    self.$field = v.clone();
                }
            )*};
        }
        take!(missing_threshold, shift, estimators, strategies, gain_target, tw_alpha, k_max, seed, threads);
        take!(estimator, strategy, p, q, trials);
        if o.prices.is_some() {
            self.prices = o.prices.clone();
        }
        if o.window.is_some() {
            self.window = o.window;
        }
        if o.window_end.is_some() {
            self.window_end = o.window_end;
        }
        if o.mode.is_some() {
            self.mode = o.mode;
        }
        self.out_sample_raw |= o.out_sample_raw;
    }

    fn run_config(&self) -> RunConfig {
        RunConfig {
            estimators: self.estimators.clone(),
            strategies: self.strategies.clone(),
            gain_target: self.gain_target,
            tw_alpha: self.tw_alpha,
            seed: self.seed,
            k_max: self.k_max,
            out_sample_raw: self.out_sample_raw,
            frontier_levels: self.frontier_levels.clone(),
        }
    }
}

/// A failed run: message plus process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn invalid(flag: &str, message: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: format!("--{flag}: {message}") }
}

impl From<rmtport::Error> for Failure {
    fn from(e: rmtport::Error) -> Self {
        Failure { code: if e.is_numerical() { 2 } else { 1 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn resolve(command: &str, opts: &Opts) -> Outcome<ResolvedConfig> {
    let mut config = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
            let loaded: ResolvedConfig =
                serde_json::from_str(&text).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
            if loaded.command != command {
                log::warn!("config was written by `{}`, running `{command}`", loaded.command);
            }
            ResolvedConfig { command: command.into(), ..loaded }
        }
        None => ResolvedConfig::defaults(command),
    };
    config.apply(opts);
    validate(&config)?;
    Ok(config)
}

fn validate(c: &ResolvedConfig) -> Outcome {
    if !(0.0..=1.0).contains(&c.missing_threshold) {
        return Err(invalid("missing-threshold", format!("{} is outside [0, 1]", c.missing_threshold)));
    }
    if c.shift == 0 {
        return Err(invalid("shift", "must be at least 1"));
    }
    if matches!(c.window, Some(n) if n < 2) {
        return Err(invalid("window", "must be at least 2"));
    }
    if c.estimators.is_empty() {
        return Err(invalid("estimators", "empty list"));
    }
    if c.strategies.is_empty() {
        return Err(invalid("strategies", "empty list"));
    }
    if !(c.gain_target.is_finite() && c.gain_target != 0.0) {
        return Err(invalid("gain-target", "must be finite and nonzero"));
    }
    if !(c.tw_alpha > 0.0 && c.tw_alpha <= 0.5) {
        return Err(invalid("tw-alpha", format!("{} is outside (0, 0.5]", c.tw_alpha)));
    }
    if c.k_max < 2 {
        return Err(invalid("k-max", "must be at least 2"));
    }
    Ok(())
}

fn require_out(opts: &Opts) -> Outcome<&Path> {
    let out = opts.out.as_deref().ok_or_else(|| invalid("out", "an output directory is required"))?;
    fs::create_dir_all(out).map_err(|e| invalid("out", format!("{}: {e}", out.display())))?;
    Ok(out)
}

fn write_config(config: &ResolvedConfig, out: &Path) -> Outcome {
    fs::write(out.join(CONFIG_FILE), serde_json::to_string_pretty(config)? + "\n")?;
    Ok(())
}

/// Pins the window length actually used, so the echo stays valid if the
/// asset count changes.
fn with_window(config: &ResolvedConfig, set: &WindowSet) -> ResolvedConfig {
    ResolvedConfig { window: Some(set.window_length), ..config.clone() }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn returns(config: &ResolvedConfig) -> Outcome<ReturnPanel> {
    let path = config.prices.as_ref().ok_or_else(|| invalid("prices", "a price file is required"))?;
    let (panel, diag) = load_prices(path, config.missing_threshold).map_err(|e| match e {
        rmtport::Error::Io { .. } => invalid("prices", e),
        other => other.into(),
    })?;
    if !diag.dropped.is_empty() {
        log::warn!("dropped {} assets over the missing threshold: {}", diag.dropped.len(), diag.dropped.join(", "));
    }
    Ok(log_returns(&impute_linear(&panel)?)?)
}

fn windows(config: &ResolvedConfig, panel: &ReturnPanel) -> Outcome<WindowSet> {
    let n = config.window.unwrap_or(2 * panel.dimension());
    if n > panel.len() {
        return Err(invalid("window", format!("{n} exceeds the {} available returns", panel.len())));
    }
    Ok(make_windows(panel, n, config.shift)?)
}

/// Index of the last window ending on or before `--window-end`.
fn select_window(config: &ResolvedConfig, set: &WindowSet) -> Outcome<usize> {
    match config.window_end {
        None => Ok(set.count() - 1),
        Some(end) => set
            .windows
            .iter()
            .rposition(|w| w.timestamps.last().is_some_and(|&d| d <= end))
            .ok_or_else(|| invalid("window-end", format!("no window ends on or before {end}"))),
    }
}

fn window_label(w: &ReturnPanel) -> (String, String) {
    let first = w.timestamps.first().map(|d| d.to_string()).unwrap_or_default();
    let last = w.timestamps.last().map(|d| d.to_string()).unwrap_or_default();
    (first, last)
}

fn cmd_prices(config: &ResolvedConfig, opts: &Opts) -> Outcome {
    let out = require_out(opts)?;
    let path = config.prices.as_ref().ok_or_else(|| invalid("prices", "a price file is required"))?;
    let (panel, diag) = load_prices(path, config.missing_threshold).map_err(|e| match e {
        rmtport::Error::Io { .. } => invalid("prices", e),
        other => other.into(),
    })?;
    let clean = impute_linear(&panel)?;
    clean.to_csv(fs::File::create(out.join("prices_clean.csv"))?)?;
    fs::write(out.join("load_diagnostics.json"), serde_json::to_string_pretty(&diag)? + "\n")?;
    write_config(config, out)?;
    println!(
        "{} assets kept, {} dropped, {} dates",
        clean.asset_count(),
        diag.dropped.len(),
        clean.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct EstimateSummary {
    window_start: String,
    window_end: String,
    n: usize,
    p: usize,
    tw_signals: usize,
    shrinkage_intensity: f64,
}

fn cmd_estimate(config: &ResolvedConfig, opts: &Opts) -> Outcome {
    let out = require_out(opts)?;
    let panel = returns(config)?;
    let set = windows(config, &panel)?;
    let t = select_window(config, &set)?;
    let window = standardize(&set.windows[t])?;
    let naive = sample_correlation(&window)?;
    let clip = tw_clip(&naive, config.tw_alpha)?;
    let shrink = linear_shrink(&naive, &window)?;
    for &estimator in &config.estimators {
        let xi = match estimator {
            Estimator::Naive => &naive,
            Estimator::Linear => &shrink.estimate,
            Estimator::Tw => &clip.estimate,
        };
        let mut w = csv::Writer::from_path(out.join(format!("correlation_{estimator}.csv")))?;
        let mut header = vec!["ticker".to_string()];
        header.extend(window.tickers.iter().cloned());
        w.write_record(&header)?;
        for (i, ticker) in window.tickers.iter().enumerate() {
            let mut row = vec![ticker.clone()];
            row.extend(xi.matrix.row(i).iter().map(|&v| fmt_f64(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        let mut s = csv::Writer::from_path(out.join(format!("spectrum_{estimator}.csv")))?;
        s.write_record(["rank", "eigenvalue"])?;
        for (k, v) in xi.spectrum()?.eigenvalues.iter().enumerate() {
            s.write_record([(k + 1).to_string(), fmt_f64(*v)])?;
        }
        s.flush()?;
    }
    let (window_start, window_end) = window_label(&window);
    let summary = EstimateSummary {
        window_start,
        window_end,
        n: window.len(),
        p: window.dimension(),
        tw_signals: clip.signals,
        shrinkage_intensity: shrink.alpha_hat,
    };
    fs::write(out.join("estimate.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    write_config(&with_window(config, &set), out)?;
    println!(
        "window {} .. {}: {} TW signals, shrinkage intensity {:.6}",
        summary.window_start, summary.window_end, summary.tw_signals, summary.shrinkage_intensity
    );
    Ok(())
}

#[derive(Serialize)]
struct AllocationSummary {
    window_start: String,
    window_end: String,
    estimator: Estimator,
    strategy: Strategy,
    gamma: f64,
    r2_in: f64,
    sum_abs_weights: f64,
    k_star: Option<usize>,
}

fn cmd_allocate(config: &ResolvedConfig, opts: &Opts) -> Outcome {
    let out = require_out(opts)?;
    let panel = returns(config)?;
    let set = windows(config, &panel)?;
    let t = select_window(config, &set)?;
    let window = standardize(&set.windows[t])?;
    let xi = estimate(&window, config.estimator, config.tw_alpha)?;
    let gain = GainSpec::minimum_variance(xi.p(), config.gain_target);
    let (allocation, k_star) = match config.strategy {
        Strategy::Markowitz => (optimal_weights(&xi, &gain)?, None),
        Strategy::Nco => {
            let res = nco_allocate(&xi, &gain, &NcoConfig { k_max: config.k_max, seed: window_seed(config.seed, t) })?;
            fs::write(out.join("diagnostics.json"), serde_json::to_string(&res.diagnostics())? + "\n")?;
            (res.allocation, Some(res.k_star))
        }
    };
    let mut w = csv::Writer::from_path(out.join("weights.csv"))?;
    w.write_record(["ticker", "weight"])?;
    for (ticker, weight) in window.tickers.iter().zip(allocation.weights.iter()) {
        w.write_record([ticker.clone(), fmt_f64(*weight)])?;
    }
    w.flush()?;
    let (window_start, window_end) = window_label(&window);
    let summary = AllocationSummary {
        window_start,
        window_end,
        estimator: config.estimator,
        strategy: config.strategy,
        gamma: allocation.gamma,
        r2_in: portfolio_variance(&allocation.weights, &xi.matrix),
        sum_abs_weights: allocation.sum_abs_weights(),
        k_star,
    };
    fs::write(out.join("allocation.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    write_config(&with_window(config, &set), out)?;
    println!(
        "{}-{} on {} .. {}: in-sample risk {:.6}, sum |w| {:.6}",
        summary.strategy, summary.estimator, summary.window_start, summary.window_end, summary.r2_in, summary.sum_abs_weights
    );
    Ok(())
}

fn cmd_backtest(config: &ResolvedConfig, opts: &Opts) -> Outcome {
    let out = require_out(opts)?;
    let panel = returns(config)?;
    let set = windows(config, &panel)?;
    let report = run_backtest(&set, &config.run_config())?;
    emit_report(&report, out)?;
    write_config(&with_window(config, &set), out)?;
    println!("{} windows of length {}, shift {}", report.window_count, report.window_length, report.shift);
    println!("{:<18} {:>12} {:>12} {:>10} {:>7}", "case", "MSE", "MAE", "MSAW", "failed");
    for case in &report.cases {
        match case.metrics {
            Some(m) => println!(
                "{:<18} {:>12.4e} {:>12.4e} {:>10.6} {:>7}",
                case.case.to_string(),
                m.mse,
                m.mae,
                m.msaw,
                case.failed_windows
            ),
            None => println!("{:<18} {:>12} {:>12} {:>10} {:>7}", case.case.to_string(), "-", "-", "-", case.failed_windows),
        }
    }
    Ok(())
}

fn cmd_frontier(config: &ResolvedConfig, opts: &Opts) -> Outcome {
    let out = require_out(opts)?;
    let panel = returns(config)?;
    let set = windows(config, &panel)?;
    let t = select_window(config, &set)?;
    if t + 1 >= set.count() {
        return Err(invalid("window-end", "the selected window has no following window for out-of-sample risk"));
    }
    let run = config.run_config();
    run.validate()?;
    let current = standardize(&set.windows[t])?;
    let next = standardize(&set.windows[t + 1])?;
    let mut w = csv::Writer::from_path(out.join("frontier.csv"))?;
    w.write_record(["t", "case", "G", "r2_in", "r2_out"])?;
    for case in run.cases() {
        let xi_in = estimate(&current, case.estimator, config.tw_alpha)?;
        let out_estimator = if config.out_sample_raw { Estimator::Naive } else { case.estimator };
        let xi_out = estimate(&next, out_estimator, config.tw_alpha)?;
        let gain = GainSpec::minimum_variance(xi_in.p(), config.gain_target);
        let points = frontier_points(case, &xi_in, &xi_out, &gain, config, t)?;
        for pt in points {
            w.write_record([
                t.to_string(),
                case.to_string(),
                fmt_f64(pt.gain_target),
                fmt_f64(pt.r2_in),
                fmt_f64(pt.r2_out),
            ])?;
        }
    }
    w.flush()?;
    write_config(&with_window(config, &set), out)?;
    let (start, end) = window_label(&current);
    println!("frontier for window {start} .. {end} written to {}", out.join("frontier.csv").display());
    Ok(())
}

fn frontier_points(
    case: Case,
    xi_in: &rmtport::CorrelationEstimate,
    xi_out: &rmtport::CorrelationEstimate,
    gain: &GainSpec,
    config: &ResolvedConfig,
    t: usize,
) -> Outcome<Vec<FrontierPoint>> {
    Ok(match case.strategy {
        Strategy::Markowitz => efficient_frontier(&xi_in.matrix, &xi_out.matrix, &gain.g, &config.frontier_levels)?,
        Strategy::Nco => {
            let res = nco_allocate(xi_in, gain, &NcoConfig { k_max: config.k_max, seed: window_seed(config.seed, t) })?;
            let w = &res.allocation.weights;
            let (r2_in, r2_out) = (portfolio_variance(w, &xi_in.matrix), portfolio_variance(w, &xi_out.matrix));
            config
                .frontier_levels
                .iter()
                .map(|&level| {
                    let s = (level / gain.target).powi(2);
                    FrontierPoint { gain_target: level, r2_in: s * r2_in, r2_out: s * r2_out }
                })
                .collect()
        }
    })
}

fn cmd_verify(config: &ResolvedConfig, opts: &Opts) -> Outcome {
    let mode = config.mode.ok_or_else(|| invalid("mode", "one of mp, tw, inequality is required"))?;
    let result = match mode {
        Mode::Mp => {
            let check = mp_edge_check(config.p, config.q, MP_MARGIN, config.seed)?;
            println!(
                "edge-violation fraction {:.6} (p = {}, n = {}, support [{:.4}, {:.4}] ± {MP_MARGIN})",
                check.violation_fraction, check.p, check.n, check.lambda_minus, check.lambda_plus
            );
            serde_json::to_value(check)?
        }
        Mode::Tw => {
            let n = sample_count(config.p, config.q)?;
            let check = tw_size_check(config.p, n, config.trials, config.tw_alpha, config.seed)?;
            println!(
                "rejection rate {:.4} at alpha {} over {} trials (p = {}, n = {}); after full standardization {:.4}",
                check.rejection_rate, check.alpha, check.trials, check.p, check.n, check.pipeline_rejection_rate
            );
            serde_json::to_value(check)?
        }
        Mode::Inequality => {
            let report = rmtport::markowitz::risk_inequality_check(config.p, config.q, config.trials, config.seed)?;
            println!(
                "R2_in/(1-q) {:.6}, R2_true {:.6}, (1-q) R2_out {:.6}, max relative spread {:.4}",
                report.in_scaled, report.true_risk, report.out_scaled, report.max_relative_spread
            );
            serde_json::to_value(report)?
        }
    };
    if opts.out.is_some() {
        let out = require_out(opts)?;
        fs::write(out.join("verify.json"), serde_json::to_string_pretty(&result)? + "\n")?;
        write_config(config, out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let (name, opts) = cli.command.parts();
    let config = resolve(name, opts)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| invalid("threads", e))?;
    pool.install(|| match &cli.command {
        Command::Prices(o) => cmd_prices(&config, o),
        Command::Estimate(o) => cmd_estimate(&config, o),
        Command::Allocate(o) => cmd_allocate(&config, o),
        Command::Backtest(o) => cmd_backtest(&config, o),
        Command::Frontier(o) => cmd_frontier(&config, o),
        Command::Verify(o) => cmd_verify(&config, o),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
