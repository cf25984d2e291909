//! Price ingestion, log returns, standardization and rolling windows.
//!
//! Prices are stored time-major (`prices[t][i]`), returns asset-major
//! (`returns[(i, t)]`, a `p × n` matrix) since every estimator downstream
//! works on rows of assets.
//!
//! Variances use the population convention (divide by `n`) everywhere so
//! standardized windows and the sample correlation matrix agree exactly.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub tickers: Vec<String>,
    pub timestamps: Vec<NaiveDate>,
    /// `prices[t][i]`, `None` where the source cell was empty.
    pub prices: Vec<Vec<Option<f64>>>,
}

/// Sidecar emitted by [`load_prices`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadDiagnostics {
    pub dropped: Vec<String>,
    pub missing_fraction: BTreeMap<String, f64>,
}

impl PricePanel {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn asset_count(&self) -> usize {
        self.tickers.len()
    }

    pub fn column(&self, asset: usize) -> Vec<Option<f64>> {
        self.prices.iter().map(|row| row[asset]).collect()
    }

    pub fn missing_fraction(&self, asset: usize) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let missing = self.prices.iter().filter(|row| row[asset].is_none()).count();
        missing as f64 / self.len() as f64
    }

    pub fn is_complete(&self) -> bool {
        self.prices.iter().all(|row| row.iter().all(Option::is_some))
    }

    /// Writes the panel in the same CSV layout [`parse_prices`] reads.
    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().cloned());
        out.write_record(&header)?;
        for (date, row) in self.timestamps.iter().zip(&self.prices) {
            let mut record = vec![date.format("%Y-%m-%d").to_string()];
            record.extend(row.iter().map(|v| v.map(|x| format!("{x:.16e}")).unwrap_or_default()));
            out.write_record(&record)?;
        }
        out.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub fn load_prices(path: impl AsRef<Path>, missing_threshold: f64) -> Result<(PricePanel, LoadDiagnostics)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_prices(file, missing_threshold)
}

/// Parses `date,TICKER1,TICKER2,...` CSV and drops every asset whose missing
/// fraction exceeds `missing_threshold`.
pub fn parse_prices<R: Read>(reader: R, missing_threshold: f64) -> Result<(PricePanel, LoadDiagnostics)> {
    if !(0.0..=1.0).contains(&missing_threshold) {
        return Err(Error::InvalidArgument(format!(
            "missing threshold {missing_threshold} is outside [0, 1]"
        )));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::Parse("header must be `date,TICKER1,...`".into()));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();

    let mut timestamps: Vec<NaiveDate> = Vec::new();
    let mut prices = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                header.len()
            )));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| Error::Parse(format!("row {row}: bad date {:?}: {e}", &record[0])))?;
        if let Some(prev) = timestamps.last() {
            if date <= *prev {
                return Err(Error::NonIncreasingTimestamps { row, date: date.to_string() });
            }
        }
        let mut values = Vec::with_capacity(tickers.len());
        for (i, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            let value: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad price {cell:?} for {}", tickers[i])))?;
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositivePrice { ticker: tickers[i].clone(), row, value });
            }
            values.push(Some(value));
        }
        timestamps.push(date);
        prices.push(values);
    }

    let full = PricePanel { tickers, timestamps, prices };
    let mut diagnostics = LoadDiagnostics::default();
    let mut keep = Vec::new();
    for (i, ticker) in full.tickers.iter().enumerate() {
        let fraction = full.missing_fraction(i);
        diagnostics.missing_fraction.insert(ticker.clone(), fraction);
        if fraction > missing_threshold {
            diagnostics.dropped.push(ticker.clone());
        } else {
            keep.push(i);
        }
    }
    let panel = PricePanel {
        tickers: keep.iter().map(|&i| full.tickers[i].clone()).collect(),
        timestamps: full.timestamps,
        prices: full.prices.iter().map(|row| keep.iter().map(|&i| row[i]).collect()).collect(),
    };
    Ok((panel, diagnostics))
}

/// Fills gaps by linear interpolation in the time index. Leading and
/// trailing gaps take the nearest observed price.
pub fn impute_linear(panel: &PricePanel) -> Result<PricePanel> {
    let mut prices = panel.prices.clone();
    for (asset, ticker) in panel.tickers.iter().enumerate() {
        let column = panel.column(asset);
        let filled = interpolate_column(&column).ok_or_else(|| Error::InsufficientObservations {
            ticker: ticker.clone(),
            observed: column.iter().flatten().count(),
        })?;
        for (row, value) in prices.iter_mut().zip(filled) {
            row[asset] = Some(value);
        }
    }
    Ok(PricePanel { prices, ..panel.clone() })
}

fn interpolate_column(column: &[Option<f64>]) -> Option<Vec<f64>> {
    let observed: Vec<(usize, f64)> = column.iter().enumerate().filter_map(|(t, v)| v.map(|x| (t, x))).collect();
    if observed.len() < 2 {
        return None;
    }
    let (first_t, first_v) = observed[0];
    let (last_t, last_v) = observed[observed.len() - 1];
    let mut out = vec![0.0; column.len()];
    out[..first_t].fill(first_v);
    out[last_t..].fill(last_v);
    for pair in observed.windows(2) {
        let (t0, v0) = pair[0];
        let (t1, v1) = pair[1];
        let span = (t1 - t0) as f64;
        out[t0] = v0;
        for (t, slot) in out.iter_mut().enumerate().take(t1).skip(t0 + 1) {
            let frac = (t - t0) as f64 / span;
            *slot = v0 + frac * (v1 - v0);
        }
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    /// One date per return column (the date the return is realized).
    pub timestamps: Vec<NaiveDate>,
    /// `p × n`, row per asset.
    pub returns: DMatrix<f64>,
    pub standardized: bool,
}

impl ReturnPanel {
    pub fn new(tickers: Vec<String>, timestamps: Vec<NaiveDate>, returns: DMatrix<f64>) -> Result<Self> {
        if returns.nrows() != tickers.len() || returns.ncols() != timestamps.len() {
            return Err(Error::InvalidArgument(format!(
                "return matrix is {}x{} but there are {} tickers and {} timestamps",
                returns.nrows(),
                returns.ncols(),
                tickers.len(),
                timestamps.len()
            )));
        }
        Ok(Self { tickers, timestamps, returns, standardized: false })
    }

    /// Builds a panel with generated labels (`A0`, `A1`, ...) and a weekly
    /// calendar starting 2000-01-07; handy for synthetic data.
    pub fn from_matrix(returns: DMatrix<f64>) -> Self {
        let tickers = (0..returns.nrows()).map(|i| format!("A{i}")).collect();
        let start = NaiveDate::from_ymd_opt(2000, 1, 7).expect("valid date");
        let timestamps = (0..returns.ncols()).map(|t| start + chrono::Duration::weeks(t as i64)).collect();
        Self { tickers, timestamps, returns, standardized: false }
    }

    pub fn dimension(&self) -> usize {
        self.returns.nrows()
    }

    pub fn len(&self) -> usize {
        self.returns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.ncols() == 0
    }

    /// Columns `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> ReturnPanel {
        ReturnPanel {
            tickers: self.tickers.clone(),
            timestamps: self.timestamps[start..start + len].to_vec(),
            returns: self.returns.columns(start, len).into_owned(),
            standardized: self.standardized,
        }
    }
}

/// `r[i][t] = ln(s[t+1][i] / s[t][i])`.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    if panel.len() < 2 {
        return Err(Error::InvalidArgument("need at least two price rows".into()));
    }
    let p = panel.asset_count();
    let n = panel.len() - 1;
    let mut returns = DMatrix::zeros(p, n);
    for t in 0..n {
        for i in 0..p {
            let (Some(a), Some(b)) = (panel.prices[t][i], panel.prices[t + 1][i]) else {
                return Err(Error::MissingValues(panel.tickers[i].clone()));
            };
            returns[(i, t)] = (b / a).ln();
        }
    }
    ReturnPanel::new(panel.tickers.clone(), panel.timestamps[1..].to_vec(), returns)
}

fn row_mean(m: &DMatrix<f64>, i: usize) -> f64 {
    m.row(i).sum() / m.ncols() as f64
}

/// Step 1: subtract each asset's sample mean.
pub fn demean(panel: &ReturnPanel) -> ReturnPanel {
    let mut out = panel.clone();
    for i in 0..out.returns.nrows() {
        let mu = row_mean(&out.returns, i);
        out.returns.row_mut(i).add_scalar_mut(-mu);
    }
    out
}

/// Step 2: divide column `t` by `sqrt(Σ_j r_{j,t}²)`.
pub fn cross_sectional_normalize(panel: &ReturnPanel) -> Result<ReturnPanel> {
    let mut out = panel.clone();
    for (t, mut col) in out.returns.column_iter_mut().enumerate() {
        let vol = col.norm();
        if vol == 0.0 {
            return Err(Error::ZeroCrossSectionalVolatility(t));
        }
        col /= vol;
    }
    Ok(out)
}

/// Step 3: rescale each asset to zero mean and unit (population) variance.
/// Step 2 breaks the zero mean of step 1, so the row is re-centred here.
pub fn unit_variance(panel: &ReturnPanel) -> Result<ReturnPanel> {
    let mut out = panel.clone();
    let n = out.returns.ncols() as f64;
    for i in 0..out.returns.nrows() {
        let mu = row_mean(&out.returns, i);
        let mut row = out.returns.row_mut(i);
        row.add_scalar_mut(-mu);
        let sd = (row.norm_squared() / n).sqrt();
        if !(sd > f64::EPSILON * 16.0) {
            return Err(Error::ZeroVariance(panel.tickers[i].clone()));
        }
        row /= sd;
    }
    Ok(out)
}

/// Three-step standardization: demean, cross-sectional volatility, unit variance.
pub fn standardize(panel: &ReturnPanel) -> Result<ReturnPanel> {
    if panel.standardized {
        return Err(Error::InvalidArgument("panel is already standardized".into()));
    }
    if panel.len() < 2 {
        return Err(Error::InvalidArgument("standardization needs at least two observations".into()));
    }
    let step1 = demean(panel);
    let step2 = cross_sectional_normalize(&step1)?;
    let mut step3 = unit_variance(&step2)?;
    step3.standardized = true;
    Ok(step3)
}

#[derive(Debug, Clone)]
pub struct WindowSet {
    pub windows: Vec<ReturnPanel>,
    pub window_length: usize,
    pub shift: usize,
}

impl WindowSet {
    pub fn count(&self) -> usize {
        self.windows.len()
    }

    pub fn dimension(&self) -> usize {
        self.windows.first().map_or(0, ReturnPanel::dimension)
    }

    /// `q = p / n`.
    pub fn ratio(&self) -> f64 {
        self.dimension() as f64 / self.window_length as f64
    }
}

/// Number of windows of length `n` shifted by `shift` that fit in `len` columns.
pub fn window_count(len: usize, n: usize, shift: usize) -> usize {
    if n == 0 || shift == 0 || n > len {
        0
    } else {
        (len - n) / shift + 1
    }
}

pub fn make_windows(panel: &ReturnPanel, n: usize, shift: usize) -> Result<WindowSet> {
    if shift == 0 {
        return Err(Error::InvalidArgument("window shift must be at least 1".into()));
    }
    if n < 2 || n > panel.len() {
        return Err(Error::InvalidArgument(format!(
            "window length {n} must lie in [2, {}]",
            panel.len()
        )));
    }
    let windows = (0..window_count(panel.len(), n, shift)).map(|t| panel.slice(t * shift, n)).collect();
    Ok(WindowSet { windows, window_length: n, shift })
}
