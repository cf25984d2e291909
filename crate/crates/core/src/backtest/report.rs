//! CSV/JSON report layout. Floats are written with 17 significant digits,
//! so reading a report back reproduces it bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BacktestReport, Case, CaseReport, Metrics, WindowResult};
use crate::error::{Error, Result};
use crate::markowitz::FrontierPoint;
use crate::nco::NcoDiagnostics;

pub const REPORT_FILES: [&str; 6] =
    ["report.json", "risk_series.csv", "weights.csv", "abs_weight_sum.csv", "frontier.csv", "summary.csv"];

#[derive(Debug, Serialize, Deserialize)]
struct ReportMeta {
    tickers: Vec<String>,
    window_length: usize,
    shift: usize,
    window_count: usize,
    cases: Vec<String>,
    variance_convention: String,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("bad count {s:?}")))
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    Ok(w)
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn diagnostics_path(dir: &Path, t: usize, case: Case) -> PathBuf {
    dir.join("diagnostics").join(format!("{t}_{case}.json"))
}

/// Writes every report artifact under `dir`, creating it if needed.
pub fn emit_report(report: &BacktestReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let meta = ReportMeta {
        tickers: report.tickers.clone(),
        window_length: report.window_length,
        shift: report.shift,
        window_count: report.window_count,
        cases: report.cases.iter().map(|c| c.case.to_string()).collect(),
        variance_convention: "population".into(),
    };
    let meta_path = dir.join("report.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&meta_path, e))?;

    let paths: Vec<PathBuf> = REPORT_FILES[1..].iter().map(|f| dir.join(f)).collect();
    let mut risk = writer(&paths[0], &["t", "case", "r2_in", "r2_out", "gap"])?;
    let mut weights = writer(&paths[1], &["t", "case", "ticker", "weight"])?;
    let mut sums = writer(&paths[2], &["t", "case", "sum_abs"])?;
    let mut frontier = writer(&paths[3], &["t", "case", "G", "r2_in", "r2_out"])?;
    let mut summary = writer(&paths[4], &["case", "MSE", "MAE", "MSAW", "failed_windows"])?;

    for case in &report.cases {
        let name = case.case.to_string();
        for w in &case.windows {
            let t = w.t.to_string();
            risk.write_record([&t, &name, &fmt_f64(w.r2_in), &fmt_f64(w.r2_out), &fmt_f64(w.gap())])?;
            for (ticker, weight) in report.tickers.iter().zip(&w.weights) {
                weights.write_record([&t, &name, ticker, &fmt_f64(*weight)])?;
            }
            sums.write_record([&t, &name, &fmt_f64(w.sum_abs_weights)])?;
            for pt in &w.frontier {
                frontier.write_record([&t, &name, &fmt_f64(pt.gain_target), &fmt_f64(pt.r2_in), &fmt_f64(pt.r2_out)])?;
            }
            if let Some(diag) = &w.diagnostics {
                let path = diagnostics_path(dir, w.t, case.case);
                let parent = path.parent().expect("diagnostics directory");
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                fs::write(&path, serde_json::to_string(diag)? + "\n").map_err(|e| Error::io(&path, e))?;
            }
        }
        let (mse, mae, msaw) = match case.metrics {
            Some(m) => (fmt_f64(m.mse), fmt_f64(m.mae), fmt_f64(m.msaw)),
            None => Default::default(),
        };
        summary.write_record([&name, &mse, &mae, &msaw, &case.failed_windows.to_string()])?;
    }

    for (w, path) in [risk, weights, sums, frontier, summary].into_iter().zip(&paths) {
        finish(w, path)?;
    }
    Ok(())
}

fn records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file).records().map(|r| r.map_err(Error::from)).collect()
}

/// Parses a directory written by [`emit_report`].
pub fn read_report(dir: impl AsRef<Path>) -> Result<BacktestReport> {
    let dir = dir.as_ref();
    let meta_path = dir.join("report.json");
    let meta: ReportMeta =
        serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;

    let mut cases: Vec<CaseReport> = Vec::new();
    let mut index = BTreeMap::new();
    for name in &meta.cases {
        let case: Case = name.parse()?;
        index.insert(name.clone(), cases.len());
        cases.push(CaseReport { case, windows: Vec::new(), failed_windows: 0, metrics: None });
    }
    let case_of = |name: &str| -> Result<usize> {
        index.get(name).copied().ok_or_else(|| Error::Parse(format!("unknown case {name:?}")))
    };

    for r in records(&dir.join("risk_series.csv"))? {
        let c = case_of(&r[1])?;
        cases[c].windows.push(WindowResult {
            t: parse_usize(&r[0])?,
            weights: Vec::with_capacity(meta.tickers.len()),
            r2_in: parse_f64(&r[2])?,
            r2_out: parse_f64(&r[3])?,
            sum_abs_weights: f64::NAN,
            frontier: Vec::new(),
            diagnostics: None,
        });
    }
    let mut slot: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (c, case) in cases.iter().enumerate() {
        for (k, w) in case.windows.iter().enumerate() {
            slot.insert((c, w.t), k);
        }
    }
    let find = |c: usize, t: &str| -> Result<(usize, usize)> {
        let t = parse_usize(t)?;
        slot.get(&(c, t)).map(|&k| (c, k)).ok_or_else(|| Error::Parse(format!("window {t} missing from risk series")))
    };

    for r in records(&dir.join("weights.csv"))? {
        let (c, k) = find(case_of(&r[1])?, &r[0])?;
        cases[c].windows[k].weights.push(parse_f64(&r[3])?);
    }
    for r in records(&dir.join("abs_weight_sum.csv"))? {
        let (c, k) = find(case_of(&r[1])?, &r[0])?;
        cases[c].windows[k].sum_abs_weights = parse_f64(&r[2])?;
    }
    for r in records(&dir.join("frontier.csv"))? {
        let (c, k) = find(case_of(&r[1])?, &r[0])?;
        cases[c].windows[k].frontier.push(FrontierPoint {
            gain_target: parse_f64(&r[2])?,
            r2_in: parse_f64(&r[3])?,
            r2_out: parse_f64(&r[4])?,
        });
    }
    for r in records(&dir.join("summary.csv"))? {
        let c = case_of(&r[0])?;
        cases[c].failed_windows = parse_usize(&r[4])?;
        if !r[1].is_empty() {
            cases[c].metrics = Some(Metrics { mse: parse_f64(&r[1])?, mae: parse_f64(&r[2])?, msaw: parse_f64(&r[3])? });
        }
    }
    for case in &mut cases {
        for w in &mut case.windows {
            let path = diagnostics_path(dir, w.t, case.case);
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                w.diagnostics = Some(serde_json::from_str::<NcoDiagnostics>(&text)?);
            }
        }
    }

    Ok(BacktestReport {
        tickers: meta.tickers,
        window_length: meta.window_length,
        shift: meta.shift,
        window_count: meta.window_count,
        cases,
    })
}
