//! Tracy–Widom (β = 1) distribution and the largest-eigenvalue test.
//!
//! The CDF comes from a tabulated grid shipped in `data/tw1_cdf_v1.txt`
//! (generated offline by `tools/gen_tw1_table.py`) and is evaluated with a
//! monotone piecewise-cubic Hermite interpolant, so quantiles are obtained
//! by bisection on a strictly non-decreasing function.

use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::rmt::SpectralDecomposition;

const EMBEDDED_TABLE: &str = include_str!("../../data/tw1_cdf_v1.txt");

#[derive(Debug, Clone)]
pub struct TracyWidomTable {
    s: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

impl TracyWidomTable {
    /// The table compiled into the crate, parsed on first use.
    pub fn embedded() -> &'static TracyWidomTable {
        static TABLE: OnceLock<TracyWidomTable> = OnceLock::new();
        TABLE.get_or_init(|| Self::parse(EMBEDDED_TABLE).expect("embedded Tracy-Widom table is well formed"))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Two whitespace-separated columns `s F1(s)`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Vec::new();
        let mut cdf = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace().map(str::parse::<f64>);
            match (fields.next(), fields.next(), fields.next()) {
                (Some(Ok(x)), Some(Ok(f)), None) => {
                    s.push(x);
                    cdf.push(f);
                }
                _ => return Err(Error::Parse(format!("tracy-widom table line {}: {line:?}", lineno + 1))),
            }
        }
        if s.len() < 2 {
            return Err(Error::Parse("tracy-widom table needs at least two rows".into()));
        }
        for k in 1..s.len() {
            if s[k] <= s[k - 1] || cdf[k] < cdf[k - 1] {
                return Err(Error::Parse(format!("tracy-widom table is not monotone at row {k}")));
            }
        }
        if cdf.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Parse("tracy-widom table has values outside [0, 1]".into()));
        }
        let slopes = pchip_slopes(&s, &cdf);
        Ok(Self { s, cdf, slopes })
    }

    pub fn grid(&self) -> (&[f64], &[f64]) {
        (&self.s, &self.cdf)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    /// F₁(x); clamps to the first/last tabulated value outside the grid.
    pub fn cdf(&self, x: f64) -> f64 {
        let last = self.s.len() - 1;
        if x <= self.s[0] {
            return self.cdf[0];
        }
        if x >= self.s[last] {
            return self.cdf[last];
        }
        let k = self.s.partition_point(|&v| v <= x) - 1;
        self.hermite(k, x)
    }

    fn hermite(&self, k: usize, x: f64) -> f64 {
        let h = self.s[k + 1] - self.s[k];
        let t = (x - self.s[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.cdf[k] + h10 * h * self.slopes[k] + h01 * self.cdf[k + 1] + h11 * h * self.slopes[k + 1]
    }

    /// F₁⁻¹(prob), for `prob` inside the tabulated range of the CDF.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        let last = self.cdf.len() - 1;
        if !(prob > self.cdf[0] && prob < self.cdf[last]) {
            return Err(Error::InvalidArgument(format!(
                "probability {prob} is outside the tabulated range ({:e}, {})",
                self.cdf[0], self.cdf[last]
            )));
        }
        // First knot with F >= prob; the root lies in the interval before it.
        let hi = self.cdf.partition_point(|&f| f < prob);
        let k = hi - 1;
        let (mut a, mut b) = (self.s[k], self.s[hi]);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if self.hermite(k, mid) < prob {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Fritsch–Butland derivative estimates; the resulting Hermite cubic is
/// monotone on every interval where the data are.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = pchip_end_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], delta.get(1).copied().unwrap_or(delta[0]));
    d[n - 1] = if n > 2 {
        pchip_end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3])
    } else {
        delta[0]
    };
    d
}

fn pchip_end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Largest-eigenvalue test against the white Wishart null with
/// centering `(√(n−1) + √p)²` and scaling `(√(n−1) + √p)(1/√(n−1) + 1/√p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracyWidomTest {
    pub n: usize,
    pub p: usize,
    pub mu_np: f64,
    pub sigma_np: f64,
    pub alpha: f64,
    pub critical_value: f64,
}

impl TracyWidomTest {
    /// Standardized statistic `(n λ − μ) / σ` for a correlation eigenvalue.
    pub fn statistic(&self, eigenvalue: f64) -> f64 {
        (self.n as f64 * eigenvalue - self.mu_np) / self.sigma_np
    }

    pub fn rejects(&self, eigenvalue: f64) -> bool {
        self.statistic(eigenvalue) > self.critical_value
    }
}

pub fn tw_critical(n: usize, p: usize, alpha: f64) -> Result<TracyWidomTest> {
    tw_critical_with(TracyWidomTable::embedded(), n, p, alpha)
}

pub fn tw_critical_with(table: &TracyWidomTable, n: usize, p: usize, alpha: f64) -> Result<TracyWidomTest> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sample count n = {n} must exceed 1")));
    }
    if p < 2 {
        return Err(Error::InvalidArgument(format!("dimension p = {p} must be at least 2")));
    }
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidArgument(format!("significance level {alpha} is outside (0, 0.5]")));
    }
    let a = ((n - 1) as f64).sqrt();
    let b = (p as f64).sqrt();
    Ok(TracyWidomTest {
        n,
        p,
        mu_np: (a + b).powi(2),
        sigma_np: (a + b) * (1.0 / a + 1.0 / b),
        alpha,
        critical_value: table.quantile(1.0 - alpha)?,
    })
}

/// Number of leading eigenvalues that reject the null, scanning from the
/// largest and stopping at the first acceptance.
pub fn tw_signal_count(spectrum: &SpectralDecomposition, test: &TracyWidomTest) -> usize {
    spectrum.eigenvalues.iter().take_while(|&&l| test.rejects(l)).count()
}
