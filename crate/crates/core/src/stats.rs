//! Reductions and small fits shared by the Monte Carlo estimators.

use crate::error::{Error, Result};

/// Pairwise (cascade) summation; result is independent of thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Standard error of the mean (0 for a single sample).
    pub stderr: f64,
    pub std_dev: f64,
    pub count: usize,
}

pub fn mean_estimate(values: &[f64]) -> MeanEstimate {
    let count = values.len();
    if count == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            stderr: f64::NAN,
            std_dev: f64::NAN,
            count,
        };
    }
    let mean = pairwise_sum(values) / count as f64;
    if count == 1 {
        return MeanEstimate {
            mean,
            stderr: 0.0,
            std_dev: 0.0,
            count,
        };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = pairwise_sum(&sq) / (count - 1) as f64;
    MeanEstimate {
        mean,
        stderr: (var / count as f64).sqrt(),
        std_dev: var.sqrt(),
        count,
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// Standard error of the slope (NaN with two points).
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Precondition("x and y lengths differ".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Precondition("need at least two points to fit".into()));
    }
    let xm = pairwise_sum(x) / n as f64;
    let ym = pairwise_sum(y) / n as f64;
    let sxx: Vec<f64> = x.iter().map(|v| (v - xm).powi(2)).collect();
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).collect();
    let sxx = pairwise_sum(&sxx);
    if sxx == 0.0 {
        return Err(Error::Precondition("x values are all equal".into()));
    }
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = ym - slope * xm;
    let res: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .collect();
    let rss = pairwise_sum(&res);
    let slope_stderr = if n > 2 {
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LinearFit {
        slope,
        intercept,
        residual: (rss / n as f64).sqrt(),
        slope_stderr,
    })
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Precondition(
            "log-log fit needs strictly positive data".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// `log(mean(exp(values)))`, stable for large arguments; `-inf` entries allowed.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let scaled: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    max + (pairwise_sum(&scaled) / values.len() as f64).ln()
}
