//! Detrending-moving-average analysis.
//!
//! `sigma_DMA(n)` is the root-mean-square residual of the series against its
//! backward moving average of window size `n`; on series with power-law
//! scaling `sigma_DMA(n) ~ n^H` the log-log slope H is the Hurst exponent.
//! H = 0.5 is an uncorrelated random walk, H > 0.5 persistent, H < 0.5
//! anti-persistent.

use crate::error::{Error, Result};
use crate::series::IndexSeries;

/// sigma_DMA(n) curve with its log-log power-law fit.
#[derive(Debug, Clone, PartialEq)]
pub struct HurstProfile {
    /// Evaluated window sizes, strictly increasing, within [2, T/2].
    pub n_values: Vec<usize>,
    /// sigma_DMA at each window size (price units).
    pub sigma_values: Vec<f64>,
    /// Fitted Hurst exponent (log-log slope over the nonzero-sigma points).
    pub hurst: f64,
    /// Fit intercept in natural-log space.
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

/// Hurst exponent recomputed in sliding windows along the series.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingHurst {
    /// Start day of each window.
    pub start_days: Vec<usize>,
    /// H fitted inside the window starting at the matching entry of `start_days`.
    pub h_values: Vec<f64>,
    /// Window size T_s in days.
    pub window: usize,
    /// Step s in days.
    pub step: usize,
}

/// Grid of window sizes for the sigma_DMA curve: geometric with a fixed
/// number of points per decade, rounded to distinct integers in [2, T/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points_per_decade: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        // dense enough that the fit matches an every-integer grid well inside
        // the acceptance tolerances, while keeping full curves ~O(T log T)
        GridSpec { points_per_decade: 24 }
    }
}

/// Integer window sizes from 2 to T/2, geometrically spaced.
pub fn n_grid(t: usize, spec: &GridSpec) -> Vec<usize> {
    let max_n = t / 2;
    if max_n < 2 {
        return Vec::new();
    }
    let ppd = spec.points_per_decade.max(1) as f64;
    let decades = (max_n as f64 / 2.0).log10();
    let count = (decades * ppd).ceil() as usize + 1;
    let mut grid = Vec::with_capacity(count);
    let mut last = 0usize;
    for k in 0..=count {
        let n = (2.0 * 10f64.powf(k as f64 / ppd)).round() as usize;
        let n = n.clamp(2, max_n);
        if n > last {
            grid.push(n);
            last = n;
        }
    }
    grid
}

/// sigma_DMA(n): RMS deviation of the series from its n-day backward moving
/// average, over every day where the average exists.
pub fn dma_sigma(series: &IndexSeries, n: usize) -> Result<f64> {
    let t = series.len();
    if n < 2 || n > t / 2 {
        return Err(Error::invalid(format!(
            "window size n={n} outside [2, T/2] for T={t}"
        )));
    }
    let prefix = prefix_sums(series.values());
    Ok(sigma_with_prefix(series.values(), &prefix, n))
}

fn prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in values {
        acc += v;
        prefix.push(acc);
    }
    prefix
}

fn sigma_with_prefix(values: &[f64], prefix: &[f64], n: usize) -> f64 {
    let t = values.len();
    let inv_n = 1.0 / n as f64;
    let mut sum_sq = 0.0;
    // residuals exist for the T-n+1 days with a full n-day backward window
    for i in (n - 1)..t {
        let window_mean = (prefix[i + 1] - prefix[i + 1 - n]) * inv_n;
        let r = values[i] - window_mean;
        sum_sq += r * r;
    }
    (sum_sq / (t - n + 1) as f64).sqrt()
}

/// Unweighted least squares of y on x; returns (slope, intercept, rms residual).
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mean_x) * (xi - mean_x);
        sxy += (xi - mean_x) * (yi - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let e = yi - (slope * xi + intercept);
            e * e
        })
        .sum();
    (slope, intercept, (ss_res / n).sqrt())
}

/// Evaluate sigma_DMA over a geometric grid and fit H as the least-squares
/// slope of ln sigma against ln n. Zero-sigma points are kept in the curve
/// but excluded from the fit.
pub fn hurst_global(series: &IndexSeries, spec: &GridSpec) -> Result<HurstProfile> {
    let t = series.len();
    if t < 8 {
        return Err(Error::insufficient(format!("T={t} too short for DMA analysis")));
    }
    let grid = n_grid(t, spec);
    if grid.len() < 5 {
        return Err(Error::insufficient(format!(
            "only {} distinct window sizes in [2, {}]; need at least 5",
            grid.len(),
            t / 2
        )));
    }
    let prefix = prefix_sums(series.values());
    let sigma_values: Vec<f64> = grid
        .iter()
        .map(|&n| sigma_with_prefix(series.values(), &prefix, n))
        .collect();

    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(&sigma_values)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&n, &s)| ((n as f64).ln(), s.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::DegenerateSample(format!(
            "{} nonzero sigma_DMA points; need at least 3 for the fit",
            xs.len()
        )));
    }
    let (hurst, intercept, residual) = linear_fit(&xs, &ys);
    Ok(HurstProfile {
        n_values: grid,
        sigma_values,
        hurst,
        intercept,
        residual,
    })
}

/// H(j) along the series: for each start day j in [0, T - T_s] stepping by
/// `step`, fit H on the T_s-day slice beginning at j.
pub fn hurst_sliding(
    series: &IndexSeries,
    window: usize,
    step: usize,
    spec: &GridSpec,
) -> Result<SlidingHurst> {
    let t = series.len();
    if window > t {
        return Err(Error::invalid(format!("sliding window T_s={window} exceeds T={t}")));
    }
    if step == 0 {
        return Err(Error::invalid("step must be at least 1"));
    }
    let mut start_days = Vec::new();
    let mut h_values = Vec::new();
    let mut start = 0usize;
    while start + window <= t {
        let slice = series.slice(start, window)?;
        let profile = hurst_global(&slice, spec)?;
        start_days.push(start);
        h_values.push(profile.hurst);
        start += step;
    }
    Ok(SlidingHurst {
        start_days,
        h_values,
        window,
        step,
    })
}
