//! Log-binned histograms and heavy-tail model fitting.
//!
//! Power-law exponents are estimated two ways: the continuous maximum-
//! likelihood estimator above a cutoff `x_min`, and the least-squares slope
//! of the log-binned density (the classic straight-line-on-a-log-log-plot
//! reading). Exponential tails get the matching MLE rate. `compare_models`
//! settles powerlaw-versus-exponential by log-likelihood at a shared cutoff.

use crate::error::{Error, Result};

/// Minimum tail size for a fit someone should trust.
pub const MIN_TAIL_SAMPLES: usize = 50;

/// Histogram over geometric (log-spaced) bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Bin edges, strictly increasing, length = bins + 1.
    pub edges: Vec<f64>,
    /// Raw counts per bin.
    pub counts: Vec<u64>,
    /// Counts normalized by bin width and sample count; integrates to 1.
    pub densities: Vec<f64>,
    /// Total samples binned.
    pub samples: usize,
}

impl Histogram {
    /// Geometric centers of the bins.
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect()
    }

    /// Sum of density * width over the bins; 1 up to rounding.
    pub fn density_integral(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&d, w)| d * (w[1] - w[0]))
            .sum()
    }
}

/// Bin positive values into `bins_per_decade` geometric bins spanning
/// [min, max]. A degenerate all-equal sample occupies a single bin.
pub fn log_binned_histogram(values: &[f64], bins_per_decade: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::insufficient("no values to bin"));
    }
    if bins_per_decade == 0 {
        return Err(Error::invalid("bins per decade must be at least 1"));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::invalid(format!("log binning needs positive values, got {v}")));
        }
        min = min.min(v);
        max = max.max(v);
    }
    let bpd = bins_per_decade as f64;
    let decades = (max / min).log10();
    let bins = ((decades * bpd).ceil() as usize).max(1);
    let edges: Vec<f64> = (0..=bins).map(|i| min * 10f64.powf(i as f64 / bpd)).collect();

    let mut counts = vec![0u64; bins];
    for &v in values {
        let mut idx = ((v / min).log10() * bpd).floor() as isize;
        idx = idx.clamp(0, bins as isize - 1);
        // guard against values rounding just past their edge
        let mut i = idx as usize;
        while i > 0 && v < edges[i] {
            i -= 1;
        }
        while i + 1 < bins && v >= edges[i + 1] {
            i += 1;
        }
        counts[i] += 1;
    }
    let n = values.len() as f64;
    let densities: Vec<f64> = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (n * (w[1] - w[0])))
        .collect();
    Ok(Histogram {
        edges,
        counts,
        densities,
        samples: values.len(),
    })
}

/// Which tail model a fit describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    PowerLaw,
    Exponential,
}

impl std::fmt::Display for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitModel::PowerLaw => write!(f, "powerlaw"),
            FitModel::Exponential => write!(f, "exponential"),
        }
    }
}

/// A fitted tail model.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFit {
    pub model: FitModel,
    /// Power-law exponent (negative, < -1) or exponential rate (positive).
    pub parameter: f64,
    /// Tail cutoff the fit was computed above.
    pub x_min: f64,
    /// Samples at or above the cutoff.
    pub n_tail: usize,
    /// Log-likelihood of the tail under the fitted model.
    pub log_likelihood: f64,
    /// Least-squares slope of the log-binned log-density (power law only,
    /// and only when at least three bins are occupied).
    pub ls_log_slope: Option<f64>,
    /// Estimator tag.
    pub method: &'static str,
}

fn tail(values: &[f64], x_min: f64) -> Result<Vec<f64>> {
    if !(x_min.is_finite() && x_min > 0.0) {
        return Err(Error::invalid(format!("x_min must be positive, got {x_min}")));
    }
    let tail: Vec<f64> = values.iter().copied().filter(|&v| v >= x_min).collect();
    for &v in &tail {
        if !v.is_finite() {
            return Err(Error::invalid("non-finite sample"));
        }
    }
    Ok(tail)
}

fn fit_power_law_impl(values: &[f64], x_min: f64, min_samples: usize) -> Result<DistributionFit> {
    let tail = tail(values, x_min)?;
    let n = tail.len();
    if n < min_samples {
        return Err(Error::insufficient(format!(
            "{n} samples >= {x_min}; need at least {min_samples}"
        )));
    }
    let log_sum: f64 = tail.iter().map(|&v| (v / x_min).ln()).sum();
    if log_sum <= 0.0 {
        return Err(Error::DegenerateSample(
            "all tail samples equal the cutoff; no power-law scale".into(),
        ));
    }
    // continuous MLE: alpha = 1 + n / sum(ln(x / x_min))
    let alpha = 1.0 + n as f64 / log_sum;
    let log_likelihood = n as f64 * ((alpha - 1.0).ln() - x_min.ln()) - alpha * log_sum;

    // the visual-fit analogue: slope of the log-binned density
    let ls_log_slope = log_binned_histogram(&tail, 10).ok().and_then(|hist| {
        let pts: Vec<(f64, f64)> = hist
            .centers()
            .iter()
            .zip(&hist.densities)
            .filter(|(_, &d)| d > 0.0)
            .map(|(&c, &d)| (c.ln(), d.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    });

    Ok(DistributionFit {
        model: FitModel::PowerLaw,
        parameter: -alpha,
        x_min,
        n_tail: n,
        log_likelihood,
        ls_log_slope,
        method: "continuous-mle",
    })
}

fn fit_exponential_impl(values: &[f64], x_min: f64, min_samples: usize) -> Result<DistributionFit> {
    let tail = tail(values, x_min)?;
    let n = tail.len();
    if n < min_samples {
        return Err(Error::insufficient(format!(
            "{n} samples >= {x_min}; need at least {min_samples}"
        )));
    }
    let excess: f64 = tail.iter().map(|&v| v - x_min).sum();
    if excess <= 0.0 {
        return Err(Error::DegenerateSample(
            "all tail samples equal the cutoff; no exponential scale".into(),
        ));
    }
    // MLE rate: 1 / mean excess over the cutoff
    let rate = n as f64 / excess;
    let log_likelihood = n as f64 * rate.ln() - rate * excess;
    Ok(DistributionFit {
        model: FitModel::Exponential,
        parameter: rate,
        x_min,
        n_tail: n,
        log_likelihood,
        ls_log_slope: None,
        method: "excess-mean-mle",
    })
}

/// Fit a power law to the samples at or above `x_min`.
pub fn fit_power_law(values: &[f64], x_min: f64) -> Result<DistributionFit> {
    fit_power_law_impl(values, x_min, MIN_TAIL_SAMPLES)
}

/// Fit a shifted exponential to the samples at or above `x_min`.
pub fn fit_exponential(values: &[f64], x_min: f64) -> Result<DistributionFit> {
    fit_exponential_impl(values, x_min, MIN_TAIL_SAMPLES)
}

/// Outcome of the power-law-versus-exponential comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub preferred: FitModel,
    /// Power-law log-likelihood minus exponential log-likelihood.
    pub log_likelihood_ratio: f64,
    /// Raised when the tail is smaller than [`MIN_TAIL_SAMPLES`].
    pub low_confidence: bool,
    pub power_law: DistributionFit,
    pub exponential: DistributionFit,
}

/// Fit both tail models at a shared cutoff and prefer the higher likelihood.
/// Runs on tails as small as three samples but flags anything under
/// [`MIN_TAIL_SAMPLES`] as low-confidence.
pub fn compare_models(values: &[f64], x_min: f64) -> Result<ModelComparison> {
    let power_law = fit_power_law_impl(values, x_min, 3)?;
    let exponential = fit_exponential_impl(values, x_min, 3)?;
    let ratio = power_law.log_likelihood - exponential.log_likelihood;
    Ok(ModelComparison {
        preferred: if ratio >= 0.0 { FitModel::PowerLaw } else { FitModel::Exponential },
        log_likelihood_ratio: ratio,
        low_confidence: power_law.n_tail < MIN_TAIL_SAMPLES,
        power_law,
        exponential,
    })
}


#[cfg(test)]
mod tests {
    use super::oracle::{sample_exponential, sample_power_law};
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn histogram_all_equal_occupies_single_bin() {
        let hist = log_binned_histogram(&[3.5; 40], 10).unwrap();
        assert_eq!(hist.counts.len(), 1);
        assert_eq!(hist.counts[0], 40);
        assert!((hist.density_integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_integral_is_one() {
        let mut rng = rng_from_seed(8);
        let values = sample_power_law(&mut rng, -2.0, 1.0, 100_000);
        let hist = log_binned_histogram(&values, 10).unwrap();
        assert!((hist.density_integral() - 1.0).abs() < 1e-9);
        assert_eq!(hist.counts.iter().sum::<u64>() as usize, hist.samples);
        assert!(hist.edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn histogram_rejects_bad_input() {
        assert!(log_binned_histogram(&[], 10).is_err());
        assert!(log_binned_histogram(&[1.0, -2.0], 10).is_err());
        assert!(log_binned_histogram(&[1.0, 0.0], 10).is_err());
        assert!(log_binned_histogram(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn histogram_log_log_slope_matches_generating_exponent() {
        let mut rng = rng_from_seed(17);
        let values = sample_power_law(&mut rng, -2.0, 1.0, 100_000);
        let fit = fit_power_law(&values, 1.0).unwrap();
        let slope = fit.ls_log_slope.expect("enough occupied bins");
        assert!(
            (slope - (-2.0)).abs() < 0.15,
            "binned log-log slope {slope} strays from -2.0"
        );
    }

    #[test]
    fn power_law_mle_recovers_exponent() {
        let mut rng = rng_from_seed(23);
        let values = sample_power_law(&mut rng, -2.06, 1.0, 100_000);
        let fit = fit_power_law(&values, 1.0).unwrap();
        assert!(
            (fit.parameter - (-2.06)).abs() < 0.05,
            "mle exponent {}",
            fit.parameter
        );
        assert_eq!(fit.n_tail, 100_000);
    }

    #[test]
    fn power_law_mle_small_sample_tolerance() {
        // +-0.2 at n = 1000 across seeds
        for seed in 0..10u64 {
            let mut rng = rng_from_seed(100 + seed);
            let values = sample_power_law(&mut rng, -2.4, 5.0, 1000);
            let fit = fit_power_law(&values, 5.0).unwrap();
            assert!(
                (fit.parameter - (-2.4)).abs() < 0.2,
                "seed {seed}: exponent {}",
                fit.parameter
            );
        }
    }

    #[test]
    fn power_law_fit_errors() {
        assert!(fit_power_law(&[2.0; 100], 2.0).is_err()); // degenerate
        assert!(fit_power_law(&[1.0, 2.0, 3.0], 1.0).is_err()); // too few
        assert!(fit_power_law(&[1.0; 100], -1.0).is_err()); // bad cutoff
    }

    #[test]
    fn power_law_mle_scale_invariant() {
        let mut rng = rng_from_seed(31);
        let values = sample_power_law(&mut rng, -1.9, 2.0, 20_000);
        let fit = fit_power_law(&values, 2.0).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * 37.5).collect();
        let fit_scaled = fit_power_law(&scaled, 2.0 * 37.5).unwrap();
        assert!(
            (fit.parameter - fit_scaled.parameter).abs() < 1e-9,
            "{} vs {}",
            fit.parameter,
            fit_scaled.parameter
        );
    }

    #[test]
    fn exponential_mle_recovers_rate() {
        let mut rng = rng_from_seed(41);
        let values = sample_exponential(&mut rng, 0.1, 0.0 + 1.0, 100_000);
        let fit = fit_exponential(&values, 1.0).unwrap();
        assert!((fit.parameter - 0.1).abs() < 0.005, "rate {}", fit.parameter);
    }

    #[test]
    fn exponential_rate_shift_invariant() {
        let mut rng = rng_from_seed(43);
        let values = sample_exponential(&mut rng, 0.25, 1.0, 20_000);
        let fit = fit_exponential(&values, 1.0).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + 9.0).collect();
        let fit_shifted = fit_exponential(&shifted, 10.0).unwrap();
        assert!(
            (fit.parameter - fit_shifted.parameter).abs() < 1e-12,
            "{} vs {}",
            fit.parameter,
            fit_shifted.parameter
        );
    }

    #[test]
    fn exponential_fit_errors_on_constant_sample() {
        assert!(fit_exponential(&[4.0; 100], 4.0).is_err());
    }

    #[test]
    fn compare_prefers_generating_model() {
        let mut rng = rng_from_seed(53);
        let pl = sample_power_law(&mut rng, -2.0, 1.0, 50_000);
        let cmp = compare_models(&pl, 1.0).unwrap();
        assert_eq!(cmp.preferred, FitModel::PowerLaw);
        assert!(!cmp.low_confidence);
        assert!(cmp.log_likelihood_ratio > 0.0);

        let ex = sample_exponential(&mut rng, 0.5, 1.0, 50_000);
        let cmp = compare_models(&ex, 1.0).unwrap();
        assert_eq!(cmp.preferred, FitModel::Exponential);
        assert!(cmp.log_likelihood_ratio < 0.0);
    }

    #[test]
    fn compare_flags_tiny_samples() {
        let cmp = compare_models(&[1.0, 2.0, 4.0, 8.0, 16.0], 1.0).unwrap();
        assert!(cmp.low_confidence);
        assert_eq!(cmp.power_law.n_tail, 5);
    }

    #[test]
    fn mle_calibration_against_oracle_at_two_scales() {
        // +-0.05 at n = 1e5, +-0.2 at n = 1e3
        for (n, tol) in [(100_000usize, 0.05), (1000, 0.2)] {
            let mut rng = rng_from_seed(n as u64);
            let values = sample_power_law(&mut rng, -2.2, 1.0, n);
            let fit = fit_power_law(&values, 1.0).unwrap();
            assert!(
                (fit.parameter - (-2.2)).abs() < tol,
                "n={n}: exponent {}",
                fit.parameter
            );
        }
    }
}
