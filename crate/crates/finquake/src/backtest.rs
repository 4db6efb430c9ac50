//! Day-by-day strategy scoring over a partition of the series into equal
//! trading windows.
//!
//! Every enabled strategy predicts the sign of the next daily move on every
//! day that all of them have warmed up, so win percentages share one
//! denominator. A day with a flat close scores as a loss for either
//! prediction. Only the coin-flip strategy is stochastic; repeated runs exist
//! to average its noise (deterministic strategies repeat bit-identically) and
//! the reported fluctuation statistic is the std across windows of the
//! run-averaged win rate.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::series::{window_volatility, IndexSeries};
use crate::strategy::{Direction, StrategySpec};

/// Backtest setup for one window count.
#[derive(Debug, Clone)]
pub struct BacktestConfig {
    /// Number of equal trading windows N_w.
    pub windows: usize,
    /// Repetitions; only the coin-flip strategy varies across them.
    pub runs: usize,
    /// Strategies scored side by side.
    pub strategies: Vec<StrategySpec>,
    /// Master seed; run r draws from `derive_seed(seed, r)`.
    pub seed: u64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            windows: 30,
            runs: 10,
            strategies: vec![
                StrategySpec::Rnd,
                StrategySpec::Mom { lag: 7 },
                StrategySpec::Rsi(crate::strategy::RsiSpec::default()),
            ],
            seed: 42,
        }
    }
}

/// Per-strategy outcome of a backtest.
#[derive(Debug, Clone)]
pub struct StrategyStats {
    pub spec: StrategySpec,
    /// Win percentage per window, averaged over runs.
    pub per_window_win_pct: Vec<f64>,
    /// Mean of the per-window win percentages.
    pub mean_win_pct: f64,
    /// Population std of the per-window win percentages.
    pub std_win_pct: f64,
}

/// Backtest result for one window count.
#[derive(Debug, Clone)]
pub struct WindowStats {
    pub windows: usize,
    /// Window length T_w = floor(T / N_w) in days.
    pub window_len: usize,
    /// Scored days per window (the first windows lose warm-up days).
    pub scored_per_window: Vec<usize>,
    /// Total scored days, identical for every strategy.
    pub scored_days: usize,
    /// Volatility of the returns inside each window.
    pub volatility: Vec<f64>,
    pub strategies: Vec<StrategyStats>,
    pub runs: usize,
}

// a flat close defeats both directions
fn wins_day(prediction: Direction, realized: f64) -> bool {
    match prediction {
        Direction::Up => realized > 0.0,
        Direction::Down => realized < 0.0,
    }
}

/// Walk each strategy through the series and report per-window win rates.
pub fn run_backtest(series: &IndexSeries, cfg: &BacktestConfig) -> Result<WindowStats> {
    if cfg.runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    if cfg.strategies.is_empty() {
        return Err(Error::invalid("no strategies enabled"));
    }
    for spec in &cfg.strategies {
        spec.validate()?;
    }
    let t = series.len();
    let volatility = window_volatility(series, cfg.windows)?;
    let window_len = volatility.window_len;

    // all strategies score the same days: every one of them must be warm
    let warmup = cfg.strategies.iter().map(StrategySpec::warmup).max().unwrap_or(0);
    // day j is scoreable when j+1 exists and j falls inside a window
    let last = (cfg.windows * window_len).min(t - 1);
    if warmup >= last {
        return Err(Error::insufficient(format!(
            "warm-up of {warmup} days leaves no scoreable day (T={t}, {} windows)",
            cfg.windows
        )));
    }
    let scored_per_window: Vec<usize> = (0..cfg.windows)
        .map(|w| {
            let lo = (w * window_len).max(warmup);
            let hi = ((w + 1) * window_len).min(last);
            hi.saturating_sub(lo)
        })
        .collect();
    let scored_days: usize = scored_per_window.iter().sum();

    let f = series.values();
    let n_strats = cfg.strategies.len();
    let win_pct = |wins: &[u64]| -> Vec<f64> {
        wins.iter()
            .zip(&scored_per_window)
            .map(|(&w, &days)| if days > 0 { 100.0 * w as f64 / days as f64 } else { 0.0 })
            .collect()
    };
    let mut per_window = vec![Vec::new(); n_strats];

    // deterministic strategies repeat bit-identically, so score them once
    for (s, spec) in cfg.strategies.iter().enumerate() {
        if matches!(spec, StrategySpec::Rnd) {
            continue;
        }
        let mut wins = vec![0u64; cfg.windows];
        let mut sink = rng_from_seed(0); // never drawn from
        for j in warmup..last {
            let prediction = spec.predict(series, j, &mut sink)?;
            if wins_day(prediction, f[j + 1] - f[j]) {
                wins[j / window_len] += 1;
            }
        }
        per_window[s] = win_pct(&wins);
    }

    // coin-flip strategies: average the per-window win rate over the runs
    let rnd_ids: Vec<usize> = (0..n_strats)
        .filter(|&s| matches!(cfg.strategies[s], StrategySpec::Rnd))
        .collect();
    if !rnd_ids.is_empty() {
        let mut acc = vec![vec![0.0f64; cfg.windows]; rnd_ids.len()];
        for run in 0..cfg.runs {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, run as u64));
            let mut wins = vec![vec![0u64; cfg.windows]; rnd_ids.len()];
            for j in warmup..last {
                let realized = f[j + 1] - f[j];
                for (k, _) in rnd_ids.iter().enumerate() {
                    let prediction = crate::strategy::predict_rnd(&mut rng);
                    if wins_day(prediction, realized) {
                        wins[k][j / window_len] += 1;
                    }
                }
            }
            for (k, w) in wins.iter().enumerate() {
                for (a, p) in acc[k].iter_mut().zip(win_pct(w)) {
                    *a += p;
                }
            }
        }
        for (k, &s) in rnd_ids.iter().enumerate() {
            per_window[s] = acc[k].iter().map(|&a| a / cfg.runs as f64).collect();
        }
    }

    let strategies = cfg
        .strategies
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let pw = std::mem::take(&mut per_window[s]);
            let mean = pw.iter().sum::<f64>() / pw.len() as f64;
            let std = crate::series::population_std(&pw);
            StrategyStats {
                spec: *spec,
                per_window_win_pct: pw,
                mean_win_pct: mean,
                std_win_pct: std,
            }
        })
        .collect();

    Ok(WindowStats {
        windows: cfg.windows,
        window_len,
        scored_per_window,
        scored_days,
        volatility: volatility.volatilities,
        strategies,
        runs: cfg.runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{synth_series, IndexSeries, SynthModel};
    use crate::strategy::RsiSpec;

    fn all_three() -> Vec<StrategySpec> {
        vec![
            StrategySpec::Rnd,
            StrategySpec::Mom { lag: 7 },
            StrategySpec::Rsi(RsiSpec::default()),
        ]
    }

    #[test]
    fn momentum_wins_every_day_on_rising_series() {
        let values: Vec<f64> = (1..=200).map(f64::from).collect();
        let s = IndexSeries::new(values, None, "ramp").unwrap();
        let cfg = BacktestConfig {
            windows: 4,
            runs: 1,
            strategies: vec![StrategySpec::Mom { lag: 7 }],
            seed: 1,
        };
        let stats = run_backtest(&s, &cfg).unwrap();
        assert!((stats.strategies[0].mean_win_pct - 100.0).abs() < 1e-12);
        assert!(stats.strategies[0].per_window_win_pct.iter().all(|&p| p == 100.0));
    }

    #[test]
    fn coin_flip_hits_fifty_percent_on_long_series() {
        let s = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 5000, 1000.0, 4, "gbm").unwrap();
        let cfg = BacktestConfig {
            windows: 1,
            runs: 10,
            strategies: vec![StrategySpec::Rnd],
            seed: 42,
        };
        let stats = run_backtest(&s, &cfg).unwrap();
        let mean = stats.strategies[0].mean_win_pct;
        assert!((mean - 50.0).abs() < 3.0, "rnd mean win {mean}%");
    }

    #[test]
    fn deterministic_strategies_identical_across_runs_and_seeds() {
        let s = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 800, 1000.0, 9, "gbm").unwrap();
        let run = |seed: u64, runs: usize| {
            let cfg = BacktestConfig {
                windows: 6,
                runs,
                strategies: vec![StrategySpec::Mom { lag: 7 }, StrategySpec::Rsi(RsiSpec::default())],
                seed,
            };
            run_backtest(&s, &cfg).unwrap()
        };
        let a = run(1, 1);
        let b = run(999, 7);
        for (sa, sb) in a.strategies.iter().zip(&b.strategies) {
            assert_eq!(sa.per_window_win_pct, sb.per_window_win_pct);
            assert_eq!(sa.mean_win_pct, sb.mean_win_pct);
            assert_eq!(sa.std_win_pct, sb.std_win_pct);
        }
    }

    #[test]
    fn scored_days_account_for_partition_and_warmup() {
        let s = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 1000, 1000.0, 2, "gbm").unwrap();
        for windows in [3usize, 9, 18, 30] {
            let cfg = BacktestConfig {
                windows,
                runs: 1,
                strategies: all_three(),
                seed: 7,
            };
            let stats = run_backtest(&s, &cfg).unwrap();
            let t_w = 1000 / windows;
            let last = (windows * t_w).min(999);
            assert_eq!(stats.scored_days, last - 28, "N_w={windows}");
            assert_eq!(stats.scored_per_window.iter().sum::<usize>(), stats.scored_days);
            assert_eq!(stats.volatility.len(), windows);
        }
    }

    #[test]
    fn warmup_too_long_errors() {
        // 25 days < the 28-day RSI warm-up: nothing is scoreable
        let s = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 25, 1000.0, 2, "gbm").unwrap();
        let cfg = BacktestConfig {
            windows: 1,
            runs: 1,
            strategies: all_three(),
            seed: 7,
        };
        assert!(run_backtest(&s, &cfg).is_err());
        // 30 days leave exactly one scoreable day, which is fine
        let s = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 30, 1000.0, 2, "gbm").unwrap();
        assert!(run_backtest(&s, &cfg).is_ok());
    }

    #[test]
    fn flat_days_score_as_losses_for_both_directions() {
        let s = IndexSeries::new(vec![10.0; 100], None, "flat").unwrap();
        let cfg = BacktestConfig {
            windows: 2,
            runs: 3,
            strategies: all_three(),
            seed: 11,
        };
        let stats = run_backtest(&s, &cfg).unwrap();
        for strat in &stats.strategies {
            assert_eq!(strat.mean_win_pct, 0.0, "{} won on a flat series", strat.spec.name());
        }
    }

    #[test]
    fn run_averaging_shrinks_coin_flip_window_noise() {
        // the per-window std of the run-averaged coin-flip win rate drops
        // roughly like 1/sqrt(runs)
        let s = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 3000, 1000.0, 5, "gbm").unwrap();
        let std_for_runs = |runs: usize| {
            let cfg = BacktestConfig {
                windows: 10,
                runs,
                strategies: vec![StrategySpec::Rnd],
                seed: 3,
            };
            run_backtest(&s, &cfg).unwrap().strategies[0].std_win_pct
        };
        let one = std_for_runs(1);
        let many = std_for_runs(25);
        assert!(
            many < one,
            "averaging over runs should shrink window noise: {one} -> {many}"
        );
    }
}
