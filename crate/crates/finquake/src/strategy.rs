//! Daily direction predictors: coin-flip, momentum, and RSI divergence.
//!
//! All day indices are zero-based positions into the close series. A
//! prediction at day `j` concerns the next move, i.e. the sign of
//! `F[j+1] - F[j]` (the avalanche engine anchors at `j - 1` so the same
//! prediction applies to `F[j] - F[j-1]`).

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng;
use crate::series::IndexSeries;

/// Predicted direction of the next daily move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    /// Direction of a price difference; exact ties resolve upward.
    fn from_diff_tie_up(diff: f64) -> Direction {
        if diff >= 0.0 {
            Direction::Up
        } else {
            Direction::Down
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Up => write!(f, "up"),
            Direction::Down => write!(f, "down"),
        }
    }
}

/// Lookback parameters of the RSI-divergence predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsiSpec {
    /// Days of returns entering the RSI itself.
    pub period: usize,
    /// Days over which the price and RSI trends are compared.
    pub trend_window: usize,
}

impl Default for RsiSpec {
    fn default() -> Self {
        // the customary 14/14-day setup
        RsiSpec {
            period: 14,
            trend_window: 14,
        }
    }
}

impl RsiSpec {
    pub fn new(period: usize, trend_window: usize) -> Result<Self> {
        if period == 0 || trend_window == 0 {
            return Err(Error::invalid("RSI period and trend window must be at least 1"));
        }
        Ok(RsiSpec { period, trend_window })
    }

    /// First day with enough history for a divergence prediction.
    pub fn warmup(&self) -> usize {
        self.period + self.trend_window
    }
}

/// A configured strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategySpec {
    /// Fair coin.
    Rnd,
    /// Momentum over `lag` days.
    Mom { lag: usize },
    /// RSI divergence.
    Rsi(RsiSpec),
}

impl StrategySpec {
    /// Days of history the strategy needs before its first prediction.
    pub fn warmup(&self) -> usize {
        match self {
            StrategySpec::Rnd => 0,
            StrategySpec::Mom { lag } => *lag,
            StrategySpec::Rsi(spec) => spec.warmup(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Rnd => "rnd",
            StrategySpec::Mom { .. } => "mom",
            StrategySpec::Rsi(_) => "rsi",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StrategySpec::Rnd => Ok(()),
            StrategySpec::Mom { lag } => {
                if *lag == 0 {
                    Err(Error::invalid("momentum lag must be at least 1"))
                } else {
                    Ok(())
                }
            }
            StrategySpec::Rsi(spec) => RsiSpec::new(spec.period, spec.trend_window).map(|_| ()),
        }
    }

    /// Predict at day `j`; the generator is only touched by `Rnd`.
    pub fn predict(&self, series: &IndexSeries, j: usize, rng: &mut impl RngCore) -> Result<Direction> {
        match self {
            StrategySpec::Rnd => Ok(predict_rnd(rng)),
            StrategySpec::Mom { lag } => predict_mom(series, j, *lag),
            StrategySpec::Rsi(spec) => predict_rsi(series, j, spec),
        }
    }
}

/// Coin toss: up with probability 1/2, consuming exactly one draw.
pub fn predict_rnd(rng: &mut impl RngCore) -> Direction {
    if rng::coin(rng) {
        Direction::Up
    } else {
        Direction::Down
    }
}

/// Momentum sign: up iff `F[j] - F[j - lag] > 0`; an exact tie counts as up.
pub fn predict_mom(series: &IndexSeries, j: usize, lag: usize) -> Result<Direction> {
    if lag == 0 {
        return Err(Error::invalid("momentum lag must be at least 1"));
    }
    if j < lag || j >= series.len() {
        return Err(Error::insufficient(format!(
            "momentum at day {j} needs {lag} days of history (T={})",
            series.len()
        )));
    }
    let f = series.values();
    Ok(Direction::from_diff_tie_up(f[j] - f[j - lag]))
}

/// Relative strength index at day `j` over the `period` returns ending there:
/// `RSI = 100 - 100/(1 + RS)` with RS the ratio of summed gains to summed
/// losses. All-gain windows give 100, all-loss windows 0, flat windows 50.
pub fn rsi_value(series: &IndexSeries, j: usize, period: usize) -> Result<f64> {
    if period == 0 {
        return Err(Error::invalid("RSI period must be at least 1"));
    }
    if j < period || j >= series.len() {
        return Err(Error::insufficient(format!(
            "RSI at day {j} needs {period} returns of history (T={})",
            series.len()
        )));
    }
    let f = series.values();
    let mut gains = 0.0;
    let mut losses = 0.0;
    for i in (j - period + 1)..=j {
        let r = (f[i] - f[i - 1]) / f[i - 1];
        if r > 0.0 {
            gains += r;
        } else if r < 0.0 {
            losses += -r;
        }
    }
    Ok(if losses == 0.0 && gains == 0.0 {
        50.0
    } else if losses == 0.0 {
        100.0
    } else if gains == 0.0 {
        0.0
    } else {
        let rs = gains / losses;
        100.0 - 100.0 / (1.0 + rs)
    })
}

/// RSI-divergence predictor.
///
/// Over the last `trend_window` days the price trend is the sign of
/// `F[j] - F[j - trend_window]` (tie up) and the RSI trend the sign of
/// `RSI(j) - RSI(j - trend_window)` (tie follows the price trend). Agreement
/// predicts continuation of the price trend; disagreement - a divergence -
/// predicts its reversal.
pub fn predict_rsi(series: &IndexSeries, j: usize, spec: &RsiSpec) -> Result<Direction> {
    spec.validate_fields()?;
    if j < spec.warmup() || j >= series.len() {
        return Err(Error::insufficient(format!(
            "RSI divergence at day {j} needs {} days of history (T={})",
            spec.warmup(),
            series.len()
        )));
    }
    let f = series.values();
    let price_trend = Direction::from_diff_tie_up(f[j] - f[j - spec.trend_window]);
    let rsi_now = rsi_value(series, j, spec.period)?;
    let rsi_then = rsi_value(series, j - spec.trend_window, spec.period)?;
    let rsi_trend = if rsi_now > rsi_then {
        Direction::Up
    } else if rsi_now < rsi_then {
        Direction::Down
    } else {
        price_trend
    };
    Ok(if rsi_trend == price_trend {
        price_trend
    } else {
        price_trend.flip()
    })
}

impl RsiSpec {
    fn validate_fields(&self) -> Result<()> {
        if self.period == 0 || self.trend_window == 0 {
            return Err(Error::invalid("RSI period and trend window must be at least 1"));
        }
        Ok(())
    }
}
