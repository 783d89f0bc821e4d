//! Rolling-window indices and rebalanced strategy backtests on price data.
//!
//! Losses are negated simple returns, `L_t = −(P_t/P_{t−1} − 1)`. A year has
//! 252 trading days and a rebalancing period is a fixed number of rows.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{unit_level, Error, Result};
use crate::indices::IndexSpec;
use crate::matrix::{SampleMatrix, Weights};
use crate::optimize::{markowitz, min_dq_es, min_dq_var, min_dr_sd, OptProblem, VarMethod};

pub const TRADING_DAYS: f64 = 252.0;

/// Daily volatility below this is reported as zero.
pub const ZERO_VOL_TOL: f64 = 1e-12;

/// Positive prices on strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: SampleMatrix,
}

impl PriceTable {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: SampleMatrix) -> Result<Self> {
        if dates.len() != prices.rows() || tickers.len() != prices.cols() {
            return Err(Error::Data(format!(
                "{} dates and {} tickers for a {}x{} price matrix",
                dates.len(),
                tickers.len(),
                prices.rows(),
                prices.cols()
            )));
        }
        if let Some(k) = dates.windows(2).position(|d| d[0] >= d[1]) {
            return Err(Error::Data(format!(
                "dates not strictly increasing at row {}: {} then {}",
                k + 1,
                dates[k],
                dates[k + 1]
            )));
        }
        if let Some(k) = prices.as_slice().iter().position(|p| *p <= 0.0) {
            return Err(Error::Data(format!(
                "non-positive price at row {}, column {}",
                k / prices.cols(),
                tickers[k % prices.cols()]
            )));
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn prices(&self) -> &SampleMatrix {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// `(T−1) × n` losses `−(P_t/P_{t−1} − 1)`.
pub fn prices_to_losses(prices: &PriceTable) -> Result<SampleMatrix> {
    let p = &prices.prices;
    if p.rows() < 2 {
        return Err(Error::Data("need at least two price rows".into()));
    }
    let rows: Vec<Vec<f64>> = (1..p.rows())
        .map(|t| {
            p.row(t)
                .iter()
                .zip(p.row(t - 1))
                .map(|(now, prev)| -(now / prev - 1.0))
                .collect()
        })
        .collect();
    SampleMatrix::from_rows(&rows)
}

/// The index on every window of `window` consecutive rows, in order; the
/// value at position `k` uses rows `k..k + window`.
pub fn rolling_index(losses: &SampleMatrix, window: usize, spec: IndexSpec) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidInput("window must be ≥ 1".into()));
    }
    if window > losses.rows() {
        return Err(Error::Data(format!(
            "window {window} exceeds the {} available loss rows",
            losses.rows()
        )));
    }
    (0..=losses.rows() - window)
        .into_par_iter()
        .map(|k| spec.eval(&losses.select_rows(k..k + window)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    DqVar,
    DqEs,
    DrSd,
    Markowitz,
    /// Equal weights restored at every rebalance.
    Ew,
    /// Equal initial weights, shares never traded.
    Bh,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::DqVar,
        Strategy::DqEs,
        Strategy::DrSd,
        Strategy::Markowitz,
        Strategy::Ew,
        Strategy::Bh,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::DqVar => "dq-var",
            Strategy::DqEs => "dq-es",
            Strategy::DrSd => "dr-sd",
            Strategy::Markowitz => "markowitz",
            Strategy::Ew => "ew",
            Strategy::Bh => "bh",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub window: usize,
    pub rebalance: usize,
    pub alpha: f64,
    /// Annual expected return targeted by the Markowitz strategy.
    pub markowitz_target: f64,
    pub var_method: VarMethod,
    /// Iteration budget of the DQ^ES optimizer.
    pub es_iterations: usize,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            window: 500,
            rebalance: 21,
            alpha: 0.05,
            markowitz_target: 0.10,
            var_method: VarMethod::LocalSearch,
            es_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub annual_return: f64,
    pub annual_volatility: f64,
    pub sharpe: f64,
    /// Volatility was zero; `sharpe` is then a signed infinity (or 0 when the
    /// excess return is 0 too).
    pub zero_volatility: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rebalance {
    pub date: NaiveDate,
    pub weights: Weights,
    /// The optimizer failed and the drifted weights were kept.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub strategy: Strategy,
    pub dates: Vec<NaiveDate>,
    pub wealth: Vec<f64>,
    pub weights_by_period: Vec<Rebalance>,
    pub stats: SummaryStats,
}

/// AR = mean daily return × 252, AV = sample SD × √252, SR = (AR − rf)/AV.
pub fn summary_stats(wealth: &[f64], rf: f64) -> Result<SummaryStats> {
    if wealth.len() < 2 {
        return Err(Error::InvalidInput("need at least two wealth values".into()));
    }
    let r: Vec<f64> = wealth.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let sd = if r.len() > 1 {
        (r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let annual_return = mean * TRADING_DAYS;
    let zero_volatility = sd <= ZERO_VOL_TOL;
    let annual_volatility = if zero_volatility { 0.0 } else { sd * TRADING_DAYS.sqrt() };
    let excess = annual_return - rf;
    let sharpe = if !zero_volatility {
        excess / annual_volatility
    } else if excess == 0.0 {
        0.0
    } else {
        excess.signum() * f64::INFINITY
    };
    Ok(SummaryStats {
        annual_return,
        annual_volatility,
        sharpe,
        zero_volatility,
    })
}

fn fit(strategy: Strategy, window: SampleMatrix, current: &Weights, cfg: &BacktestConfig) -> Result<Weights> {
    let n = window.cols();
    let problem = || -> Result<OptProblem> {
        Ok(OptProblem::new(window.clone(), cfg.alpha)?
            .with_w0(current.clone())?
            .with_method(cfg.var_method)
            .with_max_iter(cfg.es_iterations))
    };
    Ok(match strategy {
        Strategy::DqVar => min_dq_var(&problem()?)?.w,
        Strategy::DqEs => min_dq_es(&problem()?)?.w,
        Strategy::DrSd => min_dr_sd(&window)?.w,
        Strategy::Markowitz => markowitz(&window, cfg.markowitz_target / TRADING_DAYS)?.w,
        Strategy::Ew => Weights::uniform(n),
        Strategy::Bh => current.clone(),
    })
}

/// Simulates the strategy from the first date with a full window of history.
///
/// Wealth starts at 1 on price row `window` and compounds with the realized
/// weighted simple returns; weights drift with prices between rebalances,
/// which happen every `rebalance` rows from the start. Optimizers are warm
/// started from the drifted current weights. An infeasible or degenerate fit
/// keeps the current weights and logs a warning.
pub fn run_strategy(prices: &PriceTable, strategy: Strategy, cfg: &BacktestConfig) -> Result<BacktestReport> {
    unit_level(cfg.alpha)?;
    if cfg.rebalance == 0 || cfg.window == 0 {
        return Err(Error::InvalidInput("window and rebalance must be ≥ 1".into()));
    }
    let losses = prices_to_losses(prices)?;
    if cfg.window >= prices.len() {
        return Err(Error::Data(format!(
            "window {} leaves no holding period in {} price rows",
            cfg.window,
            prices.len()
        )));
    }
    let n = losses.cols();
    let start = cfg.window;
    let mut w = Weights::uniform(n).into_vec();
    let mut wealth = vec![1.0];
    let mut dates = vec![prices.dates()[start]];
    let mut periods = Vec::new();

    for t in start..prices.len() {
        if (t - start).is_multiple_of(cfg.rebalance) && t + 1 < prices.len() {
            let current = crate::optimize::to_weights(&w)?;
            let history = losses.select_rows(t - cfg.window..t)?;
            let (next, fallback) = match fit(strategy, history, &current, cfg) {
                Ok(next) => (next, false),
                Err(e @ (Error::Infeasible(_) | Error::Degenerate(_) | Error::Solver(_))) => {
                    log::warn!(
                        "{} on {}: {e}; keeping current weights",
                        strategy.label(),
                        prices.dates()[t]
                    );
                    (current, true)
                }
                Err(e) => return Err(e),
            };
            w = next.as_slice().to_vec();
            periods.push(Rebalance {
                date: prices.dates()[t],
                weights: next,
                fallback,
            });
        }
        if t + 1 == prices.len() {
            break;
        }
        // loss row t is the move from price row t to t + 1
        let r: Vec<f64> = losses.row(t).iter().map(|l| -l).collect();
        let growth: f64 = 1.0 + w.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
        if growth <= 0.0 {
            return Err(Error::Data(format!(
                "portfolio wiped out on {}",
                prices.dates()[t + 1]
            )));
        }
        for (wi, ri) in w.iter_mut().zip(&r) {
            *wi *= (1.0 + ri) / growth;
        }
        wealth.push(wealth.last().expect("non-empty") * growth);
        dates.push(prices.dates()[t + 1]);
    }

    let stats = summary_stats(&wealth, 0.0).unwrap_or(SummaryStats {
        annual_return: 0.0,
        annual_volatility: 0.0,
        sharpe: 0.0,
        zero_volatility: true,
    });
    Ok(BacktestReport {
        strategy,
        dates,
        wealth,
        weights_by_period: periods,
        stats,
    })
}
