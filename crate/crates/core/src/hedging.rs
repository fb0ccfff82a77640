//! Discrete-time self-financing replication of the zero-coupon bond.
//!
//! At each observation the hedge invests the model fraction of its current
//! value in the stock GOP and the rest in the savings account, then holds
//! those units until the next observation:
//!
//! ```text
//! V_{k+1} = V_k (pi_k S*_{k+1} / S*_k + 1 - pi_k)
//! ```
//!
//! The enhanced hedge replaces the trendline by the observed activity time
//! and moves everything into the savings account once the observed activity
//! time reaches the trendline value at maturity.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::activity::{observed_activity_time, quadratic_variation_of_levels};
use crate::error::{Error, Result};
use crate::pricing::{exhaust_ratio, fraction_from_ratio, price_from_ratio, ActivityHorizon};
use crate::types::{IndexSeries, MmmParams, TimeGrid};

/// Observation times within this distance of maturity count as maturity.
const MATURITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HedgeVariant {
    Plain,
    Enhanced,
}

impl std::str::FromStr for HedgeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(HedgeVariant::Plain),
            "enhanced" => Ok(HedgeVariant::Enhanced),
            other => Err(Error::InvalidParams(format!("unknown hedge variant `{other}`"))),
        }
    }
}

/// Time-indexed record of a hedge backtest. All values in savings-account units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeLedger {
    pub variant: HedgeVariant,
    pub grid: TimeGrid,
    pub dates: Option<Vec<NaiveDate>>,
    pub maturity: f64,
    pub s_star: Vec<f64>,
    /// Activity time driving the quotes: trendline (plain) or observed (enhanced).
    pub tau: Vec<f64>,
    pub portfolio_value: Vec<f64>,
    pub bond_price: Vec<f64>,
    pub pnl: Vec<f64>,
    pub fraction_gop: Vec<f64>,
    /// Units of the stock GOP held over `[t_k, t_{k+1})`.
    pub gop_units: Vec<f64>,
    /// Units of the savings account held over `[t_k, t_{k+1})`.
    pub savings_units: Vec<f64>,
    pub stopped_at: Option<f64>,
    pub terminal_value: f64,
}

impl HedgeLedger {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Quote used at one rebalancing date.
#[derive(Debug, Clone, Copy)]
struct Quote {
    price: f64,
    fraction: f64,
}

const AT_MATURITY: Quote = Quote {
    price: 1.0,
    fraction: 0.0,
};

fn check_inputs(times: &[f64], levels: &[f64], maturity: f64) -> Result<()> {
    if times.len() != levels.len() || times.len() < 2 {
        return Err(Error::InvalidGrid(format!(
            "need matching times and levels with at least 2 points ({} vs {})",
            times.len(),
            levels.len()
        )));
    }
    if !(times[0] < maturity) {
        return Err(Error::Domain(format!(
            "hedge must start before maturity (start {}, maturity {maturity})",
            times[0]
        )));
    }
    if *times.last().unwrap() > maturity + MATURITY_EPS {
        return Err(Error::InvalidGrid("observation after maturity".into()));
    }
    if levels.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Domain("non-positive level in hedge path".into()));
    }
    Ok(())
}

fn replicate(
    variant: HedgeVariant,
    times: &[f64],
    levels: &[f64],
    tau: Vec<f64>,
    maturity: f64,
    mut quote: impl FnMut(usize) -> Result<Option<Quote>>,
) -> Result<HedgeLedger> {
    let n = times.len();
    let mut value = Vec::with_capacity(n);
    let mut price = Vec::with_capacity(n);
    let mut fraction = Vec::with_capacity(n);
    let mut gop_units = Vec::with_capacity(n);
    let mut savings_units = Vec::with_capacity(n);
    let mut stopped_at = None;

    for k in 0..n {
        // `None` means the stop rule has fired: all wealth in savings from here on.
        let q = if stopped_at.is_some() {
            AT_MATURITY
        } else {
            match quote(k)? {
                Some(q) => q,
                None => {
                    stopped_at = Some(times[k]);
                    AT_MATURITY
                }
            }
        };
        let v = if k == 0 {
            q.price
        } else {
            gop_units[k - 1] * levels[k] + savings_units[k - 1]
        };
        let units = q.fraction * v / levels[k];
        value.push(v);
        price.push(q.price);
        fraction.push(q.fraction);
        gop_units.push(units);
        savings_units.push(v - units * levels[k]);
    }

    let pnl = value.iter().zip(&price).map(|(v, p)| v - p).collect();
    Ok(HedgeLedger {
        variant,
        grid: TimeGrid::new(times.to_vec())?,
        dates: None,
        maturity,
        s_star: levels.to_vec(),
        tau,
        terminal_value: *value.last().unwrap(),
        portfolio_value: value,
        bond_price: price,
        pnl,
        fraction_gop: fraction,
        gop_units,
        savings_units,
        stopped_at,
    })
}

/// Plain hedge along raw `(times, levels)` ending at or before `maturity`.
pub fn hedge_path(times: &[f64], levels: &[f64], params: &MmmParams, maturity: f64) -> Result<HedgeLedger> {
    params.validate()?;
    check_inputs(times, levels, maturity)?;
    let tau = times.iter().map(|&t| params.trendline(t)).collect();
    let tau_bar_maturity = params.trendline(maturity);
    replicate(HedgeVariant::Plain, times, levels, tau, maturity, |k| {
        if times[k] >= maturity - MATURITY_EPS {
            return Ok(Some(AT_MATURITY));
        }
        let key = ActivityHorizon::from_activity_times(params.trendline(times[k]), tau_bar_maturity)?;
        let x = exhaust_ratio(levels[k], &key)?;
        Ok(Some(Quote {
            price: price_from_ratio(x),
            fraction: fraction_from_ratio(x),
        }))
    })
}

/// Enhanced hedge along raw `(times, levels)` with observed activity times `tau_obs`.
pub fn enhanced_hedge_path(
    times: &[f64],
    levels: &[f64],
    params: &MmmParams,
    maturity: f64,
    tau_obs: &[f64],
) -> Result<HedgeLedger> {
    params.validate()?;
    check_inputs(times, levels, maturity)?;
    if tau_obs.len() != times.len() {
        return Err(Error::InvalidGrid("observed activity time length mismatch".into()));
    }
    let tau_bar_maturity = params.trendline(maturity);
    replicate(HedgeVariant::Enhanced, times, levels, tau_obs.to_vec(), maturity, |k| {
        if tau_obs[k] >= tau_bar_maturity {
            return Ok(None);
        }
        if times[k] >= maturity - MATURITY_EPS {
            return Ok(Some(AT_MATURITY));
        }
        let key = ActivityHorizon::from_activity_times(tau_obs[k], tau_bar_maturity)?;
        let x = exhaust_ratio(levels[k], &key)?;
        Ok(Some(Quote {
            price: price_from_ratio(x),
            fraction: fraction_from_ratio(x),
        }))
    })
}

/// Observed activity time along `levels`, accumulating quadratic variation
/// from the first level onwards.
pub fn running_activity_time(levels: &[f64], initial_activity_time: f64) -> Vec<f64> {
    observed_activity_time(&quadratic_variation_of_levels(levels), initial_activity_time)
}

/// Observations of `series` from its start up to `maturity`, with their times.
fn hedge_window(series: &IndexSeries, maturity: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<NaiveDate>)> {
    let times = series.times();
    let end = *times.last().unwrap();
    if end < maturity - MATURITY_EPS {
        return Err(Error::SeriesTooShort {
            series_end: end,
            maturity,
        });
    }
    let n = times.iter().take_while(|&&t| t <= maturity + MATURITY_EPS).count();
    if n < 2 {
        return Err(Error::Domain("maturity leaves fewer than two observations".into()));
    }
    let levels = series.levels()[..n].to_vec();
    let dates = series.dates()[..n].to_vec();
    Ok((times[..n].to_vec(), levels, dates))
}

/// Plain trendline hedge of the bond maturing at `maturity` (years since the
/// series' first date), started at the first observation.
pub fn run_hedge(series: &IndexSeries, params: &MmmParams, maturity: f64) -> Result<HedgeLedger> {
    let (times, levels, dates) = hedge_window(series, maturity)?;
    let mut ledger = hedge_path(&times, &levels, params, maturity)?;
    ledger.dates = Some(dates);
    Ok(ledger)
}

/// Enhanced hedge using `params.tau0` as the initial activity time.
pub fn run_enhanced_hedge(series: &IndexSeries, params: &MmmParams, maturity: f64) -> Result<HedgeLedger> {
    run_enhanced_hedge_from(series, params, maturity, params.tau0)
}

/// Enhanced hedge with an explicitly supplied initial activity time, e.g. the
/// value found by the trendline fit.
pub fn run_enhanced_hedge_from(
    series: &IndexSeries,
    params: &MmmParams,
    maturity: f64,
    initial_activity_time: f64,
) -> Result<HedgeLedger> {
    let (times, levels, dates) = hedge_window(series, maturity)?;
    let tau_obs = running_activity_time(&levels, initial_activity_time);
    let mut ledger = enhanced_hedge_path(&times, &levels, params, maturity, &tau_obs)?;
    ledger.dates = Some(dates);
    Ok(ledger)
}

/// Headline numbers of a backtest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnlSummary {
    pub max_abs_pnl: f64,
    pub terminal_pnl: f64,
    pub terminal_value: f64,
    pub stopped_at: Option<f64>,
    pub n_rebalances: usize,
}

pub fn pnl_report(ledger: &HedgeLedger) -> PnlSummary {
    let max_abs_pnl = ledger.pnl.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let intervals = ledger.len().saturating_sub(1);
    let n_rebalances = match ledger.stopped_at {
        Some(rho) => ledger
            .grid
            .points()
            .iter()
            .take_while(|&&t| t < rho)
            .count()
            .min(intervals),
        None => intervals,
    };
    PnlSummary {
        max_abs_pnl,
        terminal_pnl: *ledger.pnl.last().unwrap(),
        terminal_value: ledger.terminal_value,
        stopped_at: ledger.stopped_at,
        n_rebalances,
    }
}
