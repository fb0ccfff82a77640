//! CSV ingestion of index series and tidy CSV output for figures and ledgers.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::activity::ActivityTime;
use crate::error::{Error, Result};
use crate::hedging::HedgeLedger;
use crate::types::{DayCount, IndexSeries, Observation};

#[derive(Debug, Deserialize)]
struct Row {
    date: String,
    level: String,
}

/// Calendar gap of more than one day between consecutive observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub calendar_days: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub n_rows: usize,
    pub first: NaiveDate,
    pub last: NaiveDate,
    pub gaps: Vec<Gap>,
}

pub fn load_index_csv(path: &Path, convention: DayCount) -> Result<(IndexSeries, ParseReport)> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_index_csv(file, convention)
}

/// Parses `date,level` rows in any order. Line numbers in errors are 1-based
/// and count the header.
pub fn parse_index_csv<R: Read>(reader: R, convention: DayCount) -> Result<(IndexSeries, ParseReport)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "level"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `date,level`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut obs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date `{}`: {e}", row.date),
        })?;
        let level: f64 = row.level.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad level `{}`", row.level),
        })?;
        if !(level > 0.0) || !level.is_finite() {
            return Err(Error::NonPositiveLevel { date, level });
        }
        obs.push(Observation { date, level });
    }

    let series = IndexSeries::from_unsorted(obs, convention)?;
    let dates = series.dates();
    let gaps = dates
        .windows(2)
        .filter_map(|w| {
            let days = (w[1] - w[0]).num_days();
            (days > 1).then_some(Gap {
                from: w[0],
                to: w[1],
                calendar_days: days,
            })
        })
        .collect();
    let report = ParseReport {
        n_rows: series.len(),
        first: dates[0],
        last: *dates.last().unwrap(),
        gaps,
    };
    Ok((series, report))
}

pub fn write_index_csv<W: Write>(series: &IndexSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "level"])?;
    for o in series.observations() {
        w.write_record([o.date.to_string(), o.level.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig1,
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    pub fn columns(self) -> [&'static str; 2] {
        match self {
            Figure::Fig1 => ["date", "level"],
            Figure::Fig2 => ["date", "tau"],
            Figure::Fig3 => ["date", "price"],
            Figure::Fig4 => ["date", "fraction"],
            Figure::Fig5 => ["date", "pnl"],
            Figure::Fig6 => ["date", "pnl_enhanced"],
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown figure `{s}`")))
    }
}

/// Upstream results available for figure output.
#[derive(Debug, Default, Clone, Copy)]
pub struct FigureSources<'a> {
    pub series: Option<&'a IndexSeries>,
    pub activity: Option<&'a ActivityTime>,
    pub plain: Option<&'a HedgeLedger>,
    pub enhanced: Option<&'a HedgeLedger>,
}

fn missing(fig: Figure, what: &str) -> Error {
    Error::MissingData(format!("{} needs {what}", fig.name()))
}

fn ledger_dates(fig: Figure, ledger: &HedgeLedger) -> Result<&[NaiveDate]> {
    ledger
        .dates
        .as_deref()
        .ok_or_else(|| missing(fig, "a dated hedge ledger"))
}

/// Writes the tidy CSV for `fig`.
pub fn emit_figure_data<W: Write>(fig: Figure, src: &FigureSources<'_>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match fig {
        Figure::Fig1 => {
            let series = src.series.ok_or_else(|| missing(fig, "an index series"))?;
            w.write_record(fig.columns())?;
            for o in series.observations() {
                w.write_record([o.date.to_string(), o.level.to_string()])?;
            }
        }
        Figure::Fig2 => {
            let series = src.series.ok_or_else(|| missing(fig, "an index series"))?;
            let act = src.activity.ok_or_else(|| missing(fig, "a trendline fit"))?;
            if act.tau.len() != series.len() {
                return Err(missing(fig, "a fit of the same series"));
            }
            w.write_record(["date", "tau", "trendline"])?;
            for ((d, tau), trend) in series.dates().iter().zip(&act.tau).zip(act.trendline()) {
                w.write_record([d.to_string(), tau.to_string(), trend.to_string()])?;
            }
        }
        Figure::Fig3 | Figure::Fig4 | Figure::Fig5 => {
            let ledger = src.plain.ok_or_else(|| missing(fig, "a plain hedge ledger"))?;
            let dates = ledger_dates(fig, ledger)?;
            let values = match fig {
                Figure::Fig3 => &ledger.bond_price,
                Figure::Fig4 => &ledger.fraction_gop,
                _ => &ledger.pnl,
            };
            w.write_record(fig.columns())?;
            for (d, v) in dates.iter().zip(values) {
                w.write_record([d.to_string(), v.to_string()])?;
            }
        }
        Figure::Fig6 => {
            let ledger = src.enhanced.ok_or_else(|| missing(fig, "an enhanced hedge ledger"))?;
            let dates = ledger_dates(fig, ledger)?;
            w.write_record(fig.columns())?;
            for (d, v) in dates.iter().zip(&ledger.pnl) {
                w.write_record([d.to_string(), v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Full ledger: `date,t,s_star,tau,price,V,pnl,fraction`. `date` is empty for undated ledgers.
pub fn write_ledger_csv<W: Write>(ledger: &HedgeLedger, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "t", "s_star", "tau", "price", "V", "pnl", "fraction"])?;
    for k in 0..ledger.len() {
        let date = ledger.dates.as_ref().map_or(String::new(), |d| d[k].to_string());
        w.write_record([
            date,
            ledger.grid.points()[k].to_string(),
            ledger.s_star[k].to_string(),
            ledger.tau[k].to_string(),
            ledger.bond_price[k].to_string(),
            ledger.portfolio_value[k].to_string(),
            ledger.pnl[k].to_string(),
            ledger.fraction_gop[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Activity-time table: `date,qv,tau,trendline`.
pub fn write_activity_csv<W: Write>(series: &IndexSeries, act: &ActivityTime, out: W) -> Result<()> {
    if act.tau.len() != series.len() {
        return Err(Error::MissingData("activity time does not match the series".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "qv", "tau", "trendline"])?;
    for (((d, qv), tau), trend) in series.dates().iter().zip(&act.qv).zip(&act.tau).zip(act.trendline()) {
        w.write_record([d.to_string(), qv.to_string(), tau.to_string(), trend.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
