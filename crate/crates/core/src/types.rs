//! Shared domain types: index observations, time grids and model parameters.
//!
//! Calendar time is a real number of years since an epoch date. The epoch
//! defaults to the first observation of a series.

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Year-fraction convention for turning dates into years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayCount {
    /// Actual calendar days / 365.
    #[default]
    Act365,
    /// Weekdays (Monday to Friday) / 252.
    Act252,
}

impl DayCount {
    /// Signed year fraction from `epoch` to `date`.
    pub fn year_fraction(self, epoch: NaiveDate, date: NaiveDate) -> f64 {
        match self {
            DayCount::Act365 => (date - epoch).num_days() as f64 / 365.0,
            DayCount::Act252 => {
                if date >= epoch {
                    weekdays_between(epoch, date) as f64 / 252.0
                } else {
                    -(weekdays_between(date, epoch) as f64) / 252.0
                }
            }
        }
    }
}

impl std::str::FromStr for DayCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "act365" => Ok(DayCount::Act365),
            "act252" => Ok(DayCount::Act252),
            other => Err(Error::InvalidParams(format!("unknown day count `{other}`"))),
        }
    }
}

/// Number of weekdays in the half-open range `[from, to)`.
fn weekdays_between(from: NaiveDate, to: NaiveDate) -> i64 {
    let days = (to - from).num_days();
    let weeks = days / 7;
    let mut count = weeks * 5;
    let mut d = from + chrono::Duration::days(weeks * 7);
    while d < to {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            count += 1;
        }
        d = d.succ_opt().expect("date overflow");
    }
    count
}

/// One dated index level, denominated in units of the savings account.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub level: f64,
}

/// A validated series of savings-account-denominated index levels, used as
/// the proxy for the stock growth optimal portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    observations: Vec<Observation>,
    convention: DayCount,
}

impl IndexSeries {
    /// Validates dates strictly increasing, levels positive and finite, and
    /// at least two observations. Input must already be sorted.
    pub fn new(observations: Vec<Observation>, convention: DayCount) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::TooFewObservations(observations.len()));
        }
        for (i, obs) in observations.iter().enumerate() {
            if !(obs.level > 0.0) || !obs.level.is_finite() {
                return Err(Error::NonPositiveLevel {
                    date: obs.date,
                    level: obs.level,
                });
            }
            if i > 0 {
                let prev = observations[i - 1].date;
                if obs.date == prev {
                    return Err(Error::DuplicateDate(obs.date));
                }
                if obs.date < prev {
                    return Err(Error::NonMonotoneDate(obs.date));
                }
            }
        }
        Ok(Self {
            observations,
            convention,
        })
    }

    /// Sorts by date, then validates. Duplicates are still rejected.
    pub fn from_unsorted(mut observations: Vec<Observation>, convention: DayCount) -> Result<Self> {
        observations.sort_by_key(|o| o.date);
        Self::new(observations, convention)
    }

    /// Builds a series from levels on consecutive weekdays starting at `start`.
    /// With [`DayCount::Act252`] observation `k` sits exactly at `k / 252` years.
    pub fn from_weekday_levels(start: NaiveDate, levels: &[f64], convention: DayCount) -> Result<Self> {
        let mut date = start;
        while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date.succ_opt().expect("date overflow");
        }
        let mut observations = Vec::with_capacity(levels.len());
        for &level in levels {
            observations.push(Observation { date, level });
            date = next_weekday(date);
        }
        Self::new(observations, convention)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn convention(&self) -> DayCount {
        self.convention
    }

    pub fn epoch(&self) -> NaiveDate {
        self.observations[0].date
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.observations.iter().map(|o| o.date).collect()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.level).collect()
    }

    /// Observation times in years since the first observation.
    pub fn times(&self) -> Vec<f64> {
        self.times_since(self.epoch())
    }

    /// Observation times in years since `epoch`.
    pub fn times_since(&self, epoch: NaiveDate) -> Vec<f64> {
        self.observations
            .iter()
            .map(|o| self.convention.year_fraction(epoch, o.date))
            .collect()
    }

    /// Multiplies every level by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                date: o.date,
                level: o.level * c,
            })
            .collect();
        Self::new(observations, self.convention)
    }
}

fn next_weekday(date: NaiveDate) -> NaiveDate {
    let mut d = date.succ_opt().expect("date overflow");
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d.succ_opt().expect("date overflow");
    }
    d
}

/// Discretisation of `[t0, T]` in years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n_steps` equal steps from `t0` to `t_end`; the last point is exactly `t_end`.
    pub fn uniform(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 || !(t_end > t0) {
            return Err(Error::InvalidGrid(format!(
                "need t_end > t0 and at least one step (t0={t0}, t_end={t_end}, n={n_steps})"
            )));
        }
        let h = (t_end - t0) / n_steps as f64;
        let mut points: Vec<f64> = (0..n_steps).map(|k| t0 + k as f64 * h).collect();
        points.push(t_end);
        Self::new(points)
    }

    pub fn t0(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        *self.points.last().expect("grid is non-empty")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Every `stride`-th point, always keeping the last one.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        let mut points: Vec<f64> = self.points.iter().copied().step_by(stride).collect();
        if *points.last().unwrap() != self.last() {
            points.push(self.last());
        }
        Self::new(points)
    }
}

/// Minimal market model parameters in activity time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmmParams {
    /// Trendline value of the activity time at `t0`.
    pub tau0: f64,
    /// Trendline slope, per year.
    pub a_bar: f64,
    /// Stock GOP level at `t0`, in savings-account units.
    pub s_star_0: f64,
    /// Scale of the net risk-adjusted return; only used for real-world simulation.
    #[serde(default = "default_lambda_bar")]
    pub lambda_bar: f64,
    /// Time (years since the series epoch) at which `tau0` and `s_star_0` apply.
    #[serde(default)]
    pub t0: f64,
}

fn default_lambda_bar() -> f64 {
    0.5
}

impl Default for MmmParams {
    fn default() -> Self {
        Self {
            tau0: 2.15,
            a_bar: 0.053,
            s_star_0: 100.0,
            lambda_bar: default_lambda_bar(),
            t0: 0.0,
        }
    }
}

impl MmmParams {
    pub fn new(tau0: f64, a_bar: f64, s_star_0: f64, lambda_bar: f64) -> Result<Self> {
        let p = Self {
            tau0,
            a_bar,
            s_star_0,
            lambda_bar,
            t0: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau0.is_finite() || !self.t0.is_finite() {
            return Err(Error::InvalidParams("tau0 and t0 must be finite".into()));
        }
        if !(self.a_bar > 0.0) || !self.a_bar.is_finite() {
            return Err(Error::InvalidParams(format!("a_bar must be > 0, got {}", self.a_bar)));
        }
        if !(self.s_star_0 > 0.0) || !self.s_star_0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "s_star_0 must be > 0, got {}",
                self.s_star_0
            )));
        }
        if !(self.lambda_bar >= 0.0) || !self.lambda_bar.is_finite() {
            return Err(Error::InvalidParams(format!(
                "lambda_bar must be >= 0, got {}",
                self.lambda_bar
            )));
        }
        Ok(())
    }

    /// Additional requirement for exact real-world sampling.
    pub fn validate_for_real_world(&self) -> Result<()> {
        self.validate()?;
        if self.lambda_bar == 1.0 {
            return Err(Error::InvalidParams(
                "lambda_bar = 1 degenerates the real-world time change".into(),
            ));
        }
        Ok(())
    }

    pub fn trendline(&self, t: f64) -> f64 {
        trendline(self, t)
    }

    /// `exp(trendline(t))`, the transformed time of the squared Bessel process.
    pub fn phi(&self, t: f64) -> f64 {
        self.trendline(t).exp()
    }
}

/// Trendline of the activity time: `tau0 + a_bar * (t - t0)`.
pub fn trendline(params: &MmmParams, t: f64) -> f64 {
    params.tau0 + params.a_bar * (t - params.t0)
}
