//! Observed activity time and its affine trendline.
//!
//! The quadratic variation of `sqrt(S*)` over `[t0, t]` equals
//! `exp(tau_t) - exp(tau_t0)`, so the activity time is observable as
//! `tau_t = ln(qv_t + exp(tau_t0))` once the initial value is chosen. The
//! initial value is picked so that `tau` is as close to a straight line in
//! calendar time as possible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besq::golden_min;
use crate::error::{Error, Result};
use crate::types::{IndexSeries, MmmParams, TimeGrid};

/// Minimum number of observations accepted by [`fit_trendline`].
pub const MIN_FIT_OBSERVATIONS: usize = 100;

const GRID_CANDIDATES: usize = 200;
const REFINE_TOL: f64 = 1e-6;

/// Running realised quadratic variation of `sqrt(level)`, starting at 0.
pub fn quadratic_variation(series: &IndexSeries) -> Vec<f64> {
    quadratic_variation_of_levels(&series.levels())
}

pub fn quadratic_variation_of_levels(levels: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(levels.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in levels.windows(2) {
        let inc = w[1].sqrt() - w[0].sqrt();
        acc += inc * inc;
        out.push(acc);
    }
    out
}

/// `tau_k = ln(qv_k + exp(tau0))`.
pub fn observed_activity_time(qv: &[f64], tau0: f64) -> Vec<f64> {
    // tau0 + ln(1 + qv e^{-tau0}): exact at qv = 0 and stable for large tau0.
    let scale = (-tau0).exp();
    qv.iter().map(|&q| tau0 + (q * scale).ln_1p()).collect()
}

/// Ordinary least squares line `y = intercept + slope * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub rss: f64,
    /// Total sum of squares of `y` about its mean.
    pub tss: f64,
    pub r_squared: f64,
}

impl LineFit {
    /// `rss / tss`, i.e. `1 - r_squared` without the cancellation.
    pub fn relative_rss(&self) -> f64 {
        if self.tss > 0.0 {
            self.rss / self.tss
        } else {
            0.0
        }
    }
}

pub fn ols(t: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(t.len(), y.len());
    let n = t.len() as f64;
    let t_mean = t.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let (dt, dy) = (ti - t_mean, yi - y_mean);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let rss: f64 = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = yi - y_mean - slope * (ti - t_mean);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    LineFit {
        intercept,
        slope,
        rss,
        tss: syy,
        r_squared,
    }
}

/// Observed activity time of a series together with its fitted trendline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityTime {
    pub grid: TimeGrid,
    pub qv: Vec<f64>,
    pub tau: Vec<f64>,
    /// Initial activity time chosen by the search.
    pub tau0_est: f64,
    /// Trendline slope, per year.
    pub a_bar_est: f64,
    /// Trendline value at the first observation time.
    pub trend_intercept: f64,
    pub r_squared: f64,
    pub rss: f64,
}

impl ActivityTime {
    pub fn trendline_at(&self, t: f64) -> f64 {
        self.trend_intercept + self.a_bar_est * (t - self.grid.t0())
    }

    pub fn trendline(&self) -> Vec<f64> {
        self.grid.points().iter().map(|&t| self.trendline_at(t)).collect()
    }

    /// Model parameters implied by the fit, anchored at the first observation.
    pub fn params(&self, s_star_0: f64, lambda_bar: f64) -> Result<MmmParams> {
        Ok(MmmParams::new(self.trend_intercept, self.a_bar_est, s_star_0, lambda_bar)?.with_t0(self.grid.t0()))
    }
}

fn fit_for(times: &[f64], qv: &[f64], tau0: f64) -> LineFit {
    // Residuals do not depend on the additive tau0, so regress ln(1 + qv e^{-tau0}).
    let scale = (-tau0).exp();
    let y: Vec<f64> = qv.iter().map(|&q| (q * scale).ln_1p()).collect();
    let mut fit = ols(times, &y);
    fit.intercept += tau0;
    fit
}

/// Fits the trendline, using the series' own times (years since its first date).
pub fn fit_trendline(series: &IndexSeries) -> Result<ActivityTime> {
    let times = series.times();
    fit_trendline_at(series, &times)
}

/// Fits the trendline against caller-supplied observation times.
pub fn fit_trendline_at(series: &IndexSeries, times: &[f64]) -> Result<ActivityTime> {
    if series.len() < MIN_FIT_OBSERVATIONS {
        return Err(Error::Estimation(format!(
            "need at least {MIN_FIT_OBSERVATIONS} observations, got {}",
            series.len()
        )));
    }
    assert_eq!(times.len(), series.len());
    let qv = quadratic_variation(series);
    let qv_total = *qv.last().unwrap();
    if !(qv_total > 0.0) {
        return Err(Error::Estimation("zero total quadratic variation".into()));
    }

    let search = search_tau0(times, &qv, qv_total);
    let fit = fit_for(times, &qv, search.tau0);
    if !(fit.slope > 0.0) {
        return Err(Error::Estimation(format!(
            "non-positive fitted slope {}; model inapplicable",
            fit.slope
        )));
    }
    let grid = TimeGrid::new(times.to_vec())?;
    let t0 = grid.t0();
    Ok(ActivityTime {
        tau: observed_activity_time(&qv, search.tau0),
        tau0_est: search.tau0,
        a_bar_est: fit.slope,
        trend_intercept: fit.intercept + fit.slope * t0,
        r_squared: fit.r_squared,
        rss: fit.rss,
        qv,
        grid,
    })
}

/// Outcome of the initial-activity-time search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tau0Search {
    pub tau0: f64,
    /// Residual sum of squares relative to the total sum of squares. Raw RSS
    /// is not comparable across candidates: it vanishes as tau0 grows because
    /// the activity time flattens out.
    pub rss: f64,
    /// Search interval `[ln(qv_T 1e-6), ln(qv_T 1e3)]`.
    pub lower: f64,
    pub upper: f64,
    pub rss_lower: f64,
    pub rss_upper: f64,
}

/// Global log-spaced scan over `exp(tau0)`, then golden-section refinement
/// around the best candidate. The objective is not assumed unimodal.
pub fn search_tau0(times: &[f64], qv: &[f64], qv_total: f64) -> Tau0Search {
    let lower = (qv_total * 1e-6).ln();
    let upper = (qv_total * 1e3).ln();
    let step = (upper - lower) / (GRID_CANDIDATES - 1) as f64;
    let candidates: Vec<f64> = (0..GRID_CANDIDATES).map(|i| lower + i as f64 * step).collect();
    let rss: Vec<f64> = candidates
        .par_iter()
        .map(|&tau0| fit_for(times, qv, tau0).relative_rss())
        .collect();

    // Smallest RSS; ties go to the smaller tau0 (first index).
    let mut best = 0;
    for (i, &r) in rss.iter().enumerate() {
        if r < rss[best] {
            best = i;
        }
    }
    let lo = candidates[best.saturating_sub(1)];
    let hi = candidates[(best + 1).min(GRID_CANDIDATES - 1)];
    let (refined, refined_rss) = golden_min(|tau0| fit_for(times, qv, tau0).relative_rss(), lo, hi, REFINE_TOL);
    let (tau0, best_rss) = if refined_rss <= rss[best] {
        (refined, refined_rss)
    } else {
        (candidates[best], rss[best])
    };
    Tau0Search {
        tau0,
        rss: best_rss,
        lower,
        upper,
        rss_lower: rss[0],
        rss_upper: rss[GRID_CANDIDATES - 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::DayCount;
    use chrono::NaiveDate;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(1984, 1, 2).unwrap()
    }

    /// Levels whose sqrt increments alternate in sign so that the realised
    /// quadratic variation equals `target` exactly (up to rounding).
    fn manufactured_levels(target_qv: &[f64], s0: f64) -> Vec<f64> {
        let mut levels = vec![s0];
        let mut root = s0.sqrt();
        for (k, w) in target_qv.windows(2).enumerate() {
            let inc = (w[1] - w[0]).sqrt();
            root += if k % 2 == 0 { inc } else { -inc };
            levels.push(root * root);
        }
        levels
    }

    fn exponential_qv(times: &[f64], tau0: f64, a: f64) -> Vec<f64> {
        times.iter().map(|&t| (tau0 + a * t).exp() - tau0.exp()).collect()
    }

    #[test]
    fn quadratic_variation_examples() {
        assert_eq!(quadratic_variation_of_levels(&[1.0, 4.0, 9.0]), vec![0.0, 1.0, 2.0]);
        assert!(quadratic_variation_of_levels(&[5.0; 10]).iter().all(|&q| q == 0.0));
    }

    #[test]
    fn observed_activity_time_examples() {
        assert_eq!(observed_activity_time(&[0.0, 0.0], 2.15), vec![2.15, 2.15]);
        let tau = observed_activity_time(&[0.0, std::f64::consts::E - 1.0], 0.0);
        assert_eq!(tau[0], 0.0);
        assert!((tau[1] - 1.0).abs() < 1e-15);
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        let qv = exponential_qv(&times, 2.15, 0.053);
        let tau = observed_activity_time(&qv, 2.15);
        for (t, tau) in times.iter().zip(&tau) {
            assert!((tau - (2.15 + 0.053 * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn ols_recovers_line() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.5 - 0.25 * t).collect();
        let f = ols(&t, &y);
        assert!((f.slope + 0.25).abs() < 1e-14);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(f.rss < 1e-25);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    fn noiseless_series(tau0: f64, a: f64, n: usize, s0: f64) -> (IndexSeries, Vec<f64>) {
        let times: Vec<f64> = (0..n).map(|k| k as f64 / 252.0).collect();
        let qv = exponential_qv(&times, tau0, a);
        let levels = manufactured_levels(&qv, s0);
        let series = IndexSeries::from_weekday_levels(start(), &levels, DayCount::Act252).unwrap();
        (series, times)
    }

    #[test]
    fn noiseless_input_is_recovered_exactly() {
        let (series, _) = noiseless_series(2.15, 0.053, 30 * 252 + 1, 100.0);
        let fit = fit_trendline(&series).unwrap();
        assert!((fit.r_squared - 1.0).abs() < 1e-10, "r2 = {}", fit.r_squared);
        assert!((fit.a_bar_est - 0.053).abs() < 1e-8, "a = {}", fit.a_bar_est);
        assert!((fit.tau0_est - 2.15).abs() < 1e-5, "tau0 = {}", fit.tau0_est);
        assert!((fit.trend_intercept - 2.15).abs() < 1e-5);
        // Stored fields are consistent.
        for (q, tau) in fit.qv.iter().zip(&fit.tau) {
            assert!((tau - (q + fit.tau0_est.exp()).ln()).abs() < 1e-12);
        }
        assert!(fit.tau.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn scaling_levels_keeps_slope_of_noiseless_input() {
        let (series, _) = noiseless_series(1.0, 0.08, 2000, 50.0);
        let base = fit_trendline(&series).unwrap();
        let scaled = fit_trendline(&series.scaled(7.0).unwrap()).unwrap();
        for (a, b) in base.qv.iter().zip(&scaled.qv) {
            assert!((b - 7.0 * a).abs() <= 1e-9 * b.max(1e-12));
        }
        assert!((scaled.a_bar_est - base.a_bar_est).abs() < 1e-8);
        assert!((scaled.tau0_est - base.tau0_est - 7f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn search_result_beats_interval_endpoints() {
        let (series, times) = noiseless_series(0.5, 0.2, 500, 10.0);
        let qv = quadratic_variation(&series);
        let s = search_tau0(&times, &qv, *qv.last().unwrap());
        assert!(s.rss <= s.rss_lower && s.rss <= s.rss_upper);
        assert!(s.tau0 >= s.lower && s.tau0 <= s.upper);
    }

    #[test]
    fn estimation_errors() {
        let flat = IndexSeries::from_weekday_levels(start(), &[3.0; 200], DayCount::Act252).unwrap();
        assert!(matches!(fit_trendline(&flat), Err(Error::Estimation(_))));
        let short = IndexSeries::from_weekday_levels(start(), &[1.0, 2.0, 3.0], DayCount::Act252).unwrap();
        assert!(matches!(fit_trendline(&short), Err(Error::Estimation(_))));
    }

    proptest::proptest! {
        #[test]
        fn activity_time_is_monotone(incs in proptest::collection::vec(0.0f64..10.0, 1..100), tau0 in -20.0f64..20.0) {
            let mut qv = vec![0.0];
            for i in incs {
                let last = *qv.last().unwrap();
                qv.push(last + i);
            }
            let tau = observed_activity_time(&qv, tau0);
            proptest::prop_assert_eq!(tau[0], tau0);
            proptest::prop_assert!(tau.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
