//! Exact path simulation of the stock GOP under the benchmark-neutral
//! measure and the real-world measure, density-process tracking, and Monte
//! Carlo diagnostics for the two candidate pricing measures.
//!
//! Under the benchmark-neutral measure `S*` is a squared Bessel process of
//! dimension four in transformed time `u = exp(trendline(t))`. Under the
//! real-world measure, with net risk-adjusted return `lambda_bar * a_bar`,
//! `S*_t = exp(lambda_bar a_bar (t - t0)) Y_{u(t)}` with `Y` the same kind of
//! process in the clock
//!
//! ```text
//! u(t) = e^{tau0} (1 + (e^{a_bar (1 - lambda_bar)(t - t0)} - 1) / (1 - lambda_bar))
//! ```

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besq::{inverse_moment, sample_transition, BesqTransition};
use crate::error::{Error, Result};
use crate::pricing::{bond_price, ActivityHorizon};
use crate::stats::Estimate;
use crate::types::{DayCount, IndexSeries, MmmParams, TimeGrid};

/// Independent random stream `stream` under master seed `seed`.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Benchmark-neutral pricing measure.
    QBn,
    /// Real-world measure.
    PReal,
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q" | "q_bn" | "bn" => Ok(Measure::QBn),
            "p" | "p_real" | "real" => Ok(Measure::PReal),
            other => Err(Error::InvalidParams(format!("unknown measure `{other}`"))),
        }
    }
}

/// A simulated stock GOP path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPath {
    pub grid: TimeGrid,
    pub s_star: Vec<f64>,
    pub tau_bar: Vec<f64>,
    pub measure: Measure,
    pub lambda_bar: f64,
    pub a_bar: f64,
    pub seed: Option<u64>,
    /// Brownian increments driving the path, one per step, when simulated in
    /// driver mode.
    pub driver: Option<Vec<f64>>,
}

impl SimPath {
    pub fn terminal(&self) -> f64 {
        *self.s_star.last().expect("non-empty path")
    }
}

/// Transformed time of the real-world representation at calendar time `t`.
pub fn real_world_clock(params: &MmmParams, t: f64) -> f64 {
    let k = 1.0 - params.lambda_bar;
    params.tau0.exp() * (1.0 + (params.a_bar * k * (t - params.t0)).exp_m1() / k)
}

fn trendline_values(params: &MmmParams, grid: &TimeGrid) -> Vec<f64> {
    grid.points().iter().map(|&t| params.trendline(t)).collect()
}

fn check_grid_start(params: &MmmParams, grid: &TimeGrid) -> Result<()> {
    if grid.t0() < params.t0 {
        return Err(Error::InvalidGrid(format!(
            "grid starts at {} before the parameter anchor t0 = {}",
            grid.t0(),
            params.t0
        )));
    }
    Ok(())
}

/// Exact benchmark-neutral path on `grid`, started from `s_star_0` at the
/// first grid point.
pub fn simulate_q<R: Rng + ?Sized>(params: &MmmParams, grid: &TimeGrid, rng: &mut R) -> Result<SimPath> {
    params.validate()?;
    check_grid_start(params, grid)?;
    let tau_bar = trendline_values(params, grid);
    let mut s = Vec::with_capacity(grid.len());
    s.push(params.s_star_0);
    for k in 1..grid.len() {
        let tr = BesqTransition::new(s[k - 1], tau_bar[k - 1].exp(), tau_bar[k].exp())?;
        s.push(sample_transition(&tr, rng));
    }
    Ok(SimPath {
        grid: grid.clone(),
        s_star: s,
        tau_bar,
        measure: Measure::QBn,
        lambda_bar: 0.0,
        a_bar: params.a_bar,
        seed: None,
        driver: None,
    })
}

/// Exact real-world path via the product representation with a closed-form clock.
pub fn simulate_p<R: Rng + ?Sized>(params: &MmmParams, grid: &TimeGrid, rng: &mut R) -> Result<SimPath> {
    params.validate_for_real_world()?;
    check_grid_start(params, grid)?;
    let growth = params.lambda_bar * params.a_bar;
    let pts = grid.points();
    let mut s = Vec::with_capacity(grid.len());
    let mut y = params.s_star_0 * (-growth * (pts[0] - params.t0)).exp();
    s.push(params.s_star_0);
    let mut u_prev = real_world_clock(params, pts[0]);
    for &t in &pts[1..] {
        let u = real_world_clock(params, t);
        let tr = BesqTransition::new(y, u_prev, u)?;
        y = sample_transition(&tr, rng);
        s.push((growth * (t - params.t0)).exp() * y);
        u_prev = u;
    }
    Ok(SimPath {
        grid: grid.clone(),
        s_star: s,
        tau_bar: trendline_values(params, grid),
        measure: Measure::PReal,
        lambda_bar: params.lambda_bar,
        a_bar: params.a_bar,
        seed: None,
        driver: None,
    })
}

/// Path together with its driving Brownian increments.
///
/// The squared Bessel process of dimension four is the squared norm of a
/// four-dimensional Brownian motion `Z` in transformed time, so the path is
/// exact at the grid points. The scalar driver over a step is the projection
/// of the Gaussian step of `Z` on the current direction `Z / |Z|`, which is
/// standard normal and independent of the past, rescaled to calendar time.
pub fn simulate_with_driver<R: Rng + ?Sized>(
    params: &MmmParams,
    grid: &TimeGrid,
    measure: Measure,
    rng: &mut R,
) -> Result<SimPath> {
    let (lambda_bar, clock): (f64, Box<dyn Fn(f64) -> f64 + '_>) = match measure {
        Measure::QBn => {
            params.validate()?;
            (0.0, Box::new(move |t| params.phi(t)))
        }
        Measure::PReal => {
            params.validate_for_real_world()?;
            (params.lambda_bar, Box::new(move |t| real_world_clock(params, t)))
        }
    };
    check_grid_start(params, grid)?;
    let growth = lambda_bar * params.a_bar;
    let pts = grid.points();
    let mut z = [
        (params.s_star_0 * (-growth * (pts[0] - params.t0)).exp()).sqrt(),
        0.0,
        0.0,
        0.0,
    ];
    let mut s = Vec::with_capacity(pts.len());
    let mut driver = Vec::with_capacity(pts.len() - 1);
    s.push(params.s_star_0);
    let mut u_prev = clock(pts[0]);
    for w in pts.windows(2) {
        let (t_prev, t) = (w[0], w[1]);
        let u = clock(t);
        let du = u - u_prev;
        if !(du > 0.0) {
            return Err(Error::NonPositiveElapsed {
                context: "simulate",
                delta: du,
            });
        }
        let norm = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]).sqrt();
        let sd = du.sqrt();
        let mut projected = 0.0;
        for zi in z.iter_mut() {
            let xi: f64 = StandardNormal.sample(rng);
            projected += *zi / norm * xi;
            *zi += sd * xi;
        }
        driver.push(projected * (t - t_prev).sqrt());
        let y = z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3];
        s.push((growth * (t - params.t0)).exp() * y);
        u_prev = u;
    }
    Ok(SimPath {
        grid: grid.clone(),
        s_star: s,
        tau_bar: trendline_values(params, grid),
        measure,
        lambda_bar,
        a_bar: params.a_bar,
        seed: None,
        driver: Some(driver),
    })
}

/// Density process of the benchmark-neutral measure with respect to the
/// real-world measure along a driver-mode real-world path, accumulated as a
/// discrete stochastic exponential with volatility
/// `lambda_bar * sqrt(a_bar S* / (4 exp(trendline)))`.
pub fn radon_nikodym_bn(path: &SimPath) -> Result<Vec<f64>> {
    if path.measure != Measure::PReal {
        return Err(Error::MeasureMismatch("density process needs a real-world path".into()));
    }
    let driver = path
        .driver
        .as_ref()
        .ok_or_else(|| Error::MissingData("path was simulated without its Brownian driver".into()))?;
    let pts = path.grid.points();
    let mut lambda = Vec::with_capacity(pts.len());
    let mut log_l = 0.0;
    lambda.push(1.0);
    for k in 0..driver.len() {
        let dt = pts[k + 1] - pts[k];
        let vol = path.lambda_bar * (path.a_bar * path.s_star[k] / (4.0 * path.tau_bar[k].exp())).sqrt();
        log_l += -vol * driver[k] - 0.5 * vol * vol * dt;
        lambda.push(log_l.exp());
    }
    Ok(lambda)
}

/// Euler–Maruyama terminal value of the real-world SDE
/// `dS = (lambda_bar a_bar S + 4 a_bar e^{tau_bar}) dt + 2 sqrt(a_bar e^{tau_bar} S) dW`.
/// Cross-validation oracle for [`simulate_p`]; never used for production paths.
pub fn euler_real_world_terminal<R: Rng + ?Sized>(params: &MmmParams, horizon: f64, step: f64, rng: &mut R) -> f64 {
    let n = (horizon / step).ceil() as usize;
    let h = horizon / n as f64;
    let sqrt_h = h.sqrt();
    let growth = params.lambda_bar * params.a_bar;
    let mut s = params.s_star_0;
    for k in 0..n {
        let t = params.t0 + k as f64 * h;
        let act = params.a_bar * params.phi(t);
        let pos = s.max(0.0);
        let dw: f64 = StandardNormal.sample(rng);
        s += (growth * s + 4.0 * act) * h + 2.0 * (act * pos).sqrt() * sqrt_h * dw;
    }
    s
}

/// Terminal values of `n` exact one-step benchmark-neutral transitions from
/// `t0` to `t0 + horizon`; draw `i` uses stream `i` of `seed`.
pub fn terminal_q_samples(params: &MmmParams, horizon: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let tr = BesqTransition::new(params.s_star_0, params.phi(params.t0), params.phi(params.t0 + horizon))?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| sample_transition(&tr, &mut path_rng(seed, i)))
        .collect())
}

/// Sizes for [`diagnose_measures`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticOptions {
    /// Real-world paths for the density-process means.
    pub n_paths: usize,
    /// Exact benchmark-neutral draws for the inverse moment.
    pub n_inverse_paths: usize,
    /// Steps per year of the driver-mode paths.
    pub steps_per_year: usize,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_inverse_paths: 1_000_000,
            steps_per_year: 52,
        }
    }
}

impl DiagnosticOptions {
    pub fn with_paths(n_paths: usize) -> Self {
        Self {
            n_paths,
            n_inverse_paths: n_paths,
            ..Self::default()
        }
    }
}

/// Monte Carlo evidence on the two candidate pricing measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDiagnostics {
    pub horizon: f64,
    pub n_paths: usize,
    pub n_inverse_paths: usize,
    pub lambda_bar: f64,
    /// Estimate of `E^P[Lambda_{S*}(T)]`; 1 for a true martingale.
    pub mean_lambda_bn: Estimate,
    /// Estimate of `E^P[Lambda_{S0}(T)] = E^P[Lambda_{S*}(T) S*_0 / S*_T]`; below 1
    /// for a strict supermartingale.
    pub mean_lambda_rn: Estimate,
    /// Estimate of `E^Q[1 / S*_T]` from exact draws.
    pub mean_inv_sstar_q: Estimate,
    /// `(1 - exp(-x0)) / S*_0`.
    pub closed_form_inv: f64,
    /// `1 / S*_0 - E^Q[1 / S*_T]` estimate; positive for a strict supermartingale.
    pub supermartingale_gap: Estimate,
    /// `exp(-x0) / S*_0`.
    pub closed_form_gap: f64,
    /// Bond price `S*_0 E^Q[1 / S*_T]` in closed form.
    pub bond_price: f64,
}

/// Runs the martingale and strict-supermartingale diagnostics at `horizon`
/// years. Real-world paths come from driver mode so the density process can
/// be accumulated pathwise; inverse moments use exact one-step draws.
pub fn diagnose_measures(
    params: &MmmParams,
    horizon: f64,
    opts: &DiagnosticOptions,
    seed: u64,
) -> Result<MeasureDiagnostics> {
    if opts.n_paths < 10_000 || opts.n_inverse_paths < 10_000 {
        return Err(Error::InvalidParams(format!(
            "diagnostics need at least 10^4 paths (got {} and {})",
            opts.n_paths, opts.n_inverse_paths
        )));
    }
    params.validate_for_real_world()?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
    }
    let n_steps = ((horizon * opts.steps_per_year as f64).ceil() as usize).max(1);
    let grid = TimeGrid::uniform(params.t0, params.t0 + horizon, n_steps)?;

    // Streams [0, n_paths) for the real-world paths; the inverse-moment draws
    // use a distinct master seed so the two estimates are independent.
    let pairs: Vec<(f64, f64)> = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let path = simulate_with_driver(params, &grid, Measure::PReal, &mut path_rng(seed, i))?;
            let lambda = *radon_nikodym_bn(&path)?.last().unwrap();
            Ok((lambda, lambda * params.s_star_0 / path.terminal()))
        })
        .collect::<Result<_>>()?;
    let lambda_bn: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let lambda_rn: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    let inv_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
    let inv: Vec<f64> = terminal_q_samples(params, horizon, opts.n_inverse_paths, inv_seed)?
        .into_iter()
        .map(|s| 1.0 / s)
        .collect();
    let mean_inv = Estimate::from_samples(&inv);

    let tr = BesqTransition::new(params.s_star_0, params.phi(params.t0), params.phi(params.t0 + horizon))?;
    let closed_form_inv = inverse_moment(&tr);
    let x0 = params.s_star_0 / (2.0 * tr.delta());
    let key = ActivityHorizon::from_trendline(params, params.t0, params.t0 + horizon)?;
    Ok(MeasureDiagnostics {
        horizon,
        n_paths: opts.n_paths,
        n_inverse_paths: opts.n_inverse_paths,
        lambda_bar: params.lambda_bar,
        mean_lambda_bn: Estimate::from_samples(&lambda_bn),
        mean_lambda_rn: Estimate::from_samples(&lambda_rn),
        supermartingale_gap: Estimate {
            mean: 1.0 / params.s_star_0 - mean_inv.mean,
            stderr: mean_inv.stderr,
            n: mean_inv.n,
        },
        mean_inv_sstar_q: mean_inv,
        closed_form_inv,
        closed_form_gap: (-x0).exp() / params.s_star_0,
        bond_price: bond_price(params.s_star_0, &key)?,
    })
}

/// Simulated index series on consecutive weekdays from `start`, one
/// observation per trading day (`Act252`), so observation `k` sits at `k/252`
/// years. `params.t0` must be 0.
pub fn synthetic_series(
    params: &MmmParams,
    years: f64,
    measure: Measure,
    seed: u64,
    start: NaiveDate,
) -> Result<IndexSeries> {
    if params.t0 != 0.0 {
        return Err(Error::InvalidParams("synthetic series require t0 = 0".into()));
    }
    let n_steps = (years * 252.0).round() as usize;
    let points: Vec<f64> = (0..=n_steps).map(|k| k as f64 / 252.0).collect();
    let grid = TimeGrid::new(points)?;
    let mut rng = path_rng(seed, 0);
    let path = match measure {
        Measure::QBn => simulate_q(params, &grid, &mut rng)?,
        Measure::PReal => simulate_p(params, &grid, &mut rng)?,
    };
    IndexSeries::from_weekday_levels(start, &path.s_star, DayCount::Act252)
}
