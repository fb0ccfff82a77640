//! Squared Bessel process of dimension four under a deterministic time change.
//!
//! In transformed time `u` the process solves `dX = 4 du + 2 sqrt(X) dB_u`.
//! Given `X_u = x`, the value after elapsed transformed time `delta` is
//! `delta` times a noncentral chi-squared variate with 4 degrees of freedom
//! and noncentrality `x / delta`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadResult};
use crate::special::ln_bessel_i1e;
use crate::stats::neumaier_sum;

/// A single transition `X_{u_from} = x_from  ->  X_{u_to}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesqTransition {
    x_from: f64,
    u_from: f64,
    delta: f64,
}

impl BesqTransition {
    pub fn new(x_from: f64, u_from: f64, u_to: f64) -> Result<Self> {
        if !(u_from > 0.0) || !u_to.is_finite() {
            return Err(Error::Domain(format!(
                "transformed times must be positive and finite (u_from={u_from}, u_to={u_to})"
            )));
        }
        Self::with_elapsed(x_from, u_from, u_to - u_from)
    }

    /// Transition over an explicit elapsed transformed time. Avoids the
    /// cancellation in `u_to - u_from` when `delta` is tiny.
    pub fn with_elapsed(x_from: f64, u_from: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::NonPositiveElapsed { context: "besq", delta });
        }
        if !(x_from > 0.0) || !x_from.is_finite() {
            return Err(Error::Domain(format!("x_from must be > 0, got {x_from}")));
        }
        Ok(Self { x_from, u_from, delta })
    }

    pub fn x_from(&self) -> f64 {
        self.x_from
    }

    pub fn u_from(&self) -> f64 {
        self.u_from
    }

    pub fn u_to(&self) -> f64 {
        self.u_from + self.delta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `x_from / delta`, the noncentrality of the scaled chi-squared law.
    pub fn noncentrality(&self) -> f64 {
        self.x_from / self.delta
    }

    pub fn mean(&self) -> f64 {
        self.x_from + 4.0 * self.delta
    }

    pub fn variance(&self) -> f64 {
        4.0 * self.delta * (self.x_from + 2.0 * self.delta)
    }
}

/// Log of the transition density at `x_to > 0`.
pub fn ln_transition_density(tr: &BesqTransition, x_to: f64) -> f64 {
    if !(x_to > 0.0) {
        return f64::NEG_INFINITY;
    }
    let (x, d) = (tr.x_from, tr.delta);
    let z = (x * x_to).sqrt() / d;
    // z - (x + y)/(2d) == -(sqrt(x) - sqrt(y))^2 / (2d), evaluated without cancellation.
    let gap = x.sqrt() - x_to.sqrt();
    let ln_i1e = ln_bessel_i1e(z);
    -(2.0 * d).ln() + 0.5 * (x_to.ln() - x.ln()) - gap * gap / (2.0 * d) + ln_i1e
}

/// Transition density `p(x_to)`; zero for `x_to <= 0`.
pub fn transition_density(tr: &BesqTransition, x_to: f64) -> f64 {
    ln_transition_density(tr, x_to).exp()
}

/// Exact draw from the transition law. Strictly positive.
pub fn sample_transition<R: Rng + ?Sized>(tr: &BesqTransition, rng: &mut R) -> f64 {
    // Noncentral chi-squared(4, lambda) = (N + sqrt(lambda))^2 + chi-squared(3).
    let shift = tr.noncentrality().sqrt();
    let n: f64 = StandardNormal.sample(rng);
    let chi3 = chi_squared_3().sample(rng);
    let y = tr.delta * ((n + shift) * (n + shift) + chi3);
    if y > 0.0 {
        y
    } else {
        f64::MIN_POSITIVE
    }
}

fn chi_squared_3() -> Gamma<f64> {
    Gamma::new(1.5, 2.0).expect("valid gamma parameters")
}

/// `E[1 / X_{u_to} | X_{u_from} = x_from] = (1 - exp(-x/(2 delta))) / x`.
pub fn inverse_moment(tr: &BesqTransition) -> f64 {
    let x = tr.x_from;
    -(-x / (2.0 * tr.delta)).exp_m1() / x
}

/// Upper truncation point for integrals against the density: mean plus 40
/// standard deviations (the variance is `2 delta (2 x + 4 delta)`).
pub fn quadrature_upper(tr: &BesqTransition) -> f64 {
    tr.mean() + 40.0 * tr.variance().sqrt()
}

/// Natural log of a Chernoff bound on `P(X > c)`, optimised over the
/// moment-generating-function argument.
pub fn ln_tail_mass_bound(tr: &BesqTransition, c: f64) -> f64 {
    if c <= tr.mean() {
        return 0.0;
    }
    // With v = 2 delta s in (0, 1):
    // ln E[e^{sX}] - s c = -2 ln(1 - v) + (x/(2 delta)) v/(1 - v) - v c/(2 delta).
    let half_nc = tr.x_from / (2.0 * tr.delta);
    let c_scaled = c / (2.0 * tr.delta);
    let objective = |v: f64| -2.0 * (-v).ln_1p() + half_nc * v / (1.0 - v) - v * c_scaled;
    let (v, val) = golden_min(objective, 0.0, 1.0 - 1e-15, 1e-14);
    debug_assert!(v > 0.0);
    val.min(0.0)
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Result of integrating a function against the transition density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityIntegral {
    pub value: f64,
    /// Summed Gauss–Kronrod error estimate over the truncated range.
    pub quad_error: f64,
    /// Upper truncation point used.
    pub upper: f64,
    /// Bound on the probability mass beyond `upper`.
    pub tail_mass_bound: f64,
    pub converged: bool,
}

/// Integrates `g(y) p(y)` over `(0, upper]`, splitting the range around the bulk.
pub fn integrate_against<G: Fn(f64) -> f64>(tr: &BesqTransition, g: G, abs_tol: f64, rel_tol: f64) -> DensityIntegral {
    let upper = quadrature_upper(tr);
    let mean = tr.mean();
    let sd = tr.variance().sqrt();
    let mut breaks = vec![0.0];
    for b in [mean - 8.0 * sd, mean, mean + 8.0 * sd] {
        if b > *breaks.last().unwrap() && b < upper {
            breaks.push(b);
        }
    }
    breaks.push(upper);
    let f = |y: f64| g(y) * transition_density(tr, y);
    let pieces: Vec<QuadResult> = breaks
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], abs_tol / (breaks.len() as f64), rel_tol))
        .collect();
    DensityIntegral {
        value: neumaier_sum(pieces.iter().map(|p| p.value)),
        quad_error: pieces.iter().map(|p| p.error).sum(),
        upper,
        tail_mass_bound: ln_tail_mass_bound(tr, upper).exp(),
        converged: pieces.iter().all(|p| p.converged),
    }
}

/// Transition CDF at every point of `sorted` (ascending), by integrating the
/// density between consecutive points.
pub fn cdf_sorted(tr: &BesqTransition, sorted: &[f64]) -> Vec<f64> {
    let f = |y: f64| transition_density(tr, y);
    let mut out = Vec::with_capacity(sorted.len());
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    let mut prev = 0.0f64;
    for &x in sorted {
        let x = x.max(0.0);
        if x > prev {
            let piece = integrate(f, prev, x, 1e-15, 1e-12).value;
            // Neumaier step.
            let t = acc + piece;
            if acc.abs() >= piece.abs() {
                comp += (acc - t) + piece;
            } else {
                comp += (piece - t) + acc;
            }
            acc = t;
            prev = x;
        }
        out.push((acc + comp).min(1.0));
    }
    out
}
