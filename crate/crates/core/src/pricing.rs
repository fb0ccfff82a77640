//! Closed-form benchmark-neutral prices and hedge quantities for the
//! zero-coupon bond paying one unit of the savings account at maturity.
//!
//! All prices are in savings-account units. With
//! `x = S*_t / (2 (phi_T - phi_t))`:
//!
//! ```text
//! P     = 1 - e^{-x}
//! delta = 1 - e^{-x} (1 + x)       units of savings account
//! pi    = (1/P - 1) x = x / (e^x - 1)   fraction of wealth in the stock GOP
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::MmmParams;

/// Transformed-time window `(phi_t, phi_T)` with `phi = exp(activity time)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityHorizon {
    phi_t: f64,
    phi_maturity: f64,
    remaining: f64,
}

impl ActivityHorizon {
    pub fn new(phi_t: f64, phi_maturity: f64) -> Result<Self> {
        Self::checked(phi_t, phi_maturity, phi_maturity - phi_t)
    }

    /// Window between two activity times, `exp(tau_t)` to `exp(tau_maturity)`,
    /// with the difference evaluated without cancellation.
    pub fn from_activity_times(tau_t: f64, tau_maturity: f64) -> Result<Self> {
        let phi_maturity = tau_maturity.exp();
        let remaining = -phi_maturity * (tau_t - tau_maturity).exp_m1();
        Self::checked(tau_t.exp(), phi_maturity, remaining)
    }

    /// Trendline window from valuation time `t` to `maturity`.
    pub fn from_trendline(params: &MmmParams, t: f64, maturity: f64) -> Result<Self> {
        Self::from_activity_times(params.trendline(t), params.trendline(maturity))
    }

    fn checked(phi_t: f64, phi_maturity: f64, remaining: f64) -> Result<Self> {
        if !(phi_t > 0.0) || !(remaining > 0.0) || !remaining.is_finite() {
            return Err(Error::NonPositiveElapsed {
                context: "pricing",
                delta: remaining,
            });
        }
        Ok(Self {
            phi_t,
            phi_maturity,
            remaining,
        })
    }

    pub fn phi_t(&self) -> f64 {
        self.phi_t
    }

    pub fn phi_maturity(&self) -> f64 {
        self.phi_maturity
    }

    /// `phi_T - phi_t > 0`.
    pub fn remaining(&self) -> f64 {
        self.remaining
    }
}

/// `x = s_star / (2 (phi_T - phi_t))`, the single argument of every formula here.
pub fn exhaust_ratio(s_star: f64, key: &ActivityHorizon) -> Result<f64> {
    if !(s_star > 0.0) || !s_star.is_finite() {
        return Err(Error::Domain(format!("s_star must be > 0, got {s_star}")));
    }
    Ok(s_star / (2.0 * key.remaining))
}

pub fn price_from_ratio(x: f64) -> f64 {
    -(-x).exp_m1()
}

pub fn hedge_ratio_from_ratio(x: f64) -> f64 {
    if x < 0.5 {
        // sum_{n>=2} (-1)^n (n-1) x^n / n!, free of the cancellation in 1 - e^{-x}(1+x).
        let mut term = -x; // (-x)^n / n! at n = 1
        let mut sum = 0.0;
        for n in 2..40 {
            term *= -x / n as f64;
            let add = (n - 1) as f64 * term;
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

pub fn fraction_from_ratio(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    x / x.exp_m1()
}

/// Bond price `P(t,T) = 1 - exp(-x)`, strictly inside `(0, 1)` for finite `x`.
pub fn bond_price(s_star: f64, key: &ActivityHorizon) -> Result<f64> {
    Ok(price_from_ratio(exhaust_ratio(s_star, key)?))
}

/// Units of savings account held in the hedge, `1 - exp(-x)(1 + x)`.
pub fn hedge_ratio_savings(s_star: f64, key: &ActivityHorizon) -> Result<f64> {
    Ok(hedge_ratio_from_ratio(exhaust_ratio(s_star, key)?))
}

/// Fraction of hedge-portfolio value in the stock GOP, `x / (e^x - 1)`.
pub fn fraction_in_gop(s_star: f64, key: &ActivityHorizon) -> Result<f64> {
    Ok(fraction_from_ratio(exhaust_ratio(s_star, key)?))
}

fn enhanced_horizon(tau_obs: f64, tau_bar_maturity: f64) -> Result<ActivityHorizon> {
    if !(tau_obs < tau_bar_maturity) {
        return Err(Error::StoppingTimeReached {
            tau_obs,
            tau_bar_maturity,
        });
    }
    ActivityHorizon::from_activity_times(tau_obs, tau_bar_maturity)
}

/// Bond price with the observed activity time in place of the trendline.
/// Returns [`Error::StoppingTimeReached`] once `tau_obs >= tau_bar_maturity`.
pub fn enhanced_bond_price(s_star: f64, tau_obs: f64, tau_bar_maturity: f64) -> Result<f64> {
    bond_price(s_star, &enhanced_horizon(tau_obs, tau_bar_maturity)?)
}

pub fn enhanced_fraction(s_star: f64, tau_obs: f64, tau_bar_maturity: f64) -> Result<f64> {
    fraction_in_gop(s_star, &enhanced_horizon(tau_obs, tau_bar_maturity)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceVariant {
    Trendline,
    Enhanced,
}

impl std::str::FromStr for PriceVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trendline" => Ok(PriceVariant::Trendline),
            "enhanced" => Ok(PriceVariant::Enhanced),
            other => Err(Error::InvalidParams(format!("unknown price variant `{other}`"))),
        }
    }
}

/// A priced bond with its hedge quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondQuote {
    pub t: f64,
    pub maturity: f64,
    pub s_star: f64,
    pub price: f64,
    pub hedge_ratio_savings: f64,
    pub fraction_in_gop: f64,
    pub risk_neutral_price: f64,
    pub variant: PriceVariant,
}

impl BondQuote {
    /// Quote on the trendline activity time.
    pub fn trendline(params: &MmmParams, s_star: f64, t: f64, maturity: f64) -> Result<Self> {
        params.validate()?;
        let key = ActivityHorizon::from_trendline(params, t, maturity)?;
        Self::from_horizon(s_star, t, maturity, &key, PriceVariant::Trendline)
    }

    /// Quote on an observed activity time `tau_obs` at `t`.
    pub fn enhanced(params: &MmmParams, s_star: f64, t: f64, maturity: f64, tau_obs: f64) -> Result<Self> {
        params.validate()?;
        if !(t < maturity) {
            return Err(Error::Domain(format!(
                "valuation time {t} not before maturity {maturity}"
            )));
        }
        let key = enhanced_horizon(tau_obs, params.trendline(maturity))?;
        Self::from_horizon(s_star, t, maturity, &key, PriceVariant::Enhanced)
    }

    fn from_horizon(s_star: f64, t: f64, maturity: f64, key: &ActivityHorizon, variant: PriceVariant) -> Result<Self> {
        let x = exhaust_ratio(s_star, key)?;
        Ok(Self {
            t,
            maturity,
            s_star,
            price: price_from_ratio(x),
            hedge_ratio_savings: hedge_ratio_from_ratio(x),
            fraction_in_gop: fraction_from_ratio(x),
            risk_neutral_price: 1.0,
            variant,
        })
    }

    /// Price denominated in the stock GOP.
    pub fn gop_denominated_price(&self) -> f64 {
        self.price / self.s_star
    }
}

/// Ratio of the benchmark-neutral price to the risk-neutral price (which is 1).
pub fn bn_vs_risk_neutral(quote: &BondQuote) -> f64 {
    quote.price / quote.risk_neutral_price
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besq::{inverse_moment, BesqTransition};

    fn key(delta: f64) -> ActivityHorizon {
        ActivityHorizon::new(10.0, 10.0 + delta).unwrap()
    }

    #[test]
    fn worked_examples() {
        let k = key(25.0);
        let e2 = (-2.0f64).exp();
        assert!((bond_price(100.0, &k).unwrap() - (1.0 - e2)).abs() < 1e-15);
        assert!((bond_price(100.0, &k).unwrap() - 0.864_665).abs() < 1e-6);
        assert!((hedge_ratio_savings(100.0, &k).unwrap() - (1.0 - 3.0 * e2)).abs() < 1e-15);
        assert!((hedge_ratio_savings(100.0, &k).unwrap() - 0.593_994).abs() < 1e-6);
        assert!((fraction_in_gop(100.0, &k).unwrap() - 2.0 / (1.0 / e2 - 1.0)).abs() < 1e-15);
        assert!((fraction_in_gop(100.0, &k).unwrap() - 0.313_035).abs() < 1e-6);
        let enhanced = enhanced_bond_price(100.0, 0.0, (51.0f64).ln()).unwrap();
        assert!((enhanced - (1.0 - (-1.0f64).exp())).abs() < 1e-13);
        assert!((enhanced - 0.632_121).abs() < 1e-6);
        // x = 1 for the enhanced fraction: 1/(e - 1).
        let f = enhanced_fraction(100.0, 0.0, (51.0f64).ln()).unwrap();
        assert!((f - 0.581_977).abs() < 1e-6);
    }

    #[test]
    fn limits() {
        assert!(bond_price(100.0, &key(1e-12)).unwrap() == 1.0);
        assert!(bond_price(1e-12, &key(1.0)).unwrap() < 1e-12);
        assert!(hedge_ratio_from_ratio(1e-9) < 1e-17);
        assert!((hedge_ratio_from_ratio(1e3) - 1.0).abs() < 1e-15);
        assert!((fraction_from_ratio(1e-12) - 1.0).abs() < 1e-12);
        assert_eq!(fraction_from_ratio(1e4), 0.0);
        assert_eq!(fraction_from_ratio(0.0), 1.0);
        let near = enhanced_bond_price(10.0, 3.0 - 1e-13, 3.0).unwrap();
        assert!((near - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hedge_ratio_series_matches_direct_formula_at_switch() {
        for &x in &[0.1f64, 0.3, 0.49, 0.5, 0.51] {
            let direct = 1.0 - (-x).exp() * (1.0 + x);
            assert!((hedge_ratio_from_ratio(x) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            ActivityHorizon::new(5.0, 5.0),
            Err(Error::NonPositiveElapsed { context: "pricing", .. })
        ));
        assert!(ActivityHorizon::new(5.0, 4.0).is_err());
        assert!(bond_price(0.0, &key(1.0)).is_err());
        assert!(matches!(
            enhanced_bond_price(1.0, 2.0, 2.0),
            Err(Error::StoppingTimeReached { .. })
        ));
        assert_eq!(
            enhanced_bond_price(1.0, 2.0, 2.0).unwrap_err().code(),
            "pricing.stopping_time"
        );
    }

    #[test]
    fn enhanced_on_trendline_equals_trendline_price() {
        let p = MmmParams::default();
        let (t, mat) = (3.0, 30.0);
        let q = BondQuote::trendline(&p, 120.0, t, mat).unwrap();
        let e = BondQuote::enhanced(&p, 120.0, t, mat, p.trendline(t)).unwrap();
        assert!((q.price - e.price).abs() < 1e-15);
        assert!((q.fraction_in_gop - e.fraction_in_gop).abs() < 1e-15);
        assert_eq!(bn_vs_risk_neutral(&q), q.price);
        assert!(q.price < 1.0);
    }

    #[test]
    fn agrees_with_besq_inverse_moment() {
        for &(s, d) in &[(100.0, 25.0), (1.0, 0.3), (2500.0, 7.0), (0.01, 40.0)] {
            let k = key(d);
            let via_moment = s * inverse_moment(&BesqTransition::new(s, k.phi_t(), k.phi_maturity()).unwrap());
            let p = bond_price(s, &k).unwrap();
            assert!((p - via_moment).abs() <= 4.0 * f64::EPSILON * p, "s={s} d={d}");
        }
    }

    #[test]
    fn hedge_ratio_is_gop_denominated_derivative() {
        // In GOP units: P~ = P / S and S0~ = 1 / S, so P~ as a function of S0~ is
        // S0~ (1 - exp(-1 / (2 w S0~))). Central difference in S0~.
        let (s, w) = (100.0, 25.0);
        let p_tilde = |s0: f64| s0 * (1.0 - (-1.0 / (2.0 * w * s0)).exp());
        let s0 = 1.0 / s;
        let h = 1e-6 * s0;
        let fd = (p_tilde(s0 + h) - p_tilde(s0 - h)) / (2.0 * h);
        let delta = hedge_ratio_savings(s, &key(w)).unwrap();
        assert!((fd - delta).abs() < 1e-8, "fd={fd} delta={delta}");
    }

    proptest::proptest! {
        #[test]
        fn self_consistency_identity(x in 1e-8f64..50.0) {
            let p = price_from_ratio(x);
            let d = hedge_ratio_from_ratio(x);
            let f = fraction_from_ratio(x);
            proptest::prop_assert!((d + f * p - p).abs() <= 4.0 * f64::EPSILON * p);
            let direct = x * (-x).exp() / p;
            proptest::prop_assert!((f - direct).abs() <= 1e-13 * f);
        }

        #[test]
        fn monotone_in_ratio(x in 1e-6f64..30.0, bump in 1e-3f64..1.0) {
            let y = x + bump;
            proptest::prop_assert!(price_from_ratio(y) > price_from_ratio(x));
            proptest::prop_assert!(hedge_ratio_from_ratio(y) > hedge_ratio_from_ratio(x));
            proptest::prop_assert!(fraction_from_ratio(y) < fraction_from_ratio(x));
        }

        #[test]
        fn price_increases_with_phi_t(phi_t in 1.0f64..20.0, bump in 1e-3f64..5.0) {
            let phi_mat = 30.0;
            let a = bond_price(50.0, &ActivityHorizon::new(phi_t, phi_mat).unwrap()).unwrap();
            let b = bond_price(50.0, &ActivityHorizon::new(phi_t + bump, phi_mat).unwrap()).unwrap();
            proptest::prop_assert!(b > a);
        }
    }
}
