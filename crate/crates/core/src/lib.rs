//! Bond pricing and hedging under the minimal market model.
//!
//! The discounted stock growth-optimal portfolio (GOP) is a time-transformed
//! squared Bessel process of dimension four. Zero-coupon bonds are priced by
//! real-world pricing with the GOP as numeraire, which gives a closed form
//! below the risk-neutral price, and are hedged by a self-financing mix of
//! the GOP and the savings account.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod besq;
pub mod error;
pub mod hedging;
pub mod io;
pub mod pricing;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod types;

pub use activity::{fit_trendline, quadratic_variation, ActivityTime};
pub use besq::BesqTransition;
pub use error::{Error, Result};
pub use hedging::{pnl_report, run_enhanced_hedge, run_hedge, HedgeLedger, HedgeVariant, PnlSummary};
pub use pricing::{bond_price, fraction_in_gop, hedge_ratio_savings, ActivityHorizon, BondQuote, PriceVariant};
pub use simulate::{diagnose_measures, DiagnosticOptions, Measure, MeasureDiagnostics, SimPath};
pub use stats::Estimate;
pub use types::{trendline, DayCount, IndexSeries, MmmParams, Observation, TimeGrid};
