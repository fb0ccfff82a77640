use bn_pricer_core::activity::ActivityTime;
use bn_pricer_core::hedging::{run_enhanced_hedge_from, HedgeLedger};
use bn_pricer_core::io::{
    emit_figure_data, load_index_csv, write_activity_csv, write_ledger_csv, Figure, FigureSources, ParseReport,
};
use bn_pricer_core::pricing::bn_vs_risk_neutral;
use bn_pricer_core::simulate::{
    diagnose_measures, path_rng, simulate_p, simulate_q, synthetic_series, DiagnosticOptions, Measure,
    MeasureDiagnostics,
};
use bn_pricer_core::{
    fit_trendline, pnl_report, run_hedge, ActivityHorizon, BesqTransition, BondQuote, Estimate, HedgeVariant,
    IndexSeries, MmmParams, PnlSummary, PriceVariant, TimeGrid,
};
use chrono::NaiveDate;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DataArgs, ParamArgs, ResolvedParams, Source};
use crate::{CliError, Context, SCHEMA_VERSION};

/// First date of synthetic series.
fn synthetic_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(1984, 1, 2).expect("valid date")
}

#[derive(Debug, Serialize)]
struct DataInfo {
    source: &'static str,
    input: Option<String>,
    measure: Option<Measure>,
    years: Option<f64>,
    n_obs: usize,
    first_date: NaiveDate,
    last_date: NaiveDate,
    day_count: bn_pricer_core::DayCount,
    n_gaps: Option<usize>,
}

struct Data {
    series: IndexSeries,
    info: DataInfo,
}

fn load_data(ctx: &Context, args: &DataArgs, params: &MmmParams) -> Result<Data, CliError> {
    let (series, report, measure, years): (IndexSeries, Option<ParseReport>, _, _) = match (&args.input, args.synthetic)
    {
        (Some(path), _) => {
            let (series, report) = load_index_csv(path, args.day_count()?)?;
            (series, Some(report), None, None)
        }
        (None, true) => {
            let measure: Measure = args.measure.parse()?;
            let series = synthetic_series(&params.with_t0(0.0), args.years, measure, ctx.seed, synthetic_start())?;
            (series, None, Some(measure), Some(args.years))
        }
        (None, false) => return Err(CliError::Config("either --input or --synthetic is required".into())),
    };
    let dates = series.dates();
    let info = DataInfo {
        source: if args.input.is_some() { "file" } else { "synthetic" },
        input: args.input.as_ref().map(|p| p.display().to_string()),
        measure,
        years,
        n_obs: series.len(),
        first_date: dates[0],
        last_date: *dates.last().unwrap(),
        day_count: series.convention(),
        n_gaps: report.map(|r| r.gaps.len()),
    };
    Ok(Data { series, info })
}

/// Parameters for commands that take an index series: fitted from the data
/// unless the trendline is set explicitly.
fn series_params(params: &ParamArgs, series: &IndexSeries) -> Result<(ResolvedParams, Option<ActivityTime>), CliError> {
    if params.trendline_unset()? {
        let fit = fit_trendline(series)?;
        let base = fit.params(series.levels()[0], MmmParams::default().lambda_bar)?;
        Ok((params.resolve_over(base, Source::Fitted)?, Some(fit)))
    } else {
        Ok((params.resolve()?, None))
    }
}

fn series_end(series: &IndexSeries) -> f64 {
    *series.times().last().unwrap()
}

#[derive(Debug, Serialize)]
struct EstimateSummary {
    tau0_est: f64,
    a_bar_est: f64,
    r_squared: f64,
    n_obs: usize,
    epoch_date: NaiveDate,
    trend_intercept: f64,
    rss: f64,
}

impl EstimateSummary {
    fn new(fit: &ActivityTime, series: &IndexSeries) -> Self {
        Self {
            tau0_est: fit.tau0_est,
            a_bar_est: fit.a_bar_est,
            r_squared: fit.r_squared,
            n_obs: series.len(),
            epoch_date: series.epoch(),
            trend_intercept: fit.trend_intercept,
            rss: fit.rss,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Serialize)]
struct EstimateReport {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    data: DataInfo,
    #[serde(flatten)]
    estimate: EstimateSummary,
}

pub fn estimate(ctx: &Context, args: &EstimateArgs) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    let data = load_data(ctx, &args.data, &params.params)?;
    let fit = fit_trendline(&data.series)?;
    let src = FigureSources {
        series: Some(&data.series),
        activity: Some(&fit),
        ..Default::default()
    };
    ctx.out
        .csv("activity.csv", |w| write_activity_csv(&data.series, &fit, w))?;
    for fig in [Figure::Fig1, Figure::Fig2] {
        ctx.out
            .csv(&format!("{}.csv", fig.name()), |w| emit_figure_data(fig, &src, w))?;
    }
    ctx.out.json(
        "estimate.json",
        &EstimateReport {
            schema_version: SCHEMA_VERSION,
            command: "estimate",
            seed: ctx.seed,
            estimate: EstimateSummary::new(&fit, &data.series),
            data: data.info,
        },
    )
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Current stock GOP level in savings-account units
    #[arg(long, allow_negative_numbers = true)]
    s_star: f64,
    /// Valuation time in years
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t: f64,
    /// Maturity in years
    #[arg(long)]
    maturity: f64,
    /// trendline or enhanced
    #[arg(long, default_value = "trendline")]
    variant: String,
    /// Observed activity time at the valuation time (enhanced variant)
    #[arg(long, allow_negative_numbers = true)]
    tau_obs: Option<f64>,
}

#[derive(Serialize)]
struct PriceReport {
    schema_version: u32,
    command: &'static str,
    params: ResolvedParams,
    #[serde(flatten)]
    quote: BondQuote,
    ratio_to_risk_neutral: f64,
}

pub fn price(ctx: &Context, args: &PriceArgs) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    let variant: PriceVariant = args.variant.parse()?;
    let quote = match (variant, args.tau_obs) {
        (PriceVariant::Trendline, _) => BondQuote::trendline(&params.params, args.s_star, args.t, args.maturity)?,
        (PriceVariant::Enhanced, Some(tau_obs)) => {
            BondQuote::enhanced(&params.params, args.s_star, args.t, args.maturity, tau_obs)?
        }
        (PriceVariant::Enhanced, None) => {
            return Err(CliError::Config(
                "--tau-obs is required for the enhanced variant".into(),
            ))
        }
    };
    ctx.out.json(
        "price.json",
        &PriceReport {
            schema_version: SCHEMA_VERSION,
            command: "price",
            params,
            ratio_to_risk_neutral: bn_vs_risk_neutral(&quote),
            quote,
        },
    )
}

#[derive(Debug, Args)]
pub struct HedgeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Bond maturity in years since the first observation; defaults to the series end
    #[arg(long)]
    maturity: Option<f64>,
    /// plain or enhanced
    #[arg(long, default_value = "plain")]
    variant: String,
}

#[derive(Serialize)]
struct HedgeReport {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    data: DataInfo,
    params: ResolvedParams,
    variant: HedgeVariant,
    maturity: f64,
    initial_activity_time: f64,
    initial_price: f64,
    #[serde(flatten)]
    summary: PnlSummary,
}

/// Runs the requested hedge; the enhanced hedge starts its observed activity
/// time at the fitted initial value when there is a fit.
fn backtest(
    series: &IndexSeries,
    params: &MmmParams,
    fit: Option<&ActivityTime>,
    maturity: f64,
    variant: HedgeVariant,
) -> Result<(HedgeLedger, f64), CliError> {
    let initial = fit.map_or(params.tau0, |f| f.tau0_est);
    let ledger = match variant {
        HedgeVariant::Plain => run_hedge(series, params, maturity)?,
        HedgeVariant::Enhanced => run_enhanced_hedge_from(series, params, maturity, initial)?,
    };
    Ok((ledger, initial))
}

pub fn hedge(ctx: &Context, args: &HedgeArgs) -> Result<(), CliError> {
    let variant: HedgeVariant = args.variant.parse()?;
    let generating = args.params.resolve()?;
    let data = load_data(ctx, &args.data, &generating.params)?;
    // Synthetic data is hedged with the parameters that generated it.
    let (params, fit) = if args.data.synthetic {
        (generating, None)
    } else {
        series_params(&args.params, &data.series)?
    };
    let maturity = args.maturity.unwrap_or_else(|| series_end(&data.series));
    let (ledger, initial) = backtest(&data.series, &params.params, fit.as_ref(), maturity, variant)?;

    ctx.out.csv("hedge_ledger.csv", |w| write_ledger_csv(&ledger, w))?;
    let src = match variant {
        HedgeVariant::Plain => FigureSources {
            plain: Some(&ledger),
            ..Default::default()
        },
        HedgeVariant::Enhanced => FigureSources {
            enhanced: Some(&ledger),
            ..Default::default()
        },
    };
    let figs: &[Figure] = match variant {
        HedgeVariant::Plain => &[Figure::Fig3, Figure::Fig4, Figure::Fig5],
        HedgeVariant::Enhanced => &[Figure::Fig6],
    };
    for &fig in figs {
        ctx.out
            .csv(&format!("{}.csv", fig.name()), |w| emit_figure_data(fig, &src, w))?;
    }
    ctx.out.json(
        "hedge.json",
        &HedgeReport {
            schema_version: SCHEMA_VERSION,
            command: "hedge",
            seed: ctx.seed,
            data: data.info,
            params,
            variant,
            maturity,
            initial_activity_time: initial,
            initial_price: ledger.bond_price[0],
            summary: pnl_report(&ledger),
        },
    )
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Horizon in years
    #[arg(long, default_value_t = 10.0)]
    years: f64,
    /// Grid steps per year
    #[arg(long, default_value_t = 252)]
    steps_per_year: usize,
    /// q_bn (benchmark-neutral) or p_real (real world)
    #[arg(long, default_value = "q_bn")]
    measure: String,
    /// Number of simulated paths
    #[arg(long, default_value_t = 1000)]
    n_paths: usize,
    /// Write the first N full paths to paths.csv
    #[arg(long, default_value_t = 0)]
    max_paths_dump: usize,
}

#[derive(Serialize)]
struct SimulateReport {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    params: ResolvedParams,
    measure: Measure,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    paths_dumped: usize,
    mean_terminal: Estimate,
    mean_inverse_terminal: Estimate,
    /// Closed forms under the benchmark-neutral measure.
    q_mean_terminal: f64,
    q_mean_inverse_terminal: f64,
    bond_price: f64,
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    let p = params.params;
    let measure: Measure = args.measure.parse()?;
    if args.n_paths == 0 {
        return Err(CliError::Config("--n-paths must be positive".into()));
    }
    let n_steps = ((args.years * args.steps_per_year as f64).round() as usize).max(1);
    let grid = TimeGrid::uniform(p.t0, p.t0 + args.years, n_steps)?;
    let dump = args.max_paths_dump.min(args.n_paths);
    let run = |i: usize| {
        let mut rng = path_rng(ctx.seed, i as u64);
        match measure {
            Measure::QBn => simulate_q(&p, &grid, &mut rng),
            Measure::PReal => simulate_p(&p, &grid, &mut rng),
        }
    };
    let terminals: Vec<f64> = (0..args.n_paths)
        .into_par_iter()
        .map(|i| run(i).map(|path| path.terminal()))
        .collect::<bn_pricer_core::Result<_>>()?;
    if dump > 0 {
        let paths = (0..dump)
            .into_par_iter()
            .map(run)
            .collect::<bn_pricer_core::Result<Vec<_>>>()?;
        ctx.out.csv("paths.csv", |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["path", "t", "s_star"])?;
            for (i, path) in paths.iter().enumerate() {
                for (t, s) in path.grid.points().iter().zip(&path.s_star) {
                    csv.write_record([i.to_string(), t.to_string(), s.to_string()])?;
                }
            }
            csv.flush()?;
            Ok(())
        })?;
    }
    let inverse: Vec<f64> = terminals.iter().map(|s| 1.0 / s).collect();
    let tr = BesqTransition::new(p.s_star_0, p.phi(p.t0), p.phi(p.t0 + args.years))?;
    let key = ActivityHorizon::from_trendline(&p, p.t0, p.t0 + args.years)?;
    ctx.out.json(
        "simulate.json",
        &SimulateReport {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            seed: ctx.seed,
            params,
            measure,
            horizon: args.years,
            n_steps,
            n_paths: args.n_paths,
            paths_dumped: dump,
            mean_terminal: Estimate::from_samples(&terminals),
            mean_inverse_terminal: Estimate::from_samples(&inverse),
            q_mean_terminal: tr.mean(),
            q_mean_inverse_terminal: bn_pricer_core::besq::inverse_moment(&tr),
            bond_price: bn_pricer_core::bond_price(p.s_star_0, &key)?,
        },
    )
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Horizon in years
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    /// Real-world driver-mode paths
    #[arg(long, default_value_t = 100_000)]
    n_paths: usize,
    /// Exact benchmark-neutral draws for the inverse moment
    #[arg(long, default_value_t = 1_000_000)]
    n_inverse_paths: usize,
    /// Driver-mode steps per year
    #[arg(long, default_value_t = 52)]
    steps_per_year: usize,
}

#[derive(Serialize)]
struct DiagnoseReport {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    params: ResolvedParams,
    #[serde(flatten)]
    diagnostics: MeasureDiagnostics,
}

pub fn diagnose(ctx: &Context, args: &DiagnoseArgs) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    let opts = DiagnosticOptions {
        n_paths: args.n_paths,
        n_inverse_paths: args.n_inverse_paths,
        steps_per_year: args.steps_per_year,
    };
    let diagnostics = diagnose_measures(&params.params, args.horizon, &opts, ctx.seed)?;
    ctx.out.json(
        "diagnose.json",
        &DiagnoseReport {
            schema_version: SCHEMA_VERSION,
            command: "diagnose",
            seed: ctx.seed,
            params,
            diagnostics,
        },
    )
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Bond maturity in years since the first observation; defaults to the series end
    #[arg(long)]
    maturity: Option<f64>,
}

#[derive(Serialize)]
struct FullReport {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    data: DataInfo,
    estimate: EstimateSummary,
    params: ResolvedParams,
    maturity: f64,
    initial_quote: BondQuote,
    ratio_to_risk_neutral: f64,
    plain: PnlSummary,
    enhanced: PnlSummary,
    files: Vec<String>,
}

pub fn report(ctx: &Context, args: &ReportArgs) -> Result<(), CliError> {
    let generating = args.params.resolve()?;
    let data = load_data(ctx, &args.data, &generating.params)?;
    let series = &data.series;
    let fit = fit_trendline(series)?;
    let (params, _) = series_params(&args.params, series)?;
    let maturity = args.maturity.unwrap_or_else(|| series_end(series));
    let (plain, _) = backtest(series, &params.params, Some(&fit), maturity, HedgeVariant::Plain)?;
    let (enhanced, _) = backtest(series, &params.params, Some(&fit), maturity, HedgeVariant::Enhanced)?;
    let quote = BondQuote::trendline(&params.params, series.levels()[0], series.times()[0], maturity)?;

    let mut files = vec![
        "activity.csv".to_string(),
        "ledger_plain.csv".into(),
        "ledger_enhanced.csv".into(),
    ];
    ctx.out.csv("activity.csv", |w| write_activity_csv(series, &fit, w))?;
    ctx.out.csv("ledger_plain.csv", |w| write_ledger_csv(&plain, w))?;
    ctx.out.csv("ledger_enhanced.csv", |w| write_ledger_csv(&enhanced, w))?;
    let src = FigureSources {
        series: Some(series),
        activity: Some(&fit),
        plain: Some(&plain),
        enhanced: Some(&enhanced),
    };
    for fig in Figure::ALL {
        let name = format!("{}.csv", fig.name());
        ctx.out.csv(&name, |w| emit_figure_data(fig, &src, w))?;
        files.push(name);
    }
    ctx.out.json(
        "report.json",
        &FullReport {
            schema_version: SCHEMA_VERSION,
            command: "report",
            seed: ctx.seed,
            estimate: EstimateSummary::new(&fit, series),
            data: data.info,
            params,
            maturity,
            ratio_to_risk_neutral: bn_vs_risk_neutral(&quote),
            initial_quote: quote,
            plain: pnl_report(&plain),
            enhanced: pnl_report(&enhanced),
            files,
        },
    )
}
