use std::path::PathBuf;

use bn_pricer_core::{DayCount, MmmParams};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Model parameters given on the command line; any field left out falls back
/// to the params file, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct ParamArgs {
    /// JSON file with any subset of tau0, a_bar, s_star_0, lambda_bar, t0
    #[arg(long)]
    pub params_file: Option<PathBuf>,
    /// Trendline activity time at t0
    #[arg(long, allow_negative_numbers = true)]
    pub tau0: Option<f64>,
    /// Trendline slope per year
    #[arg(long)]
    pub a_bar: Option<f64>,
    /// Stock GOP level at t0 in savings-account units
    #[arg(long)]
    pub s_star_0: Option<f64>,
    /// Real-world drift parameter of the time change, in [0, 1)
    #[arg(long)]
    pub lambda_bar: Option<f64>,
    /// Anchor time of tau0, in years since the series epoch
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    tau0: Option<f64>,
    a_bar: Option<f64>,
    s_star_0: Option<f64>,
    lambda_bar: Option<f64>,
    t0: Option<f64>,
}

/// Where each parameter value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Cli,
    File,
    Fitted,
    Default,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedParams {
    pub params: MmmParams,
    pub sources: ParamSources,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamSources {
    pub tau0: Source,
    pub a_bar: Source,
    pub s_star_0: Source,
    pub lambda_bar: Source,
    pub t0: Source,
}

impl ParamArgs {
    fn read_file(&self) -> Result<ParamsFile, CliError> {
        match &self.params_file {
            None => Ok(ParamsFile::default()),
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    /// True when neither the command line nor the params file sets the trendline.
    pub fn trendline_unset(&self) -> Result<bool, CliError> {
        let file = self.read_file()?;
        Ok(self.tau0.is_none() && self.a_bar.is_none() && file.tau0.is_none() && file.a_bar.is_none())
    }

    /// Merges CLI flags over the params file over `base`, whose values are
    /// tagged with `base_source`.
    pub fn resolve_over(&self, base: MmmParams, base_source: Source) -> Result<ResolvedParams, CliError> {
        let file = self.read_file()?;
        let pick = |cli: Option<f64>, file: Option<f64>, base: f64| match (cli, file) {
            (Some(v), _) => (v, Source::Cli),
            (None, Some(v)) => (v, Source::File),
            (None, None) => (base, base_source),
        };
        let (tau0, s_tau0) = pick(self.tau0, file.tau0, base.tau0);
        let (a_bar, s_a) = pick(self.a_bar, file.a_bar, base.a_bar);
        let (s_star_0, s_s) = pick(self.s_star_0, file.s_star_0, base.s_star_0);
        let (lambda_bar, s_l) = pick(self.lambda_bar, file.lambda_bar, base.lambda_bar);
        let (t0, s_t0) = pick(self.t0, file.t0, base.t0);
        let params = MmmParams::new(tau0, a_bar, s_star_0, lambda_bar)?.with_t0(t0);
        Ok(ResolvedParams {
            params,
            sources: ParamSources {
                tau0: s_tau0,
                a_bar: s_a,
                s_star_0: s_s,
                lambda_bar: s_l,
                t0: s_t0,
            },
        })
    }

    pub fn resolve(&self) -> Result<ResolvedParams, CliError> {
        self.resolve_over(MmmParams::default(), Source::Default)
    }
}

/// Index data: a CSV file or an on-model synthetic series.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Index CSV with header `date,level`
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generate an on-model synthetic series instead of reading a file
    #[arg(long, alias = "simulate")]
    pub synthetic: bool,
    /// Length of the synthetic series in years
    #[arg(long, default_value_t = 30.0)]
    pub years: f64,
    /// Measure used for the synthetic series
    #[arg(long, default_value = "q_bn")]
    pub measure: String,
    /// Day count for dates in the input file
    #[arg(long, default_value = "act365")]
    pub day_count: String,
}

impl DataArgs {
    pub fn day_count(&self) -> Result<DayCount, CliError> {
        Ok(self.day_count.parse()?)
    }
}
