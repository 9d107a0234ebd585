//! Command-line pipeline: exploratory statistics, fitting, window
//! selection, ensemble analysis, seasonal forecasts and simulation.

pub mod commands;
pub mod svg;

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nao_ssm::model::ModelConfig;
use nao_ssm::timeseries::{load_csv, CsvColumns};
use nao_ssm::DailySeries;

pub use commands::{cmd_analyze, cmd_explore, cmd_fit, cmd_forecast, cmd_select, cmd_simulate};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
/// The optimiser stopped without converging; the report is still written.
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "nao-ssm", version, about = "State-space analysis and seasonal forecasting of a daily climate index")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Daily index CSV with `date` and `value` columns.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Model configuration file (key = value).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if needed.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Sampled trajectories or forecast members.
    #[arg(long, global = true, default_value_t = 1000)]
    pub members: usize,
    /// Worker threads; all logical cores by default.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Restrict the data to whole calendar years FIRST-LAST (or one year).
    #[arg(long, global = true, value_parser = parse_years)]
    pub years: Option<RangeInclusive<i32>>,
    #[arg(long, global = true, default_value = "date")]
    pub date_column: String,
    #[arg(long, global = true, default_value = "value")]
    pub value_column: String,
}

fn parse_years(s: &str) -> std::result::Result<RangeInclusive<i32>, String> {
    let bad = || format!("expected YEAR or FIRST-LAST, got '{s}'");
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Periodogram, ACF, PACF and day-of-year variance of first differences.
    Explore(ExploreArgs),
    /// Maximum-likelihood fit of the configured model.
    Fit(FitArgs),
    /// BIC comparison over influence windows and forcing kinds.
    Select(SelectArgs),
    /// Sampled-trajectory decomposition, variance analysis and checks.
    Analyze(AnalyzeArgs),
    /// Seasonal ensemble forecasts, persistence baselines and skill.
    Forecast(ForecastArgs),
    /// Simulate daily series from a configuration.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExploreArgs {
    #[arg(long, default_value_t = 40)]
    pub max_lag: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Extra starting values of varphi for forced models.
    #[arg(long, value_delimiter = ',')]
    pub varphi_starts: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// Window lengths in days; 90 to 330 in steps of 30 by default.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<u32>>,
    #[arg(long, default_value_t = 30)]
    pub taper: u32,
    /// Forcing kinds to compare with the unforced model.
    #[arg(long, value_delimiter = ',', default_value = "mean-shift,ac-shift")]
    pub kinds: Vec<String>,
    /// Screen every window over the forcing parameters only and fully refit
    /// the best N of each kind.
    #[arg(long)]
    pub refine: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Winters (January year) for the forcing evolution; the last complete
    /// winter by default.
    #[arg(long, value_delimiter = ',')]
    pub winters: Option<Vec<i32>>,
    /// First year of the predictive-check simulations.
    #[arg(long)]
    pub check_start: Option<i32>,
    /// Days between points of the component tracks.
    #[arg(long, default_value_t = 30)]
    pub stride: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[arg(long, value_delimiter = ',', default_value = "MAM,JJA,SON,DJF")]
    pub seasons: Vec<String>,
    /// Moving-window length in years.
    #[arg(long, default_value_t = 30)]
    pub window: usize,
    /// External forecasts (`year,ensemble_mean`) to combine with the model.
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Attribution CSV whose `external` rows give the companion series of
    /// the moving-window skill.
    #[arg(long)]
    pub companion: Option<PathBuf>,
    /// Season the external forecasts and companion series refer to.
    #[arg(long, default_value = "DJF")]
    pub target: String,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 3653)]
    pub days: usize,
    #[arg(long, default_value = "1950-01-01")]
    pub start: chrono::NaiveDate,
    /// Number of independent series.
    #[arg(long, default_value_t = 1)]
    pub series: usize,
    /// Draw the initial state from the prior instead of using its mean.
    #[arg(long)]
    pub random_start: bool,
    /// Also write the simulated states.
    #[arg(long)]
    pub states: bool,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub members: usize,
    pub threads: Option<usize>,
    pub years: Option<RangeInclusive<i32>>,
    pub columns: CsvColumns,
}

impl RunConfig {
    pub fn new(global: &GlobalArgs) -> Result<Self> {
        if global.members == 0 {
            bail!(UsageError("--members must be at least 1".into()));
        }
        Ok(Self {
            data: global.data.clone(),
            config: global.config.clone(),
            out: global.out.clone(),
            seed: global.seed,
            members: global.members,
            threads: global.threads,
            years: global.years.clone(),
            columns: CsvColumns { date: global.date_column.clone(), value: global.value_column.clone() },
        })
    }

    /// Defaults for everything except the paths.
    pub fn with_paths(data: Option<PathBuf>, config: Option<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            data,
            config,
            out: out.into(),
            seed: 1,
            members: 1000,
            threads: None,
            years: None,
            columns: CsvColumns::default(),
        }
    }

    /// Loads the data, trimmed to `years` when given.
    pub fn load_data(&self) -> Result<DailySeries> {
        let Some(path) = &self.data else {
            bail!(UsageError("--data is required".into()));
        };
        let series = load_csv(path, &self.columns)?;
        match &self.years {
            None => Ok(series),
            Some(r) => {
                let from = chrono::NaiveDate::from_ymd_opt(*r.start(), 1, 1).context("year out of range")?;
                let to = chrono::NaiveDate::from_ymd_opt(*r.end(), 12, 31).context("year out of range")?;
                Ok(series.slice(from.max(series.start()), to.min(series.end()))?)
            }
        }
    }

    /// The configuration file, or the defaults when none is given.
    pub fn load_config(&self) -> Result<ModelConfig> {
        match &self.config {
            Some(p) => Ok(ModelConfig::read(p)?),
            None => Ok(ModelConfig::default()),
        }
    }

    /// Like [`load_config`](Self::load_config) but the file is required.
    pub fn fitted_config(&self) -> Result<ModelConfig> {
        if self.config.is_none() {
            bail!(UsageError("--config with a fitted model is required".into()));
        }
        self.load_config()
    }

    pub fn output(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| nao_ssm::Error::Io { path: self.out.clone(), source: e })?;
        Ok(self.out.join(name))
    }
}

/// Bad command-line usage detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => 0,
            Outcome::NotConverged => EXIT_NOT_CONVERGED,
        }
    }
}

/// Exit status for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use nao_ssm::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } | E::Parse { .. } | E::Data(_) => EXIT_DATA,
                E::InvalidArgument(_) | E::Dimension(_) => EXIT_USAGE,
                E::RankDeficient(_)
                | E::NonPositiveInnovation { .. }
                | E::Divergence { .. }
                | E::SingularCovariance { .. }
                | E::Numerical(_) => EXIT_NUMERICAL,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_DATA;
        }
    }
    1
}

/// Runs one subcommand.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let run = RunConfig::new(&cli.global)?;
    if let Some(n) = run.threads {
        if n == 0 {
            bail!(UsageError("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Explore(a) => cmd_explore(&run, a).map(|_| Outcome::Done),
        Command::Fit(a) => cmd_fit(&run, a),
        Command::Select(a) => cmd_select(&run, a).map(|_| Outcome::Done),
        Command::Analyze(a) => cmd_analyze(&run, a).map(|_| Outcome::Done),
        Command::Forecast(a) => cmd_forecast(&run, a).map(|_| Outcome::Done),
        Command::Simulate(a) => cmd_simulate(&run, a).map(|_| Outcome::Done),
    }
}

/// Writes `text` to `path`, reporting the path on failure.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| nao_ssm::Error::Io { path: path.to_path_buf(), source: e }.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_ranges() {
        assert_eq!(parse_years("1950-2016"), Ok(1950..=2016));
        assert_eq!(parse_years("1990"), Ok(1990..=1990));
        assert!(parse_years("2000-1990").is_err());
        assert!(parse_years("x").is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        let data: anyhow::Error = nao_ssm::Error::Data("x".into()).into();
        assert_eq!(exit_code(&data), EXIT_DATA);
        let num: anyhow::Error = nao_ssm::Error::Divergence { step: 3 }.into();
        assert_eq!(exit_code(&num.context("fitting")), EXIT_NUMERICAL);
        assert_eq!(exit_code(&anyhow::Error::new(UsageError("u".into()))), EXIT_USAGE);
        assert_eq!(Outcome::NotConverged.exit_code(), EXIT_NOT_CONVERGED);
    }
}
