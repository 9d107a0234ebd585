use std::path::PathBuf;

use anyhow::{bail, Result};
use nao_ssm::ssm::{simulate, Initial};
use nao_ssm::timeseries::write_csv;
use nao_ssm::DailySeries;

use crate::{RunConfig, SimulateArgs, UsageError};

/// Simulates daily series from the configuration. A single series goes to
/// `simulated.csv`, several to `simulated_000.csv`, `simulated_001.csv`, ...
/// Returns the written series paths.
pub fn cmd_simulate(run: &RunConfig, args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    if args.days < 2 || args.series == 0 {
        bail!(UsageError("--days must be at least 2 and --series at least 1".into()));
    }
    let config = run.load_config()?;
    let model = config.build(args.start)?;
    let prior = config.prior()?;
    let initial = if args.random_start { Initial::gaussian(&prior) } else { Initial::Fixed(prior.mean.clone()) };
    let sim = simulate(&model, &initial, args.days, args.series, run.seed)?;
    let mut paths = Vec::with_capacity(args.series);
    for (i, ys) in sim.observations.iter().enumerate() {
        let name = if args.series == 1 { "simulated.csv".to_string() } else { format!("simulated_{i:03}.csv") };
        let path = run.output(&name)?;
        write_csv(&DailySeries::from_values(args.start, ys.clone())?, &path)?;
        paths.push(path);
    }
    if args.states {
        sim.ensemble.with_labels(config.layout.labels())?.write_csv(run.output("states.csv")?)?;
    }
    Ok(paths)
}
