use anyhow::Result;
use nao_ssm::estimation::{fit_mle, FitOptions, FitReport, FitStatus};

use crate::{FitArgs, Outcome, RunConfig};

/// Fits the configured model and writes `fit_report.txt` and `fitted.cfg`.
pub fn cmd_fit(run: &RunConfig, args: &FitArgs) -> Result<Outcome> {
    let data = run.load_data()?;
    let config = run.load_config()?;
    let mut options = FitOptions::default();
    if let Some(n) = args.max_iter {
        options.bfgs.max_iter = n;
    }
    if let Some(v) = &args.varphi_starts {
        options.varphi_starts = v.clone();
    }
    let report = fit_mle(&config, &data, &options)?;
    write_report(run, &report)?;
    Ok(if report.status == FitStatus::Converged { Outcome::Done } else { Outcome::NotConverged })
}

pub(crate) fn write_report(run: &RunConfig, report: &FitReport) -> Result<()> {
    report.write(run.output("fit_report.txt")?)?;
    report.config.write(run.output("fitted.cfg")?)?;
    Ok(())
}
