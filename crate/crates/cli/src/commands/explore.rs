use std::path::PathBuf;

use anyhow::Result;
use nao_ssm::timeseries::{acf, first_diff_doy_variance, fit_harmonics, pacf_from_acf, periodogram, residualize};
use nao_ssm::DailySeries;

use super::{num, opt, write_rows};
use crate::svg::{self, Panel, Series};
use crate::{ExploreArgs, RunConfig};

/// Writes `periodogram.csv`, `acf.csv`, `pacf.csv`, `doy_variance.csv` and
/// `explore.svg`; returns their paths.
///
/// The correlation functions are computed on the series with a linear trend
/// and fixed annual and semi-annual cycles removed. The periodogram uses the
/// raw series, with missing days (if any) replaced by that fitted curve.
pub fn cmd_explore(run: &RunConfig, args: &ExploreArgs) -> Result<Vec<PathBuf>> {
    let data = run.load_data()?;
    let fit = fit_harmonics(&data, 2, true)?;
    let anomalies = residualize(&data, &fit);
    let filled = DailySeries::from_values(
        data.start(),
        data.values().iter().enumerate().map(|(i, v)| v.unwrap_or_else(|| fit.evaluate((i + 1) as f64))).collect(),
    )?;
    let power = periodogram(&filled)?;
    let r = acf(&anomalies, args.max_lag)?;
    let p = pacf_from_acf(&r)?;
    let doy = first_diff_doy_variance(&data)?;

    let paths: Vec<PathBuf> = ["periodogram.csv", "acf.csv", "pacf.csv", "doy_variance.csv", "explore.svg"]
        .iter()
        .map(|n| run.output(n))
        .collect::<Result<_>>()?;
    write_rows(&paths[0], &["frequency", "power"], power.iter().map(|(f, w)| vec![num(*f), num(*w)]))?;
    write_rows(&paths[1], &["lag", "acf"], r.iter().enumerate().map(|(k, v)| vec![k.to_string(), num(*v)]))?;
    write_rows(&paths[2], &["lag", "pacf"], p.iter().enumerate().skip(1).map(|(k, v)| vec![k.to_string(), num(*v)]))?;
    write_rows(&paths[3], &["doy", "variance"], doy.iter().enumerate().map(|(d, v)| vec![(d + 1).to_string(), opt(*v)]))?;

    let mut a = Panel::new("Periodogram", "frequency (cycles/year)", "power");
    a.series.push(Series::line(
        "",
        power.iter().take_while(|(f, _)| *f * 365.25 <= 6.0).map(|(f, w)| (f * 365.25, *w)).collect(),
    ));
    let mut b = Panel::new("Day-of-year variance of first differences", "day of year", "hPa^2");
    b.series.push(Series::line("", doy.iter().enumerate().map(|(d, v)| ((d + 1) as f64, v.unwrap_or(f64::NAN))).collect()));
    let bound = 2.0 / (anomalies.observed_count() as f64).sqrt();
    let mut c = Panel::new("Autocorrelation", "lag (days)", "acf");
    c.series.push(Series::bars("", r.iter().enumerate().skip(1).map(|(k, v)| (k as f64, *v)).collect()));
    c.rules = vec![(bound, String::new()), (-bound, String::new())];
    let mut d = Panel::new("Partial autocorrelation", "lag (days)", "pacf");
    d.series.push(Series::bars("", p.iter().enumerate().skip(1).map(|(k, v)| (k as f64, *v)).collect()));
    d.rules = c.rules.clone();
    svg::write(&paths[4], &svg::panels(&[a, b, c, d], 2))?;
    Ok(paths)
}
