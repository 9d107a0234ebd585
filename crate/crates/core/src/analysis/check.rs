use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;

use super::anova::{read_records, write_csv};
use crate::calendar::MonthWindow;
use crate::error::{Error, Result};
use crate::model::NaoModel;
use crate::ssm::{ekf_filter, member_rng, simulate_member, GaussianState, Initial};
use crate::stats;
use crate::timeseries::{acf_masked, DailySeries};

/// Largest autocorrelation lag reported by the predictive check.
pub const CHECK_MAX_LAG: usize = 30;

/// The minimum number of whole calendar years the check must cover.
const MIN_YEARS: i32 = 20;

/// One checked statistic with its 95% simulation band.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckRow {
    pub statistic: String,
    pub observed: f64,
    pub lo: f64,
    pub hi: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub start_year: i32,
    pub members: usize,
    /// Monthly SDs (`sd_month01`..), then Dec-Mar and Apr-Nov
    /// autocorrelations (`acf_dec_mar_lag01`.., `acf_apr_nov_lag01`..).
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn monthly_sd(&self) -> &[CheckRow] {
        &self.rows[..12]
    }

    pub fn winter_acf(&self) -> &[CheckRow] {
        &self.rows[12..12 + CHECK_MAX_LAG]
    }

    pub fn summer_acf(&self) -> &[CheckRow] {
        &self.rows[12 + CHECK_MAX_LAG..]
    }
}

fn statistic_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=12).map(|m| format!("sd_month{m:02}")).collect();
    for tag in ["dec_mar", "apr_nov"] {
        names.extend((1..=CHECK_MAX_LAG).map(|k| format!("acf_{tag}_lag{k:02}")));
    }
    names
}

/// Inter-annual SD of monthly means for each calendar month, over months
/// lying wholly inside the series; then the two seasonal autocorrelation
/// curves.
fn statistics(series: &DailySeries) -> Result<Vec<f64>> {
    let mut monthly: Vec<Vec<f64>> = vec![Vec::new(); 12];
    let (mut i, n) = (0, series.len());
    while i < n {
        let d = series.date(i);
        let first = d.with_day(1).expect("valid date");
        let len = crate::calendar::days_in_month(d.year(), d.month()) as usize;
        if first == d && i + len <= n {
            let obs: Vec<f64> = (i..i + len).filter_map(|j| series.value(j)).collect();
            if !obs.is_empty() {
                monthly[d.month0() as usize].push(stats::mean(&obs));
            }
            i += len;
        } else {
            i += 1;
        }
    }
    let mut out: Vec<f64> = monthly.iter().map(|m| stats::std_dev(m)).collect();
    for w in [MonthWindow::DEC_MAR, MonthWindow::APR_NOV] {
        out.extend(acf_masked(series, CHECK_MAX_LAG, |d| w.contains(d))?.into_iter().skip(1));
    }
    Ok(out)
}

/// Filters `data` up to the end of `start_year - 1`, then simulates
/// `members` realisations of the rest of the record from the filtered state
/// and compares monthly inter-annual SDs and seasonal autocorrelations of
/// the observations with their 95% simulation bands. Simulated days are
/// dropped wherever the data are missing.
pub fn posterior_predictive_check(
    model: &NaoModel,
    prior: &GaussianState,
    data: &DailySeries,
    start_year: i32,
    members: usize,
    seed: u64,
) -> Result<CheckReport> {
    if members < 2 {
        return Err(Error::InvalidArgument("the check needs at least 2 simulations".into()));
    }
    if model.origin() != data.start() {
        return Err(Error::InvalidArgument(format!("model starts on {}, data on {}", model.origin(), data.start())));
    }
    let from = NaiveDate::from_ymd_opt(start_year, 1, 1)
        .ok_or_else(|| Error::InvalidArgument(format!("start year {start_year}")))?;
    let end = data.end();
    let last_full = if end.month() == 12 && end.day() == 31 { end.year() } else { end.year() - 1 };
    let s0 = match model.step_of(from) {
        Some(s) if s <= data.len() && last_full - start_year + 1 >= MIN_YEARS => s,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "the check needs {MIN_YEARS} whole years from {start_year} inside data {}..{}",
                data.start(),
                end
            )))
        }
    };
    let initial = if s0 == 1 {
        Initial::gaussian(prior)
    } else {
        let f = ekf_filter(model, prior, &data.values()[..s0 - 1])?;
        Initial::gaussian(f.filtered_at(s0 - 1))
    };
    let observed = data.slice(from, end)?;
    let steps = observed.len();
    let obs_stats = statistics(&observed)?;
    let sims: Vec<Vec<f64>> = (0..members)
        .into_par_iter()
        .map(|m| {
            let mut rng = member_rng(seed, m as u64);
            let mut ys = Vec::with_capacity(steps);
            simulate_member(model, &initial, s0, steps, &mut rng, |_, _, y| ys.push(y))?;
            let values = ys.into_iter().zip(observed.values()).map(|(y, o)| o.map(|_| y)).collect();
            statistics(&DailySeries::new(from, values)?)
        })
        .collect::<Result<_>>()?;
    let rows = statistic_names()
        .into_iter()
        .enumerate()
        .map(|(j, statistic)| {
            let v: Vec<f64> = sims.iter().map(|s| s[j]).collect();
            let (lo, hi) = stats::interval(&v, 0.025, 0.975);
            let observed = obs_stats[j];
            CheckRow { statistic, observed, lo, hi, inside: lo <= observed && observed <= hi }
        })
        .collect();
    Ok(CheckReport { start_year, members, rows })
}

pub fn write_check_csv(report: &CheckReport, path: impl AsRef<Path>) -> Result<()> {
    write_csv(report.rows.iter(), path.as_ref())
}

pub fn read_check_csv(path: impl AsRef<Path>) -> Result<Vec<CheckRow>> {
    read_records(path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, default_priors, ForcingKind, InfluenceFunction, ModelParams, StateLayout};
    use crate::ssm::simulate;

    #[test]
    fn monthly_sd_oracle() {
        // Month m of year y holds the constant m * y, so the SD across the
        // three years is m * sd(1990, 1991, 1992) = m.
        let start = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(1992, 12, 31).unwrap();
        let days = (end - start).num_days() as usize + 1;
        let values: Vec<f64> = (0..days)
            .map(|i| {
                let d = start + chrono::Days::new(i as u64);
                d.month() as f64 * d.year() as f64
            })
            .collect();
        let s = DailySeries::from_values(start, values).unwrap();
        let st = statistics(&s).unwrap();
        for m in 1..=12 {
            assert!((st[m - 1] - m as f64).abs() < 1e-9, "{m}: {}", st[m - 1]);
        }
        assert_eq!(st.len(), 12 + 2 * CHECK_MAX_LAG);
    }

    #[test]
    fn partial_months_are_ignored() {
        // 15 Jan 1990 to 18 Feb 1991: every calendar month is complete
        // exactly once, so no month has an inter-annual spread.
        let start = NaiveDate::from_ymd_opt(1990, 1, 15).unwrap();
        let s = DailySeries::from_values(start, (0..400).map(|i| (i % 17) as f64).collect()).unwrap();
        let st = statistics(&s).unwrap();
        assert!(st[..12].iter().all(|v| v.is_nan()));
        assert!(st[12..].iter().all(|v| v.is_finite()));
    }

    fn setup(years: i32) -> (NaoModel, GaussianState, DailySeries) {
        let start = NaiveDate::from_ymd_opt(1960, 1, 1).unwrap();
        let layout = StateLayout::new(2, 2, ForcingKind::MeanShift).unwrap();
        let model = build_model(layout, ModelParams::default(), InfluenceFunction::default(), start).unwrap();
        let mut priors = default_priors(&layout);
        priors.mean[layout.phi(1)] = 0.8;
        priors.var[layout.phi(1)] = 0.0;
        priors.var[layout.phi(2)] = 0.0;
        let prior = priors.to_state().unwrap();
        let days = (NaiveDate::from_ymd_opt(1960 + years, 1, 1).unwrap() - start).num_days() as usize;
        let mut x0 = prior.mean.clone();
        x0[0] = 6.0;
        let sim = simulate(&model, &Initial::Fixed(x0), days, 1, 5).unwrap();
        (model, prior, DailySeries::from_values(start, sim.observations[0].clone()).unwrap())
    }

    #[test]
    fn span_requirement() {
        let (model, prior, data) = setup(22);
        assert!(posterior_predictive_check(&model, &prior, &data, 1962, 4, 1).is_ok());
        assert!(posterior_predictive_check(&model, &prior, &data, 1963, 4, 1).is_err());
        assert!(posterior_predictive_check(&model, &prior, &data, 1959, 4, 1).is_err());
    }

    #[test]
    fn report_layout_and_reproducibility() {
        let (model, prior, data) = setup(21);
        let a = posterior_predictive_check(&model, &prior, &data, 1961, 8, 3).unwrap();
        let b = posterior_predictive_check(&model, &prior, &data, 1961, 8, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 12 + 2 * CHECK_MAX_LAG);
        assert_eq!(a.monthly_sd()[0].statistic, "sd_month01");
        assert_eq!(a.summer_acf()[29].statistic, "acf_apr_nov_lag30");
        assert!(a.rows.iter().all(|r| r.lo <= r.hi && r.inside == (r.lo <= r.observed && r.observed <= r.hi)));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("check.csv");
        write_check_csv(&a, &p).unwrap();
        assert_eq!(read_check_csv(&p).unwrap(), a.rows);
    }
}
