//! Ensemble seasonal forecasts from the fitted model, persistence
//! baselines, skill measures and regression recalibration.

mod baseline;
mod skill;

pub use baseline::{
    baseline_forecasts, deseasonalize, optimize_baseline, persistence_exponential, persistence_linear, Baseline,
    BaselineScan,
};
pub use skill::{
    moving_window_skill, read_external_forecast, recalibrate_and_combine, skill, Combination, Predictor, Recalibrated, Skill,
    WindowSkill,
};

use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::calendar::MonthWindow;
use crate::error::{Error, Result};
use crate::model::NaoModel;
use crate::ssm::{ekf_filtered_at, member_rng, simulate_member, GaussianState, Initial, ModelFunctions};
use crate::stats;
use crate::timeseries::DailySeries;

/// Forecast of one season.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastYear {
    /// Season label (the January year for DJF).
    pub year: i32,
    pub init: NaiveDate,
    /// Seasonal mean of every member.
    pub members: Vec<f64>,
    /// Observed seasonal mean.
    pub observed: f64,
}

impl ForecastYear {
    pub fn mean(&self) -> f64 {
        stats::mean(&self.members)
    }

    /// Central 95% interval of the members.
    pub fn interval(&self) -> (f64, f64) {
        stats::interval(&self.members, 0.025, 0.975)
    }
}

/// Seasonal forecasts for a run of years, initialised on the first day of
/// the season.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    pub season: MonthWindow,
    years: Vec<ForecastYear>,
}

impl ForecastSet {
    pub fn new(season: MonthWindow, years: Vec<ForecastYear>) -> Result<Self> {
        if years.windows(2).any(|w| w[0].year >= w[1].year) {
            return Err(Error::InvalidArgument("forecast years must be strictly increasing".into()));
        }
        if years.iter().any(|y| y.members.len() < 2) {
            return Err(Error::InvalidArgument("a forecast needs at least 2 members".into()));
        }
        Ok(Self { season, years })
    }

    pub fn years(&self) -> &[ForecastYear] {
        &self.years
    }

    pub fn labels(&self) -> Vec<i32> {
        self.years.iter().map(|y| y.year).collect()
    }

    pub fn ensemble_means(&self) -> Vec<f64> {
        self.years.iter().map(ForecastYear::mean).collect()
    }

    pub fn observations(&self) -> Vec<f64> {
        self.years.iter().map(|y| y.observed).collect()
    }

    pub fn records(&self) -> Vec<ForecastRecord> {
        self.years
            .iter()
            .map(|y| {
                let (lo95, hi95) = y.interval();
                ForecastRecord { year: y.year, obs: y.observed, fcst_mean: y.mean(), lo95, hi95 }
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let wrap = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(wrap)?;
        for r in self.records() {
            w.serialize(r).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ForecastRecord {
    pub year: i32,
    pub obs: f64,
    pub fcst_mean: f64,
    pub lo95: f64,
    pub hi95: f64,
}

pub fn read_forecast_csv(path: impl AsRef<Path>) -> Result<Vec<ForecastRecord>> {
    let path = path.as_ref();
    let wrap = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.deserialize().map(|rec| rec.map_err(wrap)).collect()
}

/// Mean of the observed days of the season labelled `year`, or `None` when
/// the season is not wholly inside the data or has no observations.
pub fn observed_seasonal_mean(data: &DailySeries, season: MonthWindow, year: i32) -> Option<f64> {
    let a = data.index_of(season.first_day(year))?;
    let b = data.index_of(season.last_day(year))?;
    let obs: Vec<f64> = (a..=b).filter_map(|i| data.value(i)).collect();
    (!obs.is_empty()).then(|| stats::mean(&obs))
}

/// Filters the data up to the eve of each season, then runs `members`
/// simulations through the season. A member's seasonal mean averages the
/// noise-free observation signal (the observation without measurement
/// error) over every calendar day of the season. Member `m` of season `y`
/// draws from its own stream of `seed`, so results do not depend on
/// scheduling.
pub fn seasonal_forecast(
    model: &NaoModel,
    prior: &GaussianState,
    data: &DailySeries,
    season: MonthWindow,
    years: &[i32],
    members: usize,
    seed: u64,
) -> Result<ForecastSet> {
    if members < 2 {
        return Err(Error::InvalidArgument("a forecast needs at least 2 members".into()));
    }
    if model.origin() != data.start() {
        return Err(Error::InvalidArgument(format!("model starts on {}, data on {}", model.origin(), data.start())));
    }
    let mut inits = Vec::with_capacity(years.len());
    for &y in years {
        let init = season.first_day(y);
        let end = season.last_day(y);
        let (Some(s), Some(_)) = (model.step_of(init), data.index_of(init)) else {
            return Err(Error::InvalidArgument(format!("initialisation {init} is outside the data")));
        };
        let observed = observed_seasonal_mean(data, season, y).ok_or_else(|| {
            Error::InvalidArgument(format!("season {y} ({init}..{end}) has no verifying observations"))
        })?;
        inits.push((y, init, s, (end - init).num_days() as usize + 1, observed));
    }
    let at: Vec<usize> = inits.iter().map(|i| i.2 - 1).collect();
    let states = ekf_filtered_at(model, prior, data.values(), &at)?;
    let mut out = Vec::with_capacity(years.len());
    for ((year, init, s, len, observed), state) in inits.into_iter().zip(states) {
        let initial = Initial::gaussian(&state);
        let stream = (year as i64 as u64) << 32;
        let means = (0..members)
            .into_par_iter()
            .map(|m| {
                let mut rng = member_rng(seed, stream | m as u64);
                let mut total = Vec::with_capacity(len);
                simulate_member(model, &initial, s, len, &mut rng, |t, x, _| total.push(model.observe(t, x)))?;
                Ok(stats::sum(total) / len as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(ForecastYear { year, init, members: means, observed });
    }
    ForecastSet::new(season, out)
}
