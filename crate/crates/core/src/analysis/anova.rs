use std::ops::RangeInclusive;
use std::path::Path;

use super::{Component, ComponentPath, ComponentSeries};
use crate::calendar::MonthWindow;
use crate::error::{Error, Result};
use crate::stats;
use crate::timeseries::DailySeries;

/// Rows of the variance table. The seasonal cycle is folded into `Mean`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnovaTerm {
    Mean,
    External,
    Weather,
    Error,
}

impl AnovaTerm {
    pub const ALL: [AnovaTerm; 4] = [AnovaTerm::Mean, AnovaTerm::External, AnovaTerm::Weather, AnovaTerm::Error];

    pub fn name(self) -> &'static str {
        match self {
            AnovaTerm::Mean => "mean",
            AnovaTerm::External => "external",
            AnovaTerm::Weather => "weather",
            AnovaTerm::Error => "error",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    fn of(means: &[f64; 5]) -> [f64; 4] {
        let c = |c: Component| means[c.index()];
        [
            c(Component::Mean) + c(Component::Seasonal),
            c(Component::Forced),
            c(Component::Weather),
            c(Component::Error),
        ]
    }
}

/// Per-trajectory seasonal means of every component, built one trajectory
/// at a time. Only complete seasons inside the data are used, and each mean
/// runs over the observed days of its season so the components still add
/// up to the observed seasonal mean.
#[derive(Debug, Clone)]
pub struct SeasonalMeans {
    season: MonthWindow,
    days: usize,
    years: Vec<i32>,
    index: Vec<Vec<usize>>,
    observed: Vec<f64>,
    /// `[member][year][component]`
    values: Vec<Vec<[f64; 5]>>,
}

impl SeasonalMeans {
    /// Empty accumulator for `season` over `data`, optionally limited to
    /// the season labels in `years`.
    pub fn new(data: &DailySeries, season: MonthWindow, years: Option<RangeInclusive<i32>>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Data("empty series".into()));
        }
        let first = season.season_year(data.start()) - 1;
        let last = season.season_year(data.end()) + 1;
        let mut out = Self {
            season,
            days: data.len(),
            years: Vec::new(),
            index: Vec::new(),
            observed: Vec::new(),
            values: Vec::new(),
        };
        for year in first..=last {
            if years.as_ref().is_some_and(|r| !r.contains(&year)) {
                continue;
            }
            let (Some(a), Some(b)) = (data.index_of(season.first_day(year)), data.index_of(season.last_day(year)))
            else {
                continue;
            };
            let idx: Vec<usize> = (a..=b).filter(|&i| data.value(i).is_some()).collect();
            if idx.is_empty() {
                continue;
            }
            out.observed.push(stats::mean(&idx.iter().map(|&i| data.value(i).unwrap()).collect::<Vec<_>>()));
            out.years.push(year);
            out.index.push(idx);
        }
        Ok(out)
    }

    /// Accumulator filled from every member of `series`.
    pub fn from_series(
        series: &ComponentSeries,
        data: &DailySeries,
        season: MonthWindow,
        years: Option<RangeInclusive<i32>>,
    ) -> Result<Self> {
        let mut out = Self::new(data, season, years)?;
        for m in series.members() {
            out.push(m)?;
        }
        Ok(out)
    }

    pub fn push(&mut self, path: &ComponentPath) -> Result<()> {
        if path.len() != self.days {
            return Err(Error::Dimension(format!("{} component days for {} data days", path.len(), self.days)));
        }
        let row = self
            .index
            .iter()
            .map(|idx| {
                std::array::from_fn(|c| {
                    let v = &path.values[c];
                    stats::sum(idx.iter().map(|&i| v[i])) / idx.len() as f64
                })
            })
            .collect();
        self.values.push(row);
        Ok(())
    }

    pub fn season(&self) -> MonthWindow {
        self.season
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn members(&self) -> usize {
        self.values.len()
    }

    /// Observed seasonal mean per year.
    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// Seasonal mean of `c` for member `m`, one value per year.
    pub fn component(&self, m: usize, c: Component) -> Vec<f64> {
        self.values[m].iter().map(|r| r[c.index()]).collect()
    }

    /// Per-year values of the variance-table terms for member `m`.
    fn terms(&self, m: usize) -> [Vec<f64>; 4] {
        let rows: Vec<[f64; 4]> = self.values[m].iter().map(AnovaTerm::of).collect();
        std::array::from_fn(|k| rows.iter().map(|r| r[k]).collect())
    }

    fn check(&self) -> Result<()> {
        if self.years.len() < 10 {
            return Err(Error::InvalidArgument(format!(
                "{} complete {} seasons; at least 10 are needed",
                self.years.len(),
                self.season
            )));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidArgument("no trajectories".into()));
        }
        Ok(())
    }
}

/// Variance shares of one season: ensemble mean and 95% interval of each
/// term, plus the per-trajectory fractions.
#[derive(Debug, Clone)]
pub struct AnovaRow {
    pub season: MonthWindow,
    pub per_member: Vec<[f64; 4]>,
    pub summary: [(f64, f64, f64); 4],
}

impl AnovaRow {
    /// `(mean, lo, hi)` of the share of `term`.
    pub fn fraction(&self, term: AnovaTerm) -> (f64, f64, f64) {
        self.summary[term.index()]
    }
}

/// Splits the inter-annual variance of the seasonal mean between the terms.
/// Each share is `Cov(term, total) / Var(total)` across years, so the
/// shares of one trajectory add to one; individual shares may be negative.
pub fn anova(means: &SeasonalMeans) -> Result<AnovaRow> {
    means.check()?;
    let mut per_member = Vec::with_capacity(means.members());
    for m in 0..means.members() {
        let terms = means.terms(m);
        let total: Vec<f64> = (0..means.years.len()).map(|y| terms.iter().map(|t| t[y]).sum()).collect();
        let var = stats::variance(&total);
        if !(var > 0.0) {
            return Err(Error::Data(format!("no inter-annual variance in {} means", means.season)));
        }
        per_member.push(std::array::from_fn(|k| stats::covariance(&terms[k], &total) / var));
    }
    let summary = std::array::from_fn(|k| {
        let v: Vec<f64> = per_member.iter().map(|f: &[f64; 4]| f[k]).collect();
        let (lo, hi) = stats::interval(&v, 0.025, 0.975);
        (stats::mean(&v), lo, hi)
    });
    Ok(AnovaRow { season: means.season, per_member, summary })
}

/// Posterior-mean contribution of each term to every seasonal anomaly.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub season: MonthWindow,
    pub years: Vec<i32>,
    /// `[year][term]`, anomalies from the across-year average.
    pub contributions: Vec<[f64; 4]>,
    /// Observed seasonal mean minus its across-year average.
    pub observed_anomaly: Vec<f64>,
}

impl Attribution {
    pub fn term(&self, term: AnovaTerm) -> Vec<f64> {
        self.contributions.iter().map(|c| c[term.index()]).collect()
    }
}

pub fn attribute_years(means: &SeasonalMeans) -> Result<Attribution> {
    means.check()?;
    let ny = means.years.len();
    let mut acc = vec![[0.0; 4]; ny];
    for m in 0..means.members() {
        for (k, t) in means.terms(m).iter().enumerate() {
            let avg = stats::mean(t);
            for (a, v) in acc.iter_mut().zip(t) {
                a[k] += v - avg;
            }
        }
    }
    let scale = means.members() as f64;
    let contributions = acc.into_iter().map(|a| a.map(|v| v / scale)).collect();
    let avg = stats::mean(&means.observed);
    Ok(Attribution {
        season: means.season,
        years: means.years.clone(),
        contributions,
        observed_anomaly: means.observed.iter().map(|v| v - avg).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnovaRecord {
    pub season: String,
    pub component: String,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttributionRecord {
    pub year: i32,
    pub component: String,
    pub hpa: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Data(format!("{}: {e}", path.display()))
}

fn write_records<T: serde::Serialize>(records: impl IntoIterator<Item = T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

pub(crate) fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|rec| rec.map_err(csv_err(path))).collect()
}

pub(crate) fn write_csv<T: serde::Serialize>(records: impl IntoIterator<Item = T>, path: &Path) -> Result<()> {
    write_records(records, path)
}

/// One line per (season, term).
pub fn write_anova_csv(rows: &[AnovaRow], path: impl AsRef<Path>) -> Result<()> {
    let records = rows.iter().flat_map(|r| {
        AnovaTerm::ALL.iter().map(move |t| {
            let (mean, lo, hi) = r.fraction(*t);
            AnovaRecord { season: r.season.to_string(), component: t.name().into(), mean, lo, hi }
        })
    });
    write_records(records, path.as_ref())
}

pub fn read_anova_csv(path: impl AsRef<Path>) -> Result<Vec<AnovaRecord>> {
    read_records(path.as_ref())
}

/// One line per (year, term), plus an `observed` line per year.
pub fn write_attribution_csv(a: &Attribution, path: impl AsRef<Path>) -> Result<()> {
    let records = a.years.iter().enumerate().flat_map(|(i, &year)| {
        AnovaTerm::ALL
            .iter()
            .map(move |t| AttributionRecord { year, component: t.name().into(), hpa: a.contributions[i][t.index()] })
            .chain(std::iter::once(AttributionRecord {
                year,
                component: "observed".into(),
                hpa: a.observed_anomaly[i],
            }))
    });
    write_records(records, path.as_ref())
}

pub fn read_attribution_csv(path: impl AsRef<Path>) -> Result<Vec<AttributionRecord>> {
    read_records(path.as_ref())
}
