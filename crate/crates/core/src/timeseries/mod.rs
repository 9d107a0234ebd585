//! Daily index series: ingestion, the fixed-cycle regression and the
//! exploratory statistics (periodogram, ACF, PACF, day-of-year variance).

mod explore;
mod harmonics;
mod io;

pub use explore::{acf, acf_masked, first_diff_doy_variance, pacf, pacf_from_acf, periodogram};
pub use harmonics::{fit_harmonics, residualize, HarmonicFit};
pub use io::{load_csv, write_csv, CsvColumns};

use chrono::{Duration, NaiveDate};

use crate::error::{Error, Result};

/// A gap-free run of consecutive calendar days. Missing days are explicit
/// `None` entries. Day index `t` is 1 for the first value.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    start: NaiveDate,
    values: Vec<Option<f64>>,
}

impl DailySeries {
    pub fn new(start: NaiveDate, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Data(format!(
                "a daily series needs at least 2 days, got {}",
                values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in series".into()));
        }
        Ok(Self { start, values })
    }

    /// Fully observed series.
    pub fn from_values(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        Self::new(start, values.into_iter().map(Some).collect())
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.date(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        self.values[i]
    }

    /// Date of the i-th (0-based) entry.
    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }

    /// 0-based position of `date`, if inside the series.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let off = (date - self.start).num_days();
        (off >= 0 && (off as usize) < self.values.len()).then_some(off as usize)
    }

    pub fn observed_count(&self) -> usize {
        self.values.iter().flatten().count()
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(Option::is_none)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(move |i| self.date(i))
    }

    /// Sub-series covering `[from, to]` (inclusive, clipped to the data).
    pub fn slice(&self, from: NaiveDate, to: NaiveDate) -> Result<Self> {
        let lo = from.max(self.start);
        let hi = to.min(self.end());
        if hi < lo {
            return Err(Error::Data(format!("no data between {from} and {to}")));
        }
        let a = self.index_of(lo).expect("clipped");
        let b = self.index_of(hi).expect("clipped");
        Self::new(lo, self.values[a..=b].to_vec())
    }

    /// Applies `f` to every observed value.
    pub fn map(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v.map(|x| f(i, x)))
            .collect();
        Self { start: self.start, values }
    }
}
