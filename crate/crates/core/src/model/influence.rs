use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Annual window gating the forced component: zero outside the window, one
/// on the plateau, with linear ramps of `taper` days at each end.
///
/// The window is anchored to a calendar date (`start_month`/`start_day`)
/// rather than a day index, so it starts on the same date every year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InfluenceFunction {
    pub start_month: u32,
    pub start_day: u32,
    pub length: u32,
    pub taper: u32,
}

impl Default for InfluenceFunction {
    fn default() -> Self {
        Self { start_month: 11, start_day: 1, length: 165, taper: 30 }
    }
}

impl InfluenceFunction {
    pub fn new(start_month: u32, start_day: u32, length: u32, taper: u32) -> Result<Self> {
        let probe = NaiveDate::from_ymd_opt(2000, start_month, start_day);
        if probe.is_none() {
            return Err(Error::InvalidArgument(format!(
                "invalid influence start {start_month:02}-{start_day:02}"
            )));
        }
        if length > 366 {
            return Err(Error::InvalidArgument(format!(
                "influence length {length} exceeds one year"
            )));
        }
        if 2 * taper > length {
            return Err(Error::InvalidArgument(format!(
                "taper {taper} too long for a {length}-day window"
            )));
        }
        Ok(Self { start_month, start_day, length, taper })
    }

    /// A window that never opens (`λ ≡ 0`).
    pub fn never() -> Self {
        Self { start_month: 1, start_day: 1, length: 0, taper: 0 }
    }

    /// Windows starting on the first of each month, for every length in
    /// `lengths`, in month-major order.
    pub fn family(lengths: &[u32], taper: u32) -> Result<Vec<Self>> {
        let mut out = Vec::with_capacity(12 * lengths.len());
        for month in 1..=12 {
            for &len in lengths {
                out.push(Self::new(month, 1, len, taper)?);
            }
        }
        Ok(out)
    }

    /// Starts on the first of each month, lengths 90 to 330 days in steps
    /// of 30: 108 windows.
    pub fn default_family() -> Vec<Self> {
        let lengths: Vec<u32> = (90..=330).step_by(30).collect();
        Self::family(&lengths, 30).expect("default family is valid")
    }

    fn start_in(&self, year: i32) -> NaiveDate {
        // 29 Feb starts fall back to 28 Feb in common years.
        NaiveDate::from_ymd_opt(year, self.start_month, self.start_day)
            .or_else(|| NaiveDate::from_ymd_opt(year, self.start_month, self.start_day - 1))
            .expect("validated start date")
    }

    /// Days since the most recent window start on or before `date`.
    pub fn days_since_start(&self, date: NaiveDate) -> i64 {
        let this_year = self.start_in(date.year());
        let start = if this_year <= date { this_year } else { self.start_in(date.year() - 1) };
        (date - start).num_days()
    }

    /// Influence `λ` on `date`, in `[0, 1]`.
    pub fn at(&self, date: NaiveDate) -> f64 {
        self.at_offset(self.days_since_start(date))
    }

    /// Influence `s` days into the window.
    pub fn at_offset(&self, s: i64) -> f64 {
        let len = self.length as i64;
        if s < 0 || s >= len {
            return 0.0;
        }
        if self.taper == 0 {
            return 1.0;
        }
        let taper = self.taper as f64;
        let up = s as f64 / taper;
        let down = (len - s) as f64 / taper;
        up.min(down).clamp(0.0, 1.0)
    }
}

impl fmt::Display for InfluenceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}/{}/{}", self.start_month, self.start_day, self.length, self.taper)
    }
}

/// Parses `MM-DD/length/taper`, as written by `Display`.
impl FromStr for InfluenceFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse influence function '{s}'"));
        let parts: Vec<&str> = s.trim().split('/').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (m, d) = parse_month_day(parts[0]).ok_or_else(bad)?;
        let length = parts[1].trim().parse().map_err(|_| bad())?;
        let taper = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(m, d, length, taper)
    }
}

pub(crate) fn parse_month_day(s: &str) -> Option<(u32, u32)> {
    let (m, d) = s.trim().split_once('-')?;
    Some((m.trim().parse().ok()?, d.trim().parse().ok()?))
}
