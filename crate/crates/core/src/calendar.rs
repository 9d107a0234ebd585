//! Calendar helpers shared by every module: day-of-year in a fixed 366-slot
//! layout and contiguous month windows used to define seasons.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

use crate::error::Error;

/// Angular frequency of the annual cycle, radians per day.
pub const OMEGA: f64 = 2.0 * std::f64::consts::PI / 365.25;

/// Day of year in a 366-slot layout: 29 Feb is always slot 60 and 1 Mar is
/// always slot 61, so a calendar day keeps its slot in every year.
pub fn doy366(date: NaiveDate) -> u32 {
    let ord = date.ordinal();
    if date.leap_year() || ord < 60 {
        ord
    } else {
        ord + 1
    }
}

/// Number of days in `month` of `year`.
pub fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    let first_next = NaiveDate::from_ymd_opt(ny, nm, 1).expect("valid month");
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    (first_next - first).num_days() as u32
}

/// A contiguous range of calendar months, possibly wrapping through the new
/// year (for example Dec-Feb).
///
/// A wrapping window is labelled by the year of its final month, so the
/// DJF season containing December 1999 is season 2000.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonthWindow {
    pub start_month: u32,
    pub end_month: u32,
}

impl MonthWindow {
    pub const MAM: MonthWindow = MonthWindow { start_month: 3, end_month: 5 };
    pub const JJA: MonthWindow = MonthWindow { start_month: 6, end_month: 8 };
    pub const SON: MonthWindow = MonthWindow { start_month: 9, end_month: 11 };
    pub const DJF: MonthWindow = MonthWindow { start_month: 12, end_month: 2 };
    /// Extended winter used by the predictive checks.
    pub const DEC_MAR: MonthWindow = MonthWindow { start_month: 12, end_month: 3 };
    pub const APR_NOV: MonthWindow = MonthWindow { start_month: 4, end_month: 11 };

    pub const CLIMATOLOGICAL: [MonthWindow; 4] =
        [MonthWindow::MAM, MonthWindow::JJA, MonthWindow::SON, MonthWindow::DJF];

    pub fn new(start_month: u32, end_month: u32) -> Result<Self, Error> {
        if !(1..=12).contains(&start_month) || !(1..=12).contains(&end_month) {
            return Err(Error::InvalidArgument(format!(
                "month window {start_month}-{end_month} out of range"
            )));
        }
        Ok(Self { start_month, end_month })
    }

    pub fn wraps(&self) -> bool {
        self.start_month > self.end_month
    }

    pub fn contains_month(&self, month: u32) -> bool {
        if self.wraps() {
            month >= self.start_month || month <= self.end_month
        } else {
            (self.start_month..=self.end_month).contains(&month)
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.contains_month(date.month())
    }

    /// Season label of a date inside the window.
    pub fn season_year(&self, date: NaiveDate) -> i32 {
        if self.wraps() && date.month() >= self.start_month {
            date.year() + 1
        } else {
            date.year()
        }
    }

    /// First day of the season labelled `year`.
    pub fn first_day(&self, year: i32) -> NaiveDate {
        let y = if self.wraps() { year - 1 } else { year };
        NaiveDate::from_ymd_opt(y, self.start_month, 1).expect("valid month")
    }

    /// Last day of the season labelled `year`.
    pub fn last_day(&self, year: i32) -> NaiveDate {
        NaiveDate::from_ymd_opt(year, self.end_month, days_in_month(year, self.end_month))
            .expect("valid month")
    }

    pub fn months(&self) -> Vec<u32> {
        let mut out = Vec::new();
        let mut m = self.start_month;
        loop {
            out.push(m);
            if m == self.end_month {
                break;
            }
            m = m % 12 + 1;
        }
        out
    }
}

const MONTH_LETTERS: [char; 12] = ['J', 'F', 'M', 'A', 'M', 'J', 'J', 'A', 'S', 'O', 'N', 'D'];

impl fmt::Display for MonthWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let months = self.months();
        if months.len() <= 4 && months.len() >= 2 {
            for m in months {
                write!(f, "{}", MONTH_LETTERS[m as usize - 1])?;
            }
            Ok(())
        } else {
            write!(f, "{}-{}", self.start_month, self.end_month)
        }
    }
}

impl FromStr for MonthWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "MAM" => return Ok(Self::MAM),
            "JJA" => return Ok(Self::JJA),
            "SON" => return Ok(Self::SON),
            "DJF" => return Ok(Self::DJF),
            _ => {}
        }
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("unknown season '{s}'")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidArgument(format!("unknown season '{s}'")))
        };
        MonthWindow::new(parse(a)?, parse(b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn leap_day_slots() {
        assert_eq!(doy366(d(2000, 2, 29)), 60);
        assert_eq!(doy366(d(2000, 3, 1)), 61);
        assert_eq!(doy366(d(2001, 3, 1)), 61);
        assert_eq!(doy366(d(2001, 2, 28)), 59);
        assert_eq!(doy366(d(2001, 12, 31)), 366);
        assert_eq!(doy366(d(2000, 12, 31)), 366);
    }

    #[test]
    fn djf_labelling() {
        let djf = MonthWindow::DJF;
        assert!(djf.wraps());
        assert_eq!(djf.season_year(d(1999, 12, 15)), 2000);
        assert_eq!(djf.season_year(d(2000, 2, 1)), 2000);
        assert_eq!(djf.first_day(2000), d(1999, 12, 1));
        assert_eq!(djf.last_day(2000), d(2000, 2, 29));
        assert!(!djf.contains(d(2000, 3, 1)));
        assert_eq!(djf.to_string(), "DJF");
        assert_eq!("djf".parse::<MonthWindow>().unwrap(), djf);
        assert_eq!("4-11".parse::<MonthWindow>().unwrap(), MonthWindow::APR_NOV);
    }

    #[test]
    fn month_lengths() {
        assert_eq!(days_in_month(2000, 2), 29);
        assert_eq!(days_in_month(1900, 2), 28);
        assert_eq!(days_in_month(2017, 12), 31);
    }
}
