use std::fmt;

use crate::calendar::MonthWindow;
use crate::error::{Error, Result};
use crate::stats;
use crate::timeseries::{fit_harmonics, residualize, DailySeries};

/// Removes a fixed two-harmonic seasonal cycle and a linear trend.
pub fn deseasonalize(series: &DailySeries) -> Result<DailySeries> {
    let fit = fit_harmonics(series, 2, true)?;
    Ok(residualize(series, &fit))
}

/// `out[t]` is the mean of the observed values among the `k` days before
/// `t`; `None` until `k` days of history exist or when none of them was
/// observed.
pub fn persistence_linear(series: &DailySeries, k: usize) -> Result<Vec<Option<f64>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("persistence window must be at least 1 day".into()));
    }
    let v = series.values();
    let mut out = vec![None; v.len()];
    let (mut sum, mut count) = (0.0, 0usize);
    for t in 0..v.len() {
        if t >= k {
            out[t] = (count > 0).then(|| sum / count as f64);
            if let Some(y) = v[t - k] {
                sum -= y;
                count -= 1;
            }
        }
        if let Some(y) = v[t] {
            sum += y;
            count += 1;
        }
        if count == 0 {
            // Clears accumulated rounding once the window is empty.
            sum = 0.0;
        }
    }
    Ok(out)
}

/// Exponentially weighted level: `out[0] = Y_0`, then
/// `out[t] = alpha Y_t + (1 - alpha) out[t-1]`. A missing day carries the
/// previous level forward; days before the first observation are `None`.
pub fn persistence_exponential(series: &DailySeries, alpha: f64) -> Result<Vec<Option<f64>>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("smoothing weight {alpha} is outside (0, 1]")));
    }
    let mut level: Option<f64> = None;
    Ok(series
        .values()
        .iter()
        .map(|y| {
            level = match (level, *y) {
                (None, y) => y,
                (Some(l), Some(y)) => Some(alpha * y + (1.0 - alpha) * l),
                (Some(l), None) => Some(l),
            };
            level
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    /// Mean of the last `K` days.
    Linear(usize),
    /// Exponential smoothing with weight `alpha`.
    Exponential(f64),
}

impl Baseline {
    pub fn parameter(&self) -> f64 {
        match self {
            Baseline::Linear(k) => *k as f64,
            Baseline::Exponential(a) => *a,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Baseline::Linear(_) => "linear",
            Baseline::Exponential(_) => "exponential",
        }
    }

    /// Windows of 1 to 180 days.
    pub fn linear_grid() -> Vec<Baseline> {
        (1..=180).map(Baseline::Linear).collect()
    }

    /// 60 weights spaced evenly in log between 0.002 and 1.
    pub fn exponential_grid() -> Vec<Baseline> {
        let (lo, n) = (0.002f64.ln(), 60);
        (0..n)
            .map(|i| Baseline::Exponential((lo * (1.0 - i as f64 / (n - 1) as f64)).exp().min(1.0)))
            .collect()
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Linear(k) => write!(f, "linear K={k}"),
            Baseline::Exponential(a) => write!(f, "exponential alpha={a}"),
        }
    }
}

/// Baseline forecast for each season, made with the data strictly before
/// the season's first day.
pub fn baseline_forecasts(
    series: &DailySeries,
    baseline: Baseline,
    season: MonthWindow,
    years: &[i32],
) -> Result<Vec<f64>> {
    // The linear entry at i already excludes day i; the exponential level
    // at i - 1 is the last one built from past data only.
    let (levels, lag) = match baseline {
        Baseline::Linear(k) => (persistence_linear(series, k)?, 0),
        Baseline::Exponential(a) => (persistence_exponential(series, a)?, 1),
    };
    years
        .iter()
        .map(|&y| {
            let init = season.first_day(y);
            let i = series
                .index_of(init)
                .ok_or_else(|| Error::InvalidArgument(format!("initialisation {init} is outside the data")))?;
            i.checked_sub(lag)
                .and_then(|j| levels[j])
                .ok_or_else(|| Error::Data(format!("no history for {baseline} before {init}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineScan {
    pub best: Baseline,
    pub best_correlation: f64,
    /// Correlation for every candidate; NaN where it is undefined.
    pub curve: Vec<(Baseline, f64)>,
}

/// In-sample choice of the baseline parameter maximising the correlation
/// between forecasts and `observed`.
pub fn optimize_baseline(
    series: &DailySeries,
    season: MonthWindow,
    years: &[i32],
    observed: &[f64],
    grid: &[Baseline],
) -> Result<BaselineScan> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty baseline grid".into()));
    }
    if observed.len() != years.len() {
        return Err(Error::Dimension(format!("{} observations for {} years", observed.len(), years.len())));
    }
    if years.len() < 3 {
        return Err(Error::InvalidArgument("baseline skill needs at least 3 years".into()));
    }
    if !(stats::variance(observed) > 0.0) {
        return Err(Error::Data("observed seasonal means have zero variance".into()));
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &b in grid {
        let r = match baseline_forecasts(series, b, season, years) {
            Ok(f) => stats::pearson(&f, observed).unwrap_or(f64::NAN),
            Err(Error::Data(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        curve.push((b, r));
    }
    let (best, best_correlation) = curve
        .iter()
        .filter(|(_, r)| r.is_finite())
        .fold(None, |acc: Option<(Baseline, f64)>, &(b, r)| match acc {
            Some((_, br)) if br >= r => acc,
            _ => Some((b, r)),
        })
        .ok_or_else(|| Error::Data("no baseline in the grid has a defined correlation".into()))?;
    Ok(BaselineScan { best, best_correlation, curve })
}
