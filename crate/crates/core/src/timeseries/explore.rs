use chrono::{Datelike, NaiveDate};
use rustfft::{num_complex::Complex, FftPlanner};

use super::DailySeries;
use crate::calendar::doy366;
use crate::error::{Error, Result};
use crate::stats;

/// Raw one-sided periodogram at the Fourier frequencies `j/N` (cycles per
/// day), `j = 1..=N/2`, after removing the mean.
///
/// Power is `2|X_j|^2 / N^2` (the Nyquist bin, when present, is not
/// doubled), so the powers sum to the divisor-N sample variance.
pub fn periodogram(series: &DailySeries) -> Result<Vec<(f64, f64)>> {
    if series.has_missing() {
        return Err(Error::Data("periodogram requires a series without missing values".into()));
    }
    let n = series.len();
    if n < 4 {
        return Err(Error::Data(format!("periodogram needs at least 4 values, got {n}")));
    }
    let values: Vec<f64> = series.values().iter().flatten().copied().collect();
    let m = stats::mean(&values);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    Ok((1..=n / 2)
        .map(|j| {
            let scale = if 2 * j == n { 1.0 } else { 2.0 };
            (j as f64 / nf, scale * buf[j].norm_sqr() / (nf * nf))
        })
        .collect())
}

/// Sample autocorrelation for lags `0..=max_lag` using the common
/// denominator (lag-0 sum of squares). Pairs with a missing value are
/// skipped.
pub fn acf(series: &DailySeries, max_lag: usize) -> Result<Vec<f64>> {
    acf_masked(series, max_lag, |_| true)
}

/// As [`acf`], restricted to days where `mask` is true. Lag pairs must lie in
/// the same contiguous run of masked days, so a Dec-Mar mask never pairs
/// March of one year with December of the next.
pub fn acf_masked(
    series: &DailySeries,
    max_lag: usize,
    mask: impl Fn(NaiveDate) -> bool,
) -> Result<Vec<f64>> {
    let n = series.len();
    // Run label per day; None outside the mask.
    let mut run = vec![None; n];
    let mut label = 0usize;
    let mut inside = false;
    for (i, slot) in run.iter_mut().enumerate() {
        if mask(series.date(i)) {
            if !inside {
                label += 1;
                inside = true;
            }
            *slot = Some(label);
        } else {
            inside = false;
        }
    }
    let valid: Vec<Option<f64>> = series
        .values()
        .iter()
        .zip(&run)
        .map(|(v, r)| r.and(*v))
        .collect();
    let observed: Vec<f64> = valid.iter().flatten().copied().collect();
    if observed.len() < max_lag + 2 {
        return Err(Error::Data(format!(
            "{} usable values for {} lags",
            observed.len(),
            max_lag
        )));
    }
    let m = stats::mean(&observed);
    let denom = stats::sum(observed.iter().map(|x| (x - m) * (x - m)));
    if !(denom > 0.0) {
        return Err(Error::Data("zero variance in autocorrelation input".into()));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for k in 1..=max_lag {
        let num = stats::sum((0..n.saturating_sub(k)).filter_map(|i| {
            match (valid[i], valid[i + k]) {
                (Some(a), Some(b)) if run[i] == run[i + k] => Some((a - m) * (b - m)),
                _ => None,
            }
        }));
        out.push(num / denom);
    }
    Ok(out)
}

/// Partial autocorrelation for lags `0..=max_lag` (entry 0 is 1).
pub fn pacf(series: &DailySeries, max_lag: usize) -> Result<Vec<f64>> {
    pacf_from_acf(&acf(series, max_lag)?)
}

/// Durbin-Levinson recursion on an autocorrelation sequence `r[0..=p]`.
pub fn pacf_from_acf(r: &[f64]) -> Result<Vec<f64>> {
    let p = r.len().saturating_sub(1);
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    let mut v = r.first().copied().unwrap_or(0.0);
    for k in 1..=p {
        if !(v > 1e-14) {
            return Err(Error::Numerical(format!(
                "non-invertible Toeplitz system at lag {k}"
            )));
        }
        let acc: f64 = (1..k).map(|j| phi[j - 1] * r[k - j]).sum();
        let kappa = (r[k] - acc) / v;
        let prev = phi.clone();
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - kappa * prev[k - j - 1];
        }
        phi.push(kappa);
        v *= 1.0 - kappa * kappa;
        out.push(kappa);
    }
    Ok(out)
}

/// Inter-annual sample variance of first differences `y_t - y_{t-1}` for
/// each of the 366 day-of-year slots. Slots with fewer than two valid
/// differences are `None`.
pub fn first_diff_doy_variance(series: &DailySeries) -> Result<Vec<Option<f64>>> {
    let years = series.end().year() - series.start().year();
    if series.len() < 3 * 365 || years < 2 {
        return Err(Error::Data("first-difference variance needs at least 3 years".into()));
    }
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); 366];
    for i in 1..series.len() {
        if let (Some(a), Some(b)) = (series.value(i - 1), series.value(i)) {
            buckets[doy366(series.date(i)) as usize - 1].push(b - a);
        }
    }
    Ok(buckets
        .iter()
        .map(|b| (b.len() >= 2).then(|| stats::variance(b)))
        .collect())
}
