use nalgebra::{DMatrix, DVector};

use super::DailySeries;
use crate::calendar::OMEGA;
use crate::error::{Error, Result};
use crate::stats::ols;

/// Fixed mean, optional linear trend and `K` fixed harmonics of the annual
/// frequency, as fitted by least squares against the day index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFit {
    pub intercept: f64,
    /// hPa per day; zero when fitted without trend.
    pub slope: f64,
    /// `(a_k, b_k)` multiplying `sin(k w t)` and `cos(k w t)`.
    pub coefficients: Vec<(f64, f64)>,
    pub with_trend: bool,
}

impl HarmonicFit {
    pub fn zero(k: usize) -> Self {
        Self { intercept: 0.0, slope: 0.0, coefficients: vec![(0.0, 0.0); k], with_trend: false }
    }

    /// Fitted curve at (1-based) day index `t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut y = self.intercept + self.slope * t;
        for (k, (a, b)) in self.coefficients.iter().enumerate() {
            let arg = (k + 1) as f64 * OMEGA * t;
            y += a * arg.sin() + b * arg.cos();
        }
        y
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.coefficients.iter().map(|(a, b)| a.hypot(*b)).collect()
    }
}

/// Least-squares regression of the observed values on
/// `{1, t, sin(k w t), cos(k w t) : k = 1..K}`; `t` is dropped when
/// `with_trend` is false.
pub fn fit_harmonics(series: &DailySeries, k: usize, with_trend: bool) -> Result<HarmonicFit> {
    let p = 1 + usize::from(with_trend) + 2 * k;
    let observed: Vec<(f64, f64)> = series
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|y| ((i + 1) as f64, y)))
        .collect();
    if observed.len() < 2 * k + 2 {
        return Err(Error::RankDeficient(format!(
            "{} observed values for {} harmonics",
            observed.len(),
            k
        )));
    }
    let n = observed.len();
    // Centre t so the trend column is well scaled against the constant.
    let t_mid = (series.len() as f64 + 1.0) / 2.0;
    let mut design = DMatrix::zeros(n, p);
    let mut response = DVector::zeros(n);
    for (r, &(t, y)) in observed.iter().enumerate() {
        let mut c = 0;
        design[(r, c)] = 1.0;
        c += 1;
        if with_trend {
            design[(r, c)] = (t - t_mid) / t_mid;
            c += 1;
        }
        for kk in 1..=k {
            let arg = kk as f64 * OMEGA * t;
            design[(r, c)] = arg.sin();
            design[(r, c + 1)] = arg.cos();
            c += 2;
        }
        response[r] = y;
    }
    let beta = ols(&design, &response)?;
    let mut c = 1;
    let (slope, intercept) = if with_trend {
        c += 1;
        let s = beta[1] / t_mid;
        (s, beta[0] - s * t_mid)
    } else {
        (0.0, beta[0])
    };
    let coefficients = (0..k).map(|i| (beta[c + 2 * i], beta[c + 2 * i + 1])).collect();
    Ok(HarmonicFit { intercept, slope, coefficients, with_trend })
}

/// Observed values minus the fitted curve; missing days stay missing.
pub fn residualize(series: &DailySeries, fit: &HarmonicFit) -> DailySeries {
    series.map(|i, y| y - fit.evaluate((i + 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(1950, 1, 1).unwrap()
    }

    fn series(f: impl Fn(f64) -> f64, n: usize) -> DailySeries {
        DailySeries::from_values(start(), (1..=n).map(|t| f(t as f64)).collect()).unwrap()
    }

    #[test]
    fn exact_recovery() {
        let s = series(|t| 5.0 + 3.0 * (OMEGA * t).sin(), 1000);
        let fit = fit_harmonics(&s, 1, false).unwrap();
        assert_abs_diff_eq!(fit.intercept, 5.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.coefficients[0].0, 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.coefficients[0].1, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_series() {
        let s = series(|_| -2.5, 800);
        let fit = fit_harmonics(&s, 2, true).unwrap();
        assert_abs_diff_eq!(fit.intercept, -2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.slope, 0.0, epsilon = 1e-12);
        for (a, b) in fit.coefficients {
            assert_abs_diff_eq!(a, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(b, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn trend_and_two_cycles() {
        let s = series(
            |t| 1.0 + 1e-3 * t + 4.0 * (OMEGA * t).cos() - 2.0 * (2.0 * OMEGA * t).sin(),
            3000,
        );
        let fit = fit_harmonics(&s, 2, true).unwrap();
        assert_abs_diff_eq!(fit.slope, 1e-3, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-8);
        let amps = fit.amplitudes();
        assert_abs_diff_eq!(amps[0], 4.0, epsilon = 1e-8);
        assert_abs_diff_eq!(amps[1], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn residuals_of_pure_sinusoid_vanish_and_refit_is_zero() {
        let s = series(|t| 5.0 + 3.0 * (OMEGA * t).sin() + 0.7 * (2.0 * OMEGA * t).cos(), 900);
        let fit = fit_harmonics(&s, 2, false).unwrap();
        let r = residualize(&s, &fit);
        assert!(r.values().iter().flatten().all(|v| v.abs() < 1e-8));
        let refit = fit_harmonics(&r, 2, false).unwrap();
        assert_abs_diff_eq!(refit.intercept, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_fit_is_identity() {
        let s = series(|t| t.sqrt(), 50);
        assert_eq!(residualize(&s, &HarmonicFit::zero(2)), s);
    }

    #[test]
    fn too_few_points() {
        let s = DailySeries::new(start(), vec![Some(1.0), None, Some(2.0), None]).unwrap();
        assert!(matches!(fit_harmonics(&s, 1, false), Err(Error::RankDeficient(_))));
    }
}
