//! Small descriptive statistics used throughout the crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Neumaier-compensated sum.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance (divisor n - 1).
pub fn variance(values: &[f64]) -> f64 {
    covariance(values, values)
}

/// Unbiased sample covariance (divisor n - 1).
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let mx = mean(x);
    let my = mean(y);
    sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my))) / (n - 1) as f64
}

pub fn std_dev(values: &[f64]) -> f64 {
    variance(values).sqrt()
}

/// Pearson correlation; errors when either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 2 pairs".into()));
    }
    let vx = variance(x);
    let vy = variance(y);
    if !(vx > 0.0) || !(vy > 0.0) {
        return Err(Error::Data("zero variance in correlation input".into()));
    }
    Ok((covariance(x, y) / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Quantile by linear interpolation between order statistics (the usual
/// "type 7" definition). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Returns the (lo, hi) quantiles of `values`, ignoring NaNs.
pub fn interval(values: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    v.sort_by(f64::total_cmp);
    (quantile_sorted(&v, lo), quantile_sorted(&v, hi))
}

/// Ordinary least squares via QR. Returns the coefficient vector.
pub fn ols(design: &DMatrix<f64>, response: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = design.shape();
    if n < p {
        return Err(Error::RankDeficient(format!("{n} rows for {p} coefficients")));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..p {
        if !(r[(i, i)].abs() > 1e-10 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient(format!("column {i} is collinear")));
        }
    }
    let qty = qr.q().transpose() * response;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient("triangular solve failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_is_exact_on_cancellation() {
        assert_eq!(sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_relative_eq!(quantile_sorted(&v, 0.25), 2.0);
        assert_relative_eq!(quantile_sorted(&v, 0.1), 1.4);
    }

    #[test]
    fn correlation_of_affine_copy_is_one() {
        let x = [1.0, 3.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        assert_relative_eq!(pearson(&x, &y).unwrap(), 1.0, epsilon = 1e-15);
        assert!(pearson(&x, &[1.0; 4]).is_err());
    }

    #[test]
    fn ols_recovers_line_and_flags_collinearity() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let b = ols(&x, &y).unwrap();
        assert_relative_eq!(b[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(b[1], 2.0, epsilon = 1e-12);
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(ols(&c, &DVector::from_vec(vec![1.0, 2.0, 3.0])).is_err());
    }
}
