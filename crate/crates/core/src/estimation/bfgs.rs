//! Quasi-Newton minimisation with finite-difference gradients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitStatus {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

impl FitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::MaxIterations => "max-iter",
            FitStatus::LineSearchFailure => "line-search-failure",
        }
    }
}

impl std::fmt::Display for FitStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FitStatus {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "converged" => Ok(FitStatus::Converged),
            "max-iter" => Ok(FitStatus::MaxIterations),
            "line-search-failure" => Ok(FitStatus::LineSearchFailure),
            other => Err(crate::Error::InvalidArgument(format!("unknown fit status '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when `|g|_inf < grad_tol * max(1, |f|)`.
    pub grad_tol: f64,
    /// Central-difference step relative to `max(1, |x_i|)`.
    pub fd_step: f64,
    /// Largest move per iteration in any coordinate.
    pub max_step: f64,
    /// Starting inverse Hessian; identity (rescaled after the first step)
    /// when absent.
    pub initial_inverse_hessian: Option<DMatrix<f64>>,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-5, fd_step: 1e-5, max_step: 5.0, initial_inverse_hessian: None }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub f: f64,
    pub gradient: DVector<f64>,
    pub inverse_hessian: DMatrix<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: FitStatus,
}

/// Central-difference gradient; coordinates are evaluated in parallel.
pub fn numerical_gradient<F>(f: &F, x: &DVector<f64>, rel_step: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
{
    let g: Vec<f64> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let h = rel_step * x[i].abs().max(1.0);
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (up[i] - dn[i])
        })
        .collect();
    DVector::from_vec(g)
}

/// Minimises `f` from `x0` by BFGS with a weak-Wolfe line search.
///
/// The returned point is never worse than `x0`.
pub fn minimize<F>(f: F, x0: DVector<f64>, opts: &BfgsOptions) -> Minimum
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
{
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let n = x0.len();
    let evals = std::sync::atomic::AtomicUsize::new(0);
    let counted = |x: &DVector<f64>| {
        evals.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        f(x)
    };
    let grad = |x: &DVector<f64>| numerical_gradient(&counted, x, opts.fd_step);

    let mut x = x0;
    let mut fx = counted(&x);
    let mut g = grad(&x);
    let mut h = opts.initial_inverse_hessian.clone().unwrap_or_else(|| DMatrix::identity(n, n));
    let rescale_first = opts.initial_inverse_hessian.is_none();
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        if !fx.is_finite() {
            status = FitStatus::LineSearchFailure;
            break;
        }
        if g.amax() < opts.grad_tol * fx.abs().max(1.0) {
            status = FitStatus::Converged;
            break;
        }
        iterations = iter + 1;
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            // Lost descent; restart from steepest descent.
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = g.dot(&d);
        }
        let cap = opts.max_step / d.amax().max(f64::MIN_POSITIVE);
        let mut alpha = if iter == 0 && rescale_first { cap.min(1.0 / g.amax().max(1.0)) } else { cap.min(1.0) };

        // Weak Wolfe by bracketing and bisection.
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut accepted = None;
        for _ in 0..40 {
            let xt = &x + &d * alpha;
            let ft = counted(&xt);
            if !(ft <= fx + C1 * alpha * slope) || !ft.is_finite() {
                hi = alpha;
            } else {
                let gt = grad(&xt);
                if gt.dot(&d) >= C2 * slope {
                    accepted = Some((xt, ft, gt));
                    break;
                }
                lo = alpha;
                if hi.is_infinite() && alpha * 2.0 > cap {
                    // Cannot extend further; take the sufficient-decrease point.
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            alpha = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * alpha };
            if hi.is_finite() && (hi - lo) * d.amax() < 1e-14 * (1.0 + x.amax()) {
                break;
            }
        }
        let Some((xn, fnew, gn)) = accepted else {
            status = FitStatus::LineSearchFailure;
            break;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if iter == 0 && rescale_first {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s (Hy)' + (Hy) s') + (rho^2 y'Hy + rho) s s'
            h.ger(-rho, &s, &hy, 1.0);
            h.ger(-rho, &hy, &s, 1.0);
            h.ger(rho * rho * yhy + rho, &s, &s, 1.0);
        }
        x = xn;
        fx = fnew;
        g = gn;
        if iter + 1 == opts.max_iter {
            status = if g.amax() < opts.grad_tol * fx.abs().max(1.0) {
                FitStatus::Converged
            } else {
                FitStatus::MaxIterations
            };
        }
    }
    if opts.max_iter == 0 && g.amax() < opts.grad_tol * fx.abs().max(1.0) {
        status = FitStatus::Converged;
    }
    Minimum {
        x,
        f: fx,
        gradient: g,
        inverse_hessian: h,
        iterations,
        evaluations: evals.into_inner(),
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratic() {
        let m = minimize(|x| (x[0] - 3.0).powi(2), DVector::from_vec(vec![0.0]), &BfgsOptions::default());
        assert_eq!(m.status, FitStatus::Converged);
        assert!((m.x[0] - 3.0).abs() < 1e-6, "{}", m.x[0]);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &DVector<f64>| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = BfgsOptions { grad_tol: 1e-9, ..BfgsOptions::default() };
        let m = minimize(f, DVector::from_vec(vec![-1.2, 1.0]), &opts);
        assert_eq!(m.status, FitStatus::Converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn ill_scaled_quadratic_and_inverse_hessian() {
        let f = |x: &DVector<f64>| 1e4 * x[0] * x[0] + 0.01 * (x[1] - 2.0).powi(2) + 1.0;
        let m = minimize(f, DVector::from_vec(vec![1.0, -1.0]), &BfgsOptions { grad_tol: 1e-10, ..Default::default() });
        assert!(m.x[0].abs() < 1e-5 && (m.x[1] - 2.0).abs() < 1e-3, "{:?}", m.x);
        assert!((m.inverse_hessian[(1, 1)] - 50.0).abs() < 5.0);
    }

    #[test]
    fn never_worse_than_start_and_honours_iteration_cap() {
        let f = |x: &DVector<f64>| (x[0] - 1.0).powi(4) + x[1].abs().sqrt();
        let x0 = DVector::from_vec(vec![5.0, 0.3]);
        let f0 = f(&x0);
        let m = minimize(f, x0, &BfgsOptions { max_iter: 3, ..Default::default() });
        assert!(m.f <= f0);
        assert!(m.iterations <= 3);
    }

    #[test]
    fn non_finite_region_is_avoided() {
        let f = |x: &DVector<f64>| if x[0] > 2.0 { f64::NAN } else { (x[0] - 1.5).powi(2) };
        let m = minimize(f, DVector::from_vec(vec![-3.0]), &BfgsOptions::default());
        assert!((m.x[0] - 1.5).abs() < 1e-5);
    }
}
