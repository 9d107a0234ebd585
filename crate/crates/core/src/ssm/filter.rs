use nalgebra::{DMatrix, DVector};

use super::{GaussianState, ModelFunctions, SparseRows};
use crate::error::{Error, Result};

/// One step of the filter recursion.
#[derive(Debug, Clone)]
pub struct FilterStep {
    pub predicted: GaussianState,
    pub filtered: GaussianState,
    /// `y_t - h(predicted mean)`; `None` on missing days.
    pub innovation: Option<f64>,
    pub innovation_variance: Option<f64>,
    /// Transition Jacobian used for the prediction into this step.
    pub jacobian: SparseRows,
}

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub prior: GaussianState,
    pub steps: Vec<FilterStep>,
    pub log_likelihood: f64,
}

impl FilterResult {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Filtered state at step `t` (1-based); step 0 is the prior.
    pub fn filtered_at(&self, t: usize) -> &GaussianState {
        if t == 0 {
            &self.prior
        } else {
            &self.steps[t - 1].filtered
        }
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Shared recursion. `sink` sees every completed step.
fn run(
    model: &dyn ModelFunctions,
    prior: &GaussianState,
    observations: &[Option<f64>],
    mut sink: impl FnMut(FilterStep),
    keep: bool,
) -> Result<f64> {
    let n = model.dim();
    if prior.dim() != n {
        return Err(Error::Dimension(format!(
            "prior has dimension {}, model {}",
            prior.dim(),
            n
        )));
    }
    let mut x = prior.mean.clone();
    let mut p = prior.cov.clone();
    let mut p_next = DMatrix::zeros(n, n);
    let mut work = DMatrix::zeros(n, n);
    let mut ph = DVector::zeros(n);
    let mut loglik = 0.0;
    for (i, y) in observations.iter().enumerate() {
        let t = i + 1;
        let tr = model.transition(t, &x);
        if tr.mean.len() != n || tr.jacobian.dim() != n || !tr.jacobian.is_complete() || tr.noise.dim() != n {
            return Err(Error::Dimension(format!("transition output at step {t}")));
        }
        tr.jacobian.sandwich_into(&p, &mut work, &mut p_next);
        tr.noise.add_to(&mut p_next);
        x = tr.mean;
        // A covariance is bounded by its diagonal, so checking the diagonal
        // catches overflow anywhere in the matrix.
        if x.iter().any(|v| !v.is_finite()) || (0..n).any(|i| !p_next[(i, i)].is_finite()) {
            return Err(Error::Divergence { step: t });
        }
        let predicted = keep.then(|| GaussianState { mean: x.clone(), cov: p_next.clone() });
        let mut innovation = None;
        let mut innovation_variance = None;
        if let Some(y) = *y {
            let ob = model.observation(t, &x);
            if ob.gradient.len() != n {
                return Err(Error::Dimension(format!("observation gradient at step {t}")));
            }
            ph.fill(0.0);
            for (j, g) in ob.gradient.iter().enumerate() {
                if *g != 0.0 {
                    ph.axpy(*g, &p_next.column(j), 1.0);
                }
            }
            let s = ob.gradient.dot(&ph) + ob.variance;
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::NonPositiveInnovation { step: t, variance: s });
            }
            let e = y - ob.mean;
            x.axpy(e / s, &ph, 1.0);
            // P - (P h)(P h)' / s on the lower triangle, mirrored so the
            // result stays exactly symmetric.
            let ps = p_next.as_mut_slice();
            let phs = ph.as_slice();
            for c in 0..n {
                let a = phs[c] / s;
                if a != 0.0 {
                    for (pr, hr) in ps[c * n + c..(c + 1) * n].iter_mut().zip(&phs[c..]) {
                        *pr -= hr * a;
                    }
                }
                ps[c * n + c] = ps[c * n + c].max(0.0);
            }
            for c in 0..n {
                for r in c + 1..n {
                    ps[r * n + c] = ps[c * n + r];
                }
            }
            loglik += -0.5 * (LN_2PI + s.ln() + e * e / s);
            innovation = Some(e);
            innovation_variance = Some(s);
        }
        if x.iter().any(|v| !v.is_finite()) || !loglik.is_finite() {
            return Err(Error::Divergence { step: t });
        }
        std::mem::swap(&mut p, &mut p_next);
        if let Some(predicted) = predicted {
            sink(FilterStep {
                predicted,
                filtered: GaussianState { mean: x.clone(), cov: p.clone() },
                innovation,
                innovation_variance,
                jacobian: tr.jacobian,
            });
        }
    }
    Ok(loglik)
}

/// Extended Kalman filter over the observation sequence, keeping every
/// predicted and filtered state. Missing observations only predict and
/// contribute nothing to the log-likelihood.
pub fn ekf_filter(
    model: &dyn ModelFunctions,
    prior: &GaussianState,
    observations: &[Option<f64>],
) -> Result<FilterResult> {
    let mut steps = Vec::with_capacity(observations.len());
    let log_likelihood = run(model, prior, observations, |s| steps.push(s), true)?;
    Ok(FilterResult { prior: prior.clone(), steps, log_likelihood })
}

/// Prediction-error log-likelihood only, without storing states.
pub fn ekf_loglik(
    model: &dyn ModelFunctions,
    prior: &GaussianState,
    observations: &[Option<f64>],
) -> Result<f64> {
    run(model, prior, observations, |_| {}, false)
}

/// Filtered states after the steps in `at` (1-based, ascending; 0 gives
/// the prior), from a single pass over the observations up to the last of
/// them.
pub fn ekf_filtered_at(
    model: &dyn ModelFunctions,
    prior: &GaussianState,
    observations: &[Option<f64>],
    at: &[usize],
) -> Result<Vec<GaussianState>> {
    if at.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("steps must be ascending".into()));
    }
    let last = at.last().copied().unwrap_or(0);
    if last > observations.len() {
        return Err(Error::InvalidArgument(format!(
            "step {last} is beyond the {} observations",
            observations.len()
        )));
    }
    let mut out: Vec<GaussianState> = at.iter().take_while(|&&t| t == 0).map(|_| prior.clone()).collect();
    let mut t = 0;
    run(
        model,
        prior,
        &observations[..last],
        |step| {
            t += 1;
            while out.len() < at.len() && at[out.len()] == t {
                out.push(step.filtered.clone());
            }
        },
        true,
    )?;
    Ok(out)
}
