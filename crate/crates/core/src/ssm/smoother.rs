use nalgebra::{Cholesky, DMatrix, Dyn};

use super::{FilterResult, GaussianState};
use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Cholesky of a predicted covariance, retrying once with a diagonal jitter
/// of `1e-12 * trace` when the first attempt fails.
pub(crate) fn factor_predicted(p: &DMatrix<f64>, step: usize) -> Result<Cholesky<f64, Dyn>> {
    if let Some(ch) = p.clone().cholesky() {
        return Ok(ch);
    }
    let n = p.nrows();
    let jitter = (1e-12 * p.trace()).max(f64::MIN_POSITIVE.sqrt());
    let mut q = p.clone();
    for i in 0..n {
        q[(i, i)] += jitter;
    }
    q.cholesky().ok_or(Error::SingularCovariance { step })
}

/// Smoother gain `J = P_{t|t} F_{t+1}' P_{t+1|t}^{-1}` for the step at
/// 0-based index `i`.
pub(crate) fn smoother_gain(filter: &FilterResult, i: usize) -> Result<DMatrix<f64>> {
    let next = &filter.steps[i + 1];
    let p_filt = &filter.steps[i].filtered.cov;
    let f = &next.jacobian;
    // J' = P_pred^{-1} F P_filt.
    let fp = f.mul_mat(p_filt);
    let ch = factor_predicted(&next.predicted.cov, i + 2)?;
    Ok(ch.solve(&fp).transpose())
}

/// Rauch-Tung-Striebel backward pass over the stored linearisations.
pub fn rts_smooth(filter: &FilterResult) -> Result<Vec<GaussianState>> {
    let n_steps = filter.steps.len();
    if n_steps == 0 {
        return Ok(Vec::new());
    }
    let mut out = vec![filter.steps[n_steps - 1].filtered.clone(); n_steps];
    for i in (0..n_steps - 1).rev() {
        let j = smoother_gain(filter, i)?;
        let filt = &filter.steps[i].filtered;
        let pred = &filter.steps[i + 1].predicted;
        let next = &out[i + 1];
        let mean = &filt.mean + &j * (&next.mean - &pred.mean);
        let mut cov = &filt.cov + &j * (&next.cov - &pred.cov) * j.transpose();
        symmetrize(&mut cov);
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: i + 1 });
        }
        out[i] = GaussianState { mean, cov };
    }
    Ok(out)
}
