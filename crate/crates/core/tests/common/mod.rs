//! Independent oracles shared by the integration suites: exact Gaussian
//! conditioning for small linear models and a hand-written linear form of
//! the fixed-coefficient composite model.
#![allow(dead_code)]

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use nao_ssm::calendar::OMEGA;
use nao_ssm::model::{build_model, default_priors, InfluenceFunction, ModelParams, StateLayout};
use nao_ssm::ssm::{simulate, GaussianState, Initial, LinearGaussianModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub model: LinearGaussianModel,
    pub prior: GaussianState,
    pub y: Vec<Option<f64>>,
}

pub fn random_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
    let mut m = &b * b.transpose();
    m = (&m + m.transpose()) * 0.5;
    m
}

pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=6);
    let steps = rng.random_range(1..=5);
    let mut model = LinearGaussianModel {
        transitions: vec![],
        noises: vec![],
        loadings: vec![],
        obs_variances: vec![],
    };
    for _ in 0..steps {
        model.transitions.push(DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.9..0.9)));
        let rank = rng.random_range(0..=n);
        model.noises.push(random_psd(n, rank, &mut rng));
        model.loadings.push(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        model.obs_variances.push(rng.random_range(0.1..2.0));
    }
    let mean = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let cov = random_psd(n, n, &mut rng) + DMatrix::identity(n, n) * 0.1;
    let prior = GaussianState::new(mean, cov).unwrap();
    let y = (0..steps)
        .map(|_| (rng.random::<f64>() > 0.2).then(|| rng.random_range(-3.0..3.0)))
        .collect();
    Case { model, prior, y }
}

/// Joint mean and covariance of `(x_0, x_1..x_T, y_1..y_T)`, built from the
/// linear map taking independent shocks to the stacked vector.
pub fn joint(case: &Case) -> (DVector<f64>, DMatrix<f64>) {
    let n = case.prior.dim();
    let t_len = case.y.len();
    let shocks = n * (t_len + 1) + t_len;
    let rows = n * (t_len + 1) + t_len;
    let mut a = DMatrix::zeros(rows, shocks);
    let mut d = DMatrix::zeros(shocks, shocks);
    let mut mu = DVector::zeros(shocks);
    a.view_mut((0, 0), (n, n)).fill_with_identity();
    d.view_mut((0, 0), (n, n)).copy_from(&case.prior.cov);
    mu.rows_mut(0, n).copy_from(&case.prior.mean);
    for t in 1..=t_len {
        let f = &case.model.transitions[t - 1];
        let prev = a.rows((t - 1) * n, n).into_owned();
        let mut cur = f * prev;
        for i in 0..n {
            cur[(i, t * n + i)] += 1.0;
        }
        a.rows_mut(t * n, n).copy_from(&cur);
        d.view_mut((t * n, t * n), (n, n)).copy_from(&case.model.noises[t - 1]);
        let h = &case.model.loadings[t - 1];
        let obs_row = n * (t_len + 1) + t - 1;
        let yrow = h.transpose() * &cur;
        a.row_mut(obs_row).copy_from(&yrow);
        a[(obs_row, obs_row)] += 1.0;
        d[(obs_row, obs_row)] = case.model.obs_variances[t - 1];
    }
    (&a * mu, &a * d * a.transpose())
}

/// Moments of the state at `step` given observations at `steps <= upto`,
/// plus the log density of those observations.
pub fn condition(case: &Case, step: usize, upto: usize) -> (DVector<f64>, DMatrix<f64>, f64) {
    let n = case.prior.dim();
    let t_len = case.y.len();
    let (m, s) = joint(case);
    let xi: Vec<usize> = (step * n..(step + 1) * n).collect();
    let obs: Vec<(usize, f64)> = (1..=upto)
        .filter_map(|t| case.y[t - 1].map(|v| (n * (t_len + 1) + t - 1, v)))
        .collect();
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| s[(r[i], c[j])]);
    let oi: Vec<usize> = obs.iter().map(|o| o.0).collect();
    if oi.is_empty() {
        return (DVector::from_fn(n, |i, _| m[xi[i]]), sub(&xi, &xi), 0.0);
    }
    let syy = sub(&oi, &oi);
    let sxy = sub(&xi, &oi);
    let e = DVector::from_fn(oi.len(), |i, _| obs[i].1 - m[oi[i]]);
    let chol = syy.clone().cholesky().unwrap();
    let mean = DVector::from_fn(n, |i, _| m[xi[i]]) + &sxy * chol.solve(&e);
    let cov = sub(&xi, &xi) - &sxy * chol.solve(&sxy.transpose());
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let ll = -0.5 * (oi.len() as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + e.dot(&chol.solve(&e)));
    (mean, cov, ll)
}

pub fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).iter().all(|v| v.abs() <= tol * (1.0 + b.amax()))
}

pub const PHI: [f64; 6] = [0.9, -0.1, 0.05, 0.0, 0.0, 0.0];

pub fn origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(1960, 1, 1).unwrap()
}

pub fn params() -> ModelParams {
    ModelParams { w_phi: 0.0, w_mu: 1e-4, w_psi: 1e-4, w_beta: 1e-8, v: 0.3, ..ModelParams::default() }
}

pub fn prior(layout: &StateLayout) -> GaussianState {
    let mut p = default_priors(layout);
    for (i, f) in PHI.iter().enumerate() {
        p.mean[layout.phi(i + 1)] = *f;
        p.var[layout.phi(i + 1)] = 0.0;
    }
    p.to_state().unwrap()
}

/// Fixed-coefficient linear form of the mean-shift model, written out from
/// the component equations.
pub fn linear_oracle(layout: &StateLayout, p: &ModelParams, influence: &InfluenceFunction, steps: usize) -> LinearGaussianModel {
    let n = layout.dim();
    let mut f = DMatrix::zeros(n, n);
    f[(0, 0)] = 1.0;
    f[(0, 1)] = 1.0;
    f[(1, 1)] = 1.0;
    for k in 1..=2 {
        let w = k as f64 * OMEGA;
        let (i, j) = (2 * k, 2 * k + 1);
        f[(i, i)] = w.cos();
        f[(i, j)] = w.sin();
        f[(j, i)] = -w.sin();
        f[(j, j)] = w.cos();
    }
    let x0 = 6;
    for (q, phi) in PHI.iter().enumerate() {
        f[(x0, x0 + q)] = *phi;
    }
    for lag in 1..6 {
        f[(x0 + lag, x0 + lag - 1)] = 1.0;
    }
    for q in 0..6 {
        f[(12 + q, 12 + q)] = 1.0;
    }
    f[(18, 18)] = p.varphi;
    let mut model = LinearGaussianModel { transitions: vec![f], noises: vec![], loadings: vec![], obs_variances: vec![p.v] };
    for t in 1..=steps {
        let mut q = DMatrix::zeros(n, n);
        q[(0, 0)] = p.w_mu;
        q[(1, 1)] = p.w_beta;
        for i in 2..6 {
            q[(i, i)] = p.w_psi;
        }
        let tt = t as f64;
        q[(x0, x0)] = p.w_x + (p.a_x * p.a_x + p.b_x * p.b_x).sqrt() + p.a_x * (OMEGA * tt).sin() + p.b_x * (OMEGA * tt).cos();
        q[(18, 18)] = p.w_delta;
        model.noises.push(q);
        let mut h = DVector::zeros(n);
        h[0] = 1.0;
        h[2] = 1.0;
        h[4] = 1.0;
        h[x0] = 1.0;
        h[18] = influence.at(origin() + chrono::Days::new(t as u64 - 1));
        model.loadings.push(h);
    }
    model
}

pub fn synthetic(steps: usize, seed: u64) -> Vec<Option<f64>> {
    let layout = StateLayout::default();
    let m = build_model(layout, params(), InfluenceFunction::default(), origin()).unwrap();
    let mut x0 = DVector::zeros(layout.dim());
    x0[0] = 6.0;
    x0[layout.psi(1)] = 2.0;
    for (i, f) in PHI.iter().enumerate() {
        x0[layout.phi(i + 1)] = *f;
    }
    let sim = simulate(&m, &Initial::Fixed(x0), steps, 1, seed).unwrap();
    sim.observations[0].iter().enumerate().map(|(i, y)| (i % 17 != 3).then_some(*y)).collect()
}

