//! The composite model: slowly varying mean with local trend, stochastic
//! harmonics, a time-varying autoregressive weather process and a forced
//! component gated by an [`InfluenceFunction`].

mod config;
mod influence;

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use nalgebra::DVector;

pub use config::ModelConfig;
pub use influence::InfluenceFunction;

use crate::calendar::OMEGA;
use crate::error::{Error, Result};
use crate::ssm::{GaussianState, ModelFunctions, Observation, ProcessNoise, SparseRows, Transition};

/// How the forced component enters the observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForcingKind {
    None,
    /// `λ_t δ_t` shifts the mean.
    MeanShift,
    /// `λ_t Σ_p δ_p X_{t-p}` changes the day-to-day persistence.
    AcShift,
}

impl ForcingKind {
    pub const ALL: [ForcingKind; 3] = [ForcingKind::None, ForcingKind::MeanShift, ForcingKind::AcShift];
}

impl fmt::Display for ForcingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForcingKind::None => "none",
            ForcingKind::MeanShift => "mean-shift",
            ForcingKind::AcShift => "ac-shift",
        })
    }
}

impl FromStr for ForcingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(ForcingKind::None),
            "mean-shift" => Ok(ForcingKind::MeanShift),
            "ac-shift" => Ok(ForcingKind::AcShift),
            other => Err(Error::InvalidArgument(format!(
                "unknown forcing kind '{other}' (expected none, mean-shift or ac-shift)"
            ))),
        }
    }
}

/// Coordinate map of the state vector:
/// `μ, β, (ψ_k, ψ*_k)_{k=1..K}, X_t..X_{t-P+1}, φ_1..φ_P, δ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateLayout {
    pub harmonics: usize,
    pub order: usize,
    pub forcing: ForcingKind,
}

impl Default for StateLayout {
    fn default() -> Self {
        Self { harmonics: 2, order: 6, forcing: ForcingKind::MeanShift }
    }
}

impl StateLayout {
    pub const MU: usize = 0;
    pub const BETA: usize = 1;

    pub fn new(harmonics: usize, order: usize, forcing: ForcingKind) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("autoregressive order must be at least 1".into()));
        }
        Ok(Self { harmonics, order, forcing })
    }

    /// Number of forcing coordinates.
    pub fn forcing_dim(&self) -> usize {
        match self.forcing {
            ForcingKind::None => 0,
            ForcingKind::MeanShift => 1,
            ForcingKind::AcShift => self.order,
        }
    }

    pub fn dim(&self) -> usize {
        2 + 2 * self.harmonics + 2 * self.order + self.forcing_dim()
    }

    /// `ψ` of harmonic `k` (1-based).
    pub fn psi(&self, k: usize) -> usize {
        2 * k
    }

    /// `ψ*` of harmonic `k` (1-based).
    pub fn psi_star(&self, k: usize) -> usize {
        2 * k + 1
    }

    /// `X_{t-lag}`, `lag` in `0..P`.
    pub fn x(&self, lag: usize) -> usize {
        2 + 2 * self.harmonics + lag
    }

    /// `φ_p`, `p` in `1..=P`.
    pub fn phi(&self, p: usize) -> usize {
        2 + 2 * self.harmonics + self.order + p - 1
    }

    /// Forcing coordinate `i` (0-based).
    pub fn delta(&self, i: usize) -> usize {
        2 + 2 * self.harmonics + 2 * self.order + i
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = vec!["mu".to_string(), "beta".to_string()];
        for k in 1..=self.harmonics {
            out.push(format!("psi{k}"));
            out.push(format!("psi{k}_star"));
        }
        out.push("x".to_string());
        out.extend((1..self.order).map(|l| format!("x_lag{l}")));
        out.extend((1..=self.order).map(|p| format!("phi{p}")));
        match self.forcing {
            ForcingKind::None => {}
            ForcingKind::MeanShift => out.push("delta".to_string()),
            ForcingKind::AcShift => out.extend((1..=self.order).map(|p| format!("delta{p}"))),
        }
        out
    }
}

/// Variance and forcing parameters. Variances are in hPa² per day except
/// `w_beta` ((hPa/day)²) and `w_phi` (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub v: f64,
    pub w_mu: f64,
    pub w_psi: f64,
    pub w_beta: f64,
    pub w_x: f64,
    pub a_x: f64,
    pub b_x: f64,
    pub w_phi: f64,
    pub w_delta: f64,
    pub varphi: f64,
}

impl Default for ModelParams {
    /// Maximum likelihood estimates for the daily NAO index.
    fn default() -> Self {
        Self {
            v: 2.5e-5,
            w_mu: 3.5e-8,
            w_psi: 3.5e-8,
            w_beta: 2.8e-12,
            w_x: 2.39,
            a_x: 0.39,
            b_x: 1.64,
            w_phi: 6.1e-12,
            w_delta: 0.13,
            varphi: 0.995,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let variances = [
            ("V", self.v),
            ("W_mu", self.w_mu),
            ("W_psi", self.w_psi),
            ("W_beta", self.w_beta),
            ("W_phi", self.w_phi),
            ("W_delta", self.w_delta),
        ];
        for (name, v) in variances {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite variance >= 0, got {v}")));
            }
        }
        if !(self.w_x >= 0.0 && self.w_x.is_finite()) {
            return Err(Error::InvalidArgument(format!("W_X must be a finite variance >= 0, got {}", self.w_x)));
        }
        if !(self.a_x.is_finite() && self.b_x.is_finite()) {
            return Err(Error::InvalidArgument("a_X and b_X must be finite".into()));
        }
        if !(self.varphi > 0.0 && self.varphi < 1.0) {
            return Err(Error::InvalidArgument(format!("varphi must lie in (0, 1), got {}", self.varphi)));
        }
        Ok(())
    }

    /// Weather innovation variance on day index `t`.
    pub fn seasonal_variance(&self, t: f64) -> f64 {
        seasonal_variance(self, t)
    }
}

/// `W_X + sqrt(a² + b²) + a sin ωt + b cos ωt`, never below `W_X`.
pub fn seasonal_variance(params: &ModelParams, t: f64) -> f64 {
    let (s, c) = (OMEGA * t).sin_cos();
    params.w_x + params.a_x.hypot(params.b_x) + params.a_x * s + params.b_x * c
}

/// Initial-state prior: independent normal per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePriors {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl StatePriors {
    pub fn to_state(&self) -> Result<GaussianState> {
        if self.var.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("prior variances must be non-negative".into()));
        }
        GaussianState::diagonal(&self.mean, &self.var)
    }
}

/// Default initial-state prior for `layout`.
pub fn default_priors(layout: &StateLayout) -> StatePriors {
    let n = layout.dim();
    let mut mean = vec![0.0; n];
    let mut var = vec![0.0; n];
    mean[StateLayout::MU] = 6.0;
    var[StateLayout::MU] = 4.0;
    var[StateLayout::BETA] = 0.002 * 0.002;
    for k in 1..=layout.harmonics {
        let v = if k == 1 { 9.0 } else { 4.0 };
        var[layout.psi(k)] = v;
        var[layout.psi_star(k)] = v;
    }
    for lag in 0..layout.order {
        var[layout.x(lag)] = 100.0;
    }
    for p in 1..=layout.order {
        var[layout.phi(p)] = 1.0;
    }
    let dv = match layout.forcing {
        ForcingKind::AcShift => 0.04,
        _ => 25.0,
    };
    for i in 0..layout.forcing_dim() {
        var[layout.delta(i)] = dv;
    }
    StatePriors { mean, var }
}

/// The model on a daily calendar: step `t` (1-based) falls on
/// `origin + (t - 1)` days. The seasonal variance counts days from
/// 1 January of the origin year, so fitted `a_X`, `b_X` keep their meaning
/// when the data are trimmed by whole years.
#[derive(Debug, Clone)]
pub struct NaoModel {
    layout: StateLayout,
    params: ModelParams,
    influence: InfluenceFunction,
    origin: NaiveDate,
    phase: f64,
    rotations: Vec<(f64, f64)>,
}

/// Assembles the model. `origin` is the date of step 1.
pub fn build_model(
    layout: StateLayout,
    params: ModelParams,
    influence: InfluenceFunction,
    origin: NaiveDate,
) -> Result<NaoModel> {
    params.validate()?;
    if layout.order == 0 {
        return Err(Error::Dimension("autoregressive order must be at least 1".into()));
    }
    let rotations = (1..=layout.harmonics)
        .map(|k| {
            let (s, c) = (k as f64 * OMEGA).sin_cos();
            (c, s)
        })
        .collect();
    Ok(NaoModel {
        layout,
        params,
        influence,
        origin,
        phase: origin.ordinal0() as f64,
        rotations,
    })
}

impl NaoModel {
    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn influence(&self) -> &InfluenceFunction {
        &self.influence
    }

    pub fn origin(&self) -> NaiveDate {
        self.origin
    }

    pub fn date(&self, t: usize) -> NaiveDate {
        self.origin + Days::new(t.saturating_sub(1) as u64)
    }

    /// Step whose date is `date`; `None` before the origin.
    pub fn step_of(&self, date: NaiveDate) -> Option<usize> {
        let d = (date - self.origin).num_days();
        (d >= 0).then_some(d as usize + 1)
    }

    /// Influence on step `t`; zero for a model without forcing.
    pub fn lambda(&self, t: usize) -> f64 {
        if self.layout.forcing == ForcingKind::None {
            return 0.0;
        }
        self.influence.at(self.date(t))
    }

    /// Weather innovation variance on step `t`. Day index 1 is 1 January of
    /// the origin year.
    pub fn weather_variance(&self, t: usize) -> f64 {
        seasonal_variance(&self.params, self.phase + t as f64)
    }

    /// Forced component `Z_t` of the observation for state `x` on step `t`.
    pub fn forced(&self, t: usize, x: &[f64]) -> f64 {
        let l = &self.layout;
        match l.forcing {
            ForcingKind::None => 0.0,
            ForcingKind::MeanShift => self.lambda(t) * x[l.delta(0)],
            ForcingKind::AcShift => {
                let lambda = self.lambda(t);
                if lambda == 0.0 {
                    return 0.0;
                }
                // δ_p multiplies X_{t-p}; the state holds lags up to P-1, so
                // δ_P has no partner and never reaches the observation.
                lambda * (1..l.order).map(|p| x[l.delta(p - 1)] * x[l.x(p)]).sum::<f64>()
            }
        }
    }

    /// `μ + Σψ_k`.
    pub fn mean_component(&self, x: &[f64]) -> f64 {
        x[StateLayout::MU] + self.seasonal_component(x)
    }

    /// `Σψ_k`.
    pub fn seasonal_component(&self, x: &[f64]) -> f64 {
        (1..=self.layout.harmonics).map(|k| x[self.layout.psi(k)]).sum()
    }

    fn step_mean(&self, x: &DVector<f64>) -> DVector<f64> {
        let l = &self.layout;
        let mut m = x.clone();
        m[StateLayout::MU] = x[StateLayout::MU] + x[StateLayout::BETA];
        for (k, &(c, s)) in (1..).zip(&self.rotations) {
            let (a, b) = (x[l.psi(k)], x[l.psi_star(k)]);
            m[l.psi(k)] = a * c + b * s;
            m[l.psi_star(k)] = b * c - a * s;
        }
        let new_x: f64 = (1..=l.order).map(|p| x[l.phi(p)] * x[l.x(p - 1)]).sum();
        for lag in (1..l.order).rev() {
            m[l.x(lag)] = x[l.x(lag - 1)];
        }
        m[l.x(0)] = new_x;
        for i in 0..l.forcing_dim() {
            m[l.delta(i)] = self.params.varphi * x[l.delta(i)];
        }
        m
    }
}

impl ModelFunctions for NaoModel {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn transition(&self, t: usize, x: &DVector<f64>) -> Transition {
        let l = &self.layout;
        let n = l.dim();
        let mut jac = SparseRows::builder(n, 2 * n + 2 * l.order);
        jac.push(StateLayout::MU, 1.0);
        jac.push(StateLayout::BETA, 1.0);
        jac.end_row();
        jac.push(StateLayout::BETA, 1.0);
        jac.end_row();
        for (k, &(c, s)) in (1..).zip(&self.rotations) {
            let (i, j) = (l.psi(k), l.psi_star(k));
            jac.push(i, c);
            jac.push(j, s);
            jac.end_row();
            jac.push(i, -s);
            jac.push(j, c);
            jac.end_row();
        }
        for q in 1..=l.order {
            jac.push(l.x(q - 1), x[l.phi(q)]);
        }
        for q in 1..=l.order {
            jac.push(l.phi(q), x[l.x(q - 1)]);
        }
        jac.end_row();
        for lag in 1..l.order {
            jac.push(l.x(lag - 1), 1.0);
            jac.end_row();
        }
        for q in 1..=l.order {
            jac.push(l.phi(q), 1.0);
            jac.end_row();
        }
        for i in 0..l.forcing_dim() {
            jac.push(l.delta(i), self.params.varphi);
            jac.end_row();
        }
        Transition { mean: self.step_mean(x), jacobian: jac, noise: self.noise(t, x) }
    }

    fn noise(&self, t: usize, _x: &DVector<f64>) -> ProcessNoise {
        let l = &self.layout;
        let p = &self.params;
        let mut q = DVector::zeros(l.dim());
        q[StateLayout::MU] = p.w_mu;
        q[StateLayout::BETA] = p.w_beta;
        for k in 1..=l.harmonics {
            q[l.psi(k)] = p.w_psi;
            q[l.psi_star(k)] = p.w_psi;
        }
        q[l.x(0)] = self.weather_variance(t);
        for r in 1..=l.order {
            q[l.phi(r)] = p.w_phi;
        }
        for i in 0..l.forcing_dim() {
            q[l.delta(i)] = p.w_delta;
        }
        ProcessNoise::Diagonal(q)
    }

    fn observation_variance(&self, _t: usize, _x: &DVector<f64>) -> f64 {
        self.params.v
    }

    fn observation(&self, t: usize, x: &DVector<f64>) -> Observation {
        let l = &self.layout;
        let n = l.dim();
        let mut g = DVector::zeros(n);
        g[StateLayout::MU] = 1.0;
        for k in 1..=l.harmonics {
            g[l.psi(k)] = 1.0;
        }
        g[l.x(0)] = 1.0;
        let lambda = self.lambda(t);
        let mut forced = 0.0;
        match l.forcing {
            ForcingKind::None => {}
            ForcingKind::MeanShift => {
                g[l.delta(0)] = lambda;
                forced = lambda * x[l.delta(0)];
            }
            ForcingKind::AcShift => {
                for p in 1..l.order {
                    g[l.x(p)] += lambda * x[l.delta(p - 1)];
                    g[l.delta(p - 1)] = lambda * x[l.x(p)];
                    forced += lambda * x[l.delta(p - 1)] * x[l.x(p)];
                }
            }
        }
        let mean = x[StateLayout::MU] + self.seasonal_component(x.as_slice()) + x[l.x(0)] + forced;
        Observation { mean, gradient: g, variance: self.params.v }
    }

    fn propagate(&self, _t: usize, x: &DVector<f64>) -> DVector<f64> {
        self.step_mean(x)
    }

    fn observe(&self, t: usize, x: &DVector<f64>) -> f64 {
        let s = x.as_slice();
        x[StateLayout::MU] + self.seasonal_component(s) + x[self.layout.x(0)] + self.forced(t, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn origin() -> NaiveDate {
        NaiveDate::from_ymd_opt(1950, 1, 1).unwrap()
    }

    fn model(forcing: ForcingKind, influence: InfluenceFunction) -> NaoModel {
        let layout = StateLayout::new(2, 6, forcing).unwrap();
        build_model(layout, ModelParams::default(), influence, origin()).unwrap()
    }

    #[test]
    fn seasonal_variance_examples() {
        let flat = ModelParams { a_x: 0.0, b_x: 0.0, ..ModelParams::default() };
        assert_eq!(seasonal_variance(&flat, 17.0), flat.w_x);
        let p = ModelParams::default();
        let vals: Vec<f64> = (0..36525).map(|i| seasonal_variance(&p, i as f64 * 0.01)).collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(min >= p.w_x - 1e-12 && min < p.w_x + 1e-6);
        assert!((max - 5.761).abs() < 1e-3, "{max}");
    }

    #[test]
    fn layout_dimensions_and_labels() {
        assert_eq!(StateLayout::default().dim(), 19);
        let ac = StateLayout::new(2, 6, ForcingKind::AcShift).unwrap();
        assert_eq!(ac.dim(), 24);
        assert_eq!(ac.labels().len(), 24);
        assert_eq!(ac.labels()[ac.phi(1)], "phi1");
        assert_eq!(ac.labels()[ac.delta(5)], "delta6");
        assert!(StateLayout::new(2, 0, ForcingKind::None).is_err());
    }

    #[test]
    fn default_prior_values() {
        let l = StateLayout::default();
        let p = default_priors(&l);
        assert_eq!(p.var[l.delta(0)], 25.0);
        assert_eq!(p.var[l.x(3)], 100.0);
        assert_eq!((p.mean[0], p.var[0]), (6.0, 4.0));
        assert_eq!(p.var[l.psi(1)], 9.0);
        assert_eq!(p.var[l.psi_star(2)], 4.0);
        let ac = StateLayout::new(2, 6, ForcingKind::AcShift).unwrap();
        let pa = default_priors(&ac);
        assert!((0..6).all(|i| pa.var[ac.delta(i)] == 0.04));
    }

    #[test]
    fn ar_row_and_jacobian_entries() {
        let m = model(ForcingKind::MeanShift, InfluenceFunction::default());
        let l = *m.layout();
        let mut x = DVector::zeros(l.dim());
        x[l.phi(1)] = 0.5;
        x[l.x(0)] = 2.0;
        let tr = m.transition(1, &x);
        assert_eq!(tr.mean[l.x(0)], 1.0);
        assert_eq!(tr.mean[l.x(1)], 2.0);
        let jac = tr.jacobian.to_dense();
        assert_eq!(jac[(l.x(0), l.x(0))], 0.5);
        assert_eq!(jac[(l.x(0), l.phi(1))], 2.0);
    }

    #[test]
    fn harmonic_pair_rotates() {
        let m = model(ForcingKind::None, InfluenceFunction::default());
        let l = *m.layout();
        let mut x = DVector::zeros(l.dim());
        x[l.psi(1)] = 3.0;
        let y = m.propagate(1, &x);
        assert!((y[l.psi(1)] - 3.0 * OMEGA.cos()).abs() < 1e-15);
        assert!((y[l.psi_star(1)] + 3.0 * OMEGA.sin()).abs() < 1e-15);
        assert!((y[l.psi(1)].hypot(y[l.psi_star(1)]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_window_leaves_delta_unobserved() {
        let m = model(ForcingKind::MeanShift, InfluenceFunction::never());
        let l = *m.layout();
        let x = DVector::from_element(l.dim(), 1.0);
        assert_eq!(m.observation(40, &x).gradient[l.delta(0)], 0.0);
        let ac = model(ForcingKind::AcShift, InfluenceFunction::never());
        let x = DVector::from_element(ac.dim(), 1.0);
        let g = ac.observation(40, &x).gradient;
        assert!((0..6).all(|i| g[ac.layout().delta(i)] == 0.0));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for forcing in ForcingKind::ALL {
            let m = model(forcing, InfluenceFunction::default());
            let n = m.dim();
            let x = DVector::from_fn(n, |i, _| ((i * 37 % 11) as f64 - 5.0) / 7.0);
            // 20 Jan lies on the plateau
            let t = 20;
            let tr = m.transition(t, &x);
            let jac = tr.jacobian.to_dense();
            let ob = m.observation(t, &x);
            assert_eq!(ob.mean, m.observe(t, &x));
            for j in 0..n {
                let h = 1e-6;
                let mut up = x.clone();
                let mut dn = x.clone();
                up[j] += h;
                dn[j] -= h;
                let col = (m.propagate(t, &up) - m.propagate(t, &dn)) / (2.0 * h);
                assert!((col - jac.column(j)).amax() < 1e-8, "{forcing} column {j}");
                let g = (m.observe(t, &up) - m.observe(t, &dn)) / (2.0 * h);
                assert!((g - ob.gradient[j]).abs() < 1e-8, "{forcing} gradient {j}");
            }
            assert!((tr.mean.clone() - m.propagate(t, &x)).amax() == 0.0);
            assert!(matches!(tr.noise, ProcessNoise::Diagonal(_)));
        }
    }

    #[test]
    fn ac_shift_pairs_delta_with_lags() {
        let m = model(ForcingKind::AcShift, InfluenceFunction::default());
        let l = *m.layout();
        let mut x = DVector::zeros(l.dim());
        x[l.delta(0)] = 0.3;
        x[l.x(1)] = 2.0;
        x[l.delta(5)] = 100.0;
        assert!((m.forced(20, x.as_slice()) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn noiseless_path_keeps_amplitude_and_linear_trend() {
        let params = ModelParams {
            v: 0.0, w_mu: 0.0, w_psi: 0.0, w_beta: 0.0, w_x: 1.0, a_x: 0.0, b_x: 0.0,
            w_phi: 0.0, w_delta: 0.0, varphi: 0.5,
        };
        let layout = StateLayout::new(2, 3, ForcingKind::None).unwrap();
        let m = build_model(layout, params, InfluenceFunction::never(), origin()).unwrap();
        let mut x = DVector::zeros(layout.dim());
        x[0] = 5.0;
        x[1] = 0.01;
        x[layout.psi(1)] = 3.0;
        x[layout.psi_star(2)] = -1.5;
        x[layout.phi(1)] = 0.6;
        x[layout.x(0)] = 1.0;
        for t in 1..=10_000 {
            x = m.propagate(t, &x);
        }
        assert!((x[layout.psi(1)].hypot(x[layout.psi_star(1)]) - 3.0).abs() < 1e-9);
        assert!((x[layout.psi(2)].hypot(x[layout.psi_star(2)]) - 1.5).abs() < 1e-9);
        assert!((x[0] - (5.0 + 0.01 * 10_000.0)).abs() < 1e-9);
        assert!(x[layout.x(0)].abs() < 1e-12);
    }

    #[test]
    fn weather_variance_is_phased_by_calendar() {
        let p = ModelParams::default();
        let layout = StateLayout::default();
        let jan = build_model(layout, p, InfluenceFunction::default(), origin()).unwrap();
        let mar = build_model(layout, p, InfluenceFunction::default(), NaiveDate::from_ymd_opt(1950, 3, 1).unwrap()).unwrap();
        assert_eq!(jan.weather_variance(60), mar.weather_variance(1));
        assert_eq!(jan.weather_variance(1), seasonal_variance(&p, 1.0));
        assert_eq!(jan.step_of(NaiveDate::from_ymd_opt(1950, 1, 31).unwrap()), Some(31));
        assert_eq!(jan.date(31), NaiveDate::from_ymd_opt(1950, 1, 31).unwrap());
    }

    #[test]
    fn parameter_validation() {
        let good = ModelParams::default();
        assert!(good.validate().is_ok());
        assert!(ModelParams { varphi: 1.0, ..good }.validate().is_err());
        assert!(ModelParams { w_x: 0.0, ..good }.validate().is_ok());
        assert!(ModelParams { w_x: -1.0, ..good }.validate().is_err());
        assert!(ModelParams { v: -1e-9, ..good }.validate().is_err());
        assert!(ModelParams { w_delta: f64::NAN, ..good }.validate().is_err());
    }

    proptest! {
        #[test]
        fn dimension_formula(k in 0usize..5, p in 1usize..10, kind in 0usize..3) {
            let forcing = ForcingKind::ALL[kind];
            let l = StateLayout::new(k, p, forcing).unwrap();
            let d = [0, 1, p][kind];
            prop_assert_eq!(l.dim(), 2 + 2 * k + 2 * p + d);
            prop_assert_eq!(l.labels().len(), l.dim());
            let mut coords = vec![StateLayout::MU, StateLayout::BETA];
            coords.extend((1..=k).flat_map(|j| [l.psi(j), l.psi_star(j)]));
            coords.extend((0..p).map(|j| l.x(j)));
            coords.extend((1..=p).map(|j| l.phi(j)));
            coords.extend((0..d).map(|j| l.delta(j)));
            coords.sort_unstable();
            prop_assert_eq!(coords, (0..l.dim()).collect::<Vec<_>>());
        }
    }
}
