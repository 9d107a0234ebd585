//! The composite model run through the filter, compared with linear
//! oracles built independently from the model equations.

mod common;

use common::{linear_oracle, origin, params, prior, synthetic};
use nao_ssm::model::{build_model, ForcingKind, InfluenceFunction, ModelParams, StateLayout};
use nao_ssm::ssm::ekf_filter;

#[test]
fn fixed_coefficient_ekf_equals_linear_filter() {
    let layout = StateLayout::default();
    let p = params();
    let inf = InfluenceFunction::default();
    let y = synthetic(1000, 5);
    let m = build_model(layout, p, inf, origin()).unwrap();
    let oracle = linear_oracle(&layout, &p, &inf, y.len());
    let a = ekf_filter(&m, &prior(&layout), &y).unwrap();
    let b = ekf_filter(&oracle, &prior(&layout), &y).unwrap();
    assert!((a.log_likelihood - b.log_likelihood).abs() <= 1e-10 * b.log_likelihood.abs());
    for (sa, sb) in a.steps.iter().zip(&b.steps) {
        let scale = 1.0 + sb.filtered.cov.amax();
        assert!((&sa.filtered.mean - &sb.filtered.mean).amax() <= 1e-10 * (1.0 + sb.filtered.mean.amax()));
        assert!((&sa.filtered.cov - &sb.filtered.cov).amax() <= 1e-10 * scale);
    }
}

#[test]
fn pinned_forcing_matches_unforced_model() {
    let forced = StateLayout::default();
    let none = StateLayout { forcing: ForcingKind::None, ..forced };
    let p = ModelParams { w_delta: 0.0, ..params() };
    let y = synthetic(800, 9);
    let mut prior_f = prior(&forced);
    prior_f.cov[(18, 18)] = 0.0;
    let a = ekf_filter(&build_model(forced, p, InfluenceFunction::default(), origin()).unwrap(), &prior_f, &y).unwrap();
    let b = ekf_filter(&build_model(none, p, InfluenceFunction::default(), origin()).unwrap(), &prior(&none), &y).unwrap();
    assert!((a.log_likelihood - b.log_likelihood).abs() <= 1e-10 * b.log_likelihood.abs());
}

#[test]
fn delta_only_matters_inside_the_window() {
    // Two windows that agree up to day 200 give identical per-step
    // innovations before the first day on which they differ.
    let layout = StateLayout::default();
    let p = params();
    let y = synthetic(500, 2);
    let a = InfluenceFunction::new(11, 1, 165, 30).unwrap();
    let b = InfluenceFunction::new(11, 1, 120, 30).unwrap();
    let fa = ekf_filter(&build_model(layout, p, a, origin()).unwrap(), &prior(&layout), &y).unwrap();
    let fb = ekf_filter(&build_model(layout, p, b, origin()).unwrap(), &prior(&layout), &y).unwrap();
    let first_diff = (0..y.len())
        .find(|&i| {
            let d = origin() + chrono::Days::new(i as u64);
            a.at(d) != b.at(d)
        })
        .unwrap();
    for i in 0..first_diff {
        assert_eq!(fa.steps[i].innovation, fb.steps[i].innovation);
    }
    assert_ne!(fa.steps[first_diff].filtered.mean, fb.steps[first_diff].filtered.mean);
}
