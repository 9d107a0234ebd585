//! Maximum-likelihood fitting and grid selection on short simulated records.

use chrono::NaiveDate;
use nalgebra::DVector;
use nao_ssm::estimation::{bic, fit_mle, fit_subset, grid_search, FitOptions, GridOptions, Objective};
use nao_ssm::model::{ForcingKind, InfluenceFunction, ModelConfig, ModelParams, StateLayout};
use nao_ssm::ssm::{simulate, Initial};
use nao_ssm::DailySeries;

fn origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

fn data(cfg: &ModelConfig, years: usize, seed: u64) -> DailySeries {
    let l = cfg.layout;
    let mut x0 = DVector::zeros(l.dim());
    x0[0] = 6.0;
    x0[l.psi(1)] = 3.0;
    for (i, f) in [0.9, -0.1, 0.05].iter().enumerate() {
        x0[l.phi(i + 1)] = *f;
    }
    let model = cfg.build(origin()).unwrap();
    let sim = simulate(&model, &Initial::Fixed(x0), years * 365, 1, seed).unwrap();
    DailySeries::from_values(origin(), sim.observations[0].clone()).unwrap()
}

fn start(layout: StateLayout) -> ModelConfig {
    let mut cfg = ModelConfig::for_layout(layout);
    cfg.params = ModelParams {
        v: 1.0,
        w_mu: 1e-6,
        w_psi: 1e-6,
        w_beta: 1e-10,
        w_x: 1.0,
        a_x: 0.0,
        b_x: 0.0,
        w_phi: 1e-8,
        ..ModelParams::default()
    };
    cfg
}

#[test]
fn report_is_consistent_with_the_likelihood() {
    let truth = ModelConfig::for_layout(StateLayout { forcing: ForcingKind::None, ..StateLayout::default() });
    let y = data(&truth, 4, 3);
    let cfg = start(truth.layout);
    let r = fit_mle(&cfg, &y, &FitOptions::default()).unwrap();
    assert_eq!(r.k, 7);
    assert_eq!(r.n, y.observed_count());
    assert_eq!(r.bic, bic(r.k, r.n, r.log_likelihood));
    let again = Objective::new(&r.config, &y).unwrap().loglik(&r.config.params).unwrap();
    assert!((again - r.log_likelihood).abs() < 1e-9 * again.abs());
    let at_start = Objective::new(&cfg, &y).unwrap().loglik(&cfg.params).unwrap();
    assert!(r.log_likelihood >= at_start);
    // The fitted W_X should be of the simulated size.
    assert!((r.config.params.w_x.log10() - truth.params.w_x.log10()).abs() < 0.5, "{:?}", r.config.params);
}

#[test]
fn subset_fit_holds_the_other_parameters() {
    let truth = ModelConfig::default();
    let y = data(&truth, 3, 8);
    let mut cfg = ModelConfig::default();
    cfg.params.w_delta = 0.05;
    cfg.params.varphi = 0.9;
    let r = fit_subset(&cfg, &y, &FitOptions::default(), &["W_delta", "varphi"]).unwrap();
    let (a, b) = (r.config.params, cfg.params);
    assert_eq!((a.v, a.w_mu, a.w_x, a.a_x, a.b_x, a.w_phi), (b.v, b.w_mu, b.w_x, b.a_x, b.b_x, b.w_phi));
    assert!(a.w_delta != b.w_delta || a.varphi != b.varphi);
    assert_eq!(r.k, 9);
    assert_eq!(r.bic, bic(9, r.n, r.log_likelihood));
    assert!(fit_subset(&cfg, &y, &FitOptions::default(), &["W_nothing"]).is_err());
}

#[test]
fn screened_grid_refits_the_leaders() {
    let mut truth = ModelConfig::default();
    truth.influence = InfluenceFunction::new(11, 1, 150, 30).unwrap();
    let y = data(&truth, 4, 21);
    let base = start(StateLayout::default());
    let family = vec![
        InfluenceFunction::new(11, 1, 150, 30).unwrap(),
        InfluenceFunction::new(5, 1, 150, 30).unwrap(),
        InfluenceFunction::new(8, 1, 90, 30).unwrap(),
    ];
    let opts = GridOptions { kinds: vec![ForcingKind::MeanShift], family, refine: Some(1), ..GridOptions::default() };
    let rows = grid_search(&y, &base, &opts).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[0].bic() <= w[1].bic()));
    assert_eq!(rows.iter().filter(|r| r.influence.is_none()).count(), 1);
    let full: Vec<_> = rows.iter().filter(|r| r.influence.is_some() && !r.screened).collect();
    assert!(full.len() <= 1);
    for r in rows.iter().filter(|r| r.screened) {
        assert!(r.record().status.starts_with("screened-"));
    }
}
