use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{fit_mle, fit_subset, FitOptions, FitReport, ParamTransform};
use crate::error::{Error, Result};
use crate::model::{ForcingKind, InfluenceFunction, ModelConfig, StateLayout};
use crate::timeseries::DailySeries;

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub fit: FitOptions,
    /// Forced kinds to try; the unforced reference is always fitted.
    pub kinds: Vec<ForcingKind>,
    pub family: Vec<InfluenceFunction>,
    /// When set, every forced candidate is first fitted over `W_delta` and
    /// `varphi` alone with the other parameters held at the reference
    /// estimates; only the best `n` of each kind are then fitted in full.
    pub refine: Option<usize>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            kinds: vec![ForcingKind::MeanShift, ForcingKind::AcShift],
            family: InfluenceFunction::default_family(),
            refine: None,
        }
    }
}

/// One fitted model of the grid. `influence` is `None` for the unforced
/// reference.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub kind: ForcingKind,
    pub influence: Option<InfluenceFunction>,
    pub outcome: std::result::Result<FitReport, String>,
    /// True when only the forcing parameters were fitted.
    pub screened: bool,
}

impl GridRow {
    /// BIC, or `+inf` for a failed fit.
    pub fn bic(&self) -> f64 {
        self.outcome.as_ref().map(|r| r.bic).unwrap_or(f64::INFINITY)
    }

    pub fn record(&self) -> GridRecord {
        let (loglik, k, bic, status) = match &self.outcome {
            Ok(r) if self.screened => (Some(r.log_likelihood), Some(r.k), Some(r.bic), format!("screened-{}", r.status)),
            Ok(r) => (Some(r.log_likelihood), Some(r.k), Some(r.bic), r.status.to_string()),
            Err(e) => (None, None, None, format!("failed: {e}")),
        };
        GridRecord {
            start_month: self.influence.map(|f| f.start_month),
            length_days: self.influence.map(|f| f.length),
            forcing_kind: self.kind.to_string(),
            loglik,
            k,
            bic,
            status,
        }
    }
}

/// Flat CSV form of a [`GridRow`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridRecord {
    pub start_month: Option<u32>,
    pub length_days: Option<u32>,
    pub forcing_kind: String,
    pub loglik: Option<f64>,
    pub k: Option<usize>,
    pub bic: Option<f64>,
    pub status: String,
}

/// Fits the unforced reference and every (kind, window) combination, and
/// returns all rows sorted by ascending BIC; ties keep grid order with the
/// reference first. Forced fits start from the reference estimates.
pub fn grid_search(data: &DailySeries, base: &ModelConfig, options: &GridOptions) -> Result<Vec<GridRow>> {
    if options.family.is_empty() && !options.kinds.is_empty() {
        return Err(Error::InvalidArgument("influence family is empty".into()));
    }
    if options.refine == Some(0) {
        return Err(Error::InvalidArgument("refine must keep at least one candidate".into()));
    }
    let null_cfg = base.with_layout(StateLayout { forcing: ForcingKind::None, ..base.layout });
    let null = fit_mle(&null_cfg, data, &options.fit);
    let (start_params, null_h) = match &null {
        Ok(r) => (r.config.params, Some(r.inverse_hessian.clone())),
        Err(_) => (base.params, None),
    };
    let candidate = |kind, influence| {
        let mut cfg = base.with_layout(StateLayout { forcing: kind, ..base.layout });
        cfg.influence = influence;
        cfg.params = start_params;
        cfg.params.w_delta = base.params.w_delta;
        cfg.params.varphi = base.params.varphi;
        cfg
    };
    let full_fit = |cfg: &ModelConfig| {
        let mut fit = options.fit.clone();
        if fit.bfgs.initial_inverse_hessian.is_none() {
            fit.bfgs.initial_inverse_hessian = null_h.as_ref().map(|h| warm_inverse_hessian(h, cfg));
        }
        fit_mle(cfg, data, &fit).map_err(|e| e.to_string())
    };
    let jobs: Vec<(ForcingKind, InfluenceFunction)> = options
        .kinds
        .iter()
        .flat_map(|k| options.family.iter().map(move |f| (*k, *f)))
        .collect();
    let mut forced: Vec<GridRow> = jobs
        .into_par_iter()
        .map(|(kind, influence)| {
            let cfg = candidate(kind, influence);
            let (outcome, screened) = match options.refine {
                Some(_) if null.is_ok() => {
                    (fit_subset(&cfg, data, &options.fit, &["W_delta", "varphi"]).map_err(|e| e.to_string()), true)
                }
                _ => (full_fit(&cfg), false),
            };
            GridRow { kind, influence: Some(influence), outcome, screened }
        })
        .collect();
    if let Some(keep) = options.refine {
        let mut chosen = Vec::new();
        for kind in &options.kinds {
            let mut idx: Vec<usize> = (0..forced.len()).filter(|&i| forced[i].kind == *kind && forced[i].screened).collect();
            idx.sort_by(|&a, &b| forced[a].bic().total_cmp(&forced[b].bic()));
            chosen.extend(idx.into_iter().take(keep));
        }
        let refits: Vec<(usize, std::result::Result<FitReport, String>)> = chosen
            .into_par_iter()
            .map(|i| {
                let row = &forced[i];
                let cfg = match &row.outcome {
                    // Start from the screened forcing parameters.
                    Ok(r) => r.config.clone(),
                    Err(_) => candidate(row.kind, row.influence.expect("forced rows have a window")),
                };
                (i, full_fit(&cfg))
            })
            .collect();
        for (i, outcome) in refits {
            // The full fit nests the screened one, so keep whichever is better.
            if outcome.as_ref().map_or(f64::INFINITY, |r| r.bic) <= forced[i].bic() || forced[i].outcome.is_err() {
                forced[i].outcome = outcome;
                forced[i].screened = false;
            }
        }
    }
    let mut rows = Vec::with_capacity(forced.len() + 1);
    rows.push(GridRow { kind: ForcingKind::None, influence: None, outcome: null.map_err(|e| e.to_string()), screened: false });
    rows.extend(forced);
    rows.sort_by(|a, b| a.bic().total_cmp(&b.bic()));
    Ok(rows)
}

/// Embeds the reference fit's inverse Hessian in the larger parameter
/// vector of a forced model; new coordinates get the mean reference
/// curvature scale.
fn warm_inverse_hessian(null_h: &DMatrix<f64>, cfg: &ModelConfig) -> DMatrix<f64> {
    let n = ParamTransform::for_config(cfg).arity();
    let m = null_h.nrows().min(n);
    let scale = (0..m).map(|i| null_h[(i, i)].abs()).sum::<f64>() / m.max(1) as f64;
    let mut h = DMatrix::identity(n, n) * if scale > 0.0 { scale } else { 1.0 };
    h.view_mut((0, 0), (m, m)).copy_from(&null_h.view((0, 0), (m, m)));
    h
}

pub fn write_grid_csv(rows: &[GridRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in rows {
        w.serialize(r.record()).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

pub fn read_grid_csv(path: impl AsRef<Path>) -> Result<Vec<GridRecord>> {
    let path = path.as_ref();
    let wrap = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.deserialize().map(|rec| rec.map_err(wrap)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip_through_csv() {
        let rows = vec![
            GridRow { kind: ForcingKind::None, influence: None, outcome: Err("boom".into()), screened: false },
            GridRow {
                kind: ForcingKind::MeanShift,
                influence: Some(InfluenceFunction::default()),
                outcome: Err("bad".into()),
                screened: true,
            },
        ];
        let file = tempfile::NamedTempFile::new().unwrap();
        write_grid_csv(&rows, file.path()).unwrap();
        let back = read_grid_csv(file.path()).unwrap();
        assert_eq!(back, rows.iter().map(|r| r.record()).collect::<Vec<_>>());
        let text = std::fs::read_to_string(file.path()).unwrap();
        assert!(text.starts_with("start_month,length_days,forcing_kind,loglik,k,bic,status\n"));
    }

    #[test]
    fn warm_start_embeds_reference_block() {
        let h = DMatrix::from_fn(7, 7, |i, j| if i == j { 2.0 } else { 0.1 });
        let cfg = ModelConfig::default();
        let w = warm_inverse_hessian(&h, &cfg);
        assert_eq!(w.shape(), (9, 9));
        assert_eq!(w[(0, 1)], 0.1);
        assert_eq!(w[(8, 8)], 2.0);
        assert_eq!(w[(7, 0)], 0.0);
    }
}
