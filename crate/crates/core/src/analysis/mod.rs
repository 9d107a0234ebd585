//! Summaries of sampled trajectory ensembles: additive decomposition of
//! the observations, seasonal analysis of variance, per-year attribution,
//! slowly varying component tracks, within-winter forcing evolution and
//! posterior predictive checks.
//!
//! Long records with many members do not fit in memory as a full ensemble,
//! so every summary here is an accumulator fed one trajectory at a time;
//! the ensemble-level functions are thin loops over those.

mod anova;
mod check;
mod tracks;

pub use anova::{
    anova, attribute_years, read_anova_csv, read_attribution_csv, write_anova_csv, write_attribution_csv,
    AnovaRecord, AnovaRow, AnovaTerm, Attribution, AttributionRecord, SeasonalMeans,
};
pub use check::{posterior_predictive_check, read_check_csv, write_check_csv, CheckReport, CheckRow, CHECK_MAX_LAG};
pub use tracks::{
    component_summaries, forcing_evolution, harmonic_peak_doy, read_bands_csv, write_bands_csv, Band, ForcingEvolution,
    SummaryTracks,
};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::model::NaoModel;
use crate::ssm::TrajectoryEnsemble;
use crate::timeseries::DailySeries;

/// Additive parts of the observation equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    /// Long-term mean `μ`.
    Mean,
    /// `Σψ_k`.
    Seasonal,
    /// Weather `X_t`.
    Weather,
    /// Forced term `Z_t`.
    Forced,
    /// Observation error, the remainder.
    Error,
}

impl Component {
    pub const ALL: [Component; 5] =
        [Component::Mean, Component::Seasonal, Component::Weather, Component::Forced, Component::Error];

    pub fn name(self) -> &'static str {
        match self {
            Component::Mean => "mean",
            Component::Seasonal => "seasonal",
            Component::Weather => "weather",
            Component::Forced => "forced",
            Component::Error => "error",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Components of one trajectory, one value per day. The error is NaN on
/// days without an observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPath {
    values: [Vec<f64>; 5],
}

impl ComponentPath {
    pub fn get(&self, c: Component) -> &[f64] {
        &self.values[c.index()]
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of all components on day `i`.
    pub fn total(&self, i: usize) -> f64 {
        self.values.iter().map(|v| v[i]).sum()
    }
}

fn check_alignment(model: &NaoModel, data: &DailySeries, steps: usize, dim: usize) -> Result<()> {
    if model.origin() != data.start() {
        return Err(Error::InvalidArgument(format!(
            "model starts on {}, data on {}",
            model.origin(),
            data.start()
        )));
    }
    if steps != data.len() {
        return Err(Error::Dimension(format!("{steps} trajectory steps for {} days of data", data.len())));
    }
    if dim != model.layout().dim() {
        return Err(Error::Dimension(format!(
            "trajectory state has {dim} coordinates, layout {}",
            model.layout().dim()
        )));
    }
    Ok(())
}

/// Splits one sampled path (`steps * dim` values, step order) into the
/// components of the observation equation.
pub fn decompose_path(path: &[f64], model: &NaoModel, data: &DailySeries) -> Result<ComponentPath> {
    let n = model.layout().dim();
    if path.len() % n != 0 {
        return Err(Error::Dimension(format!("path length {} is not a multiple of {n}", path.len())));
    }
    check_alignment(model, data, path.len() / n, n)?;
    let days = data.len();
    let mut values: [Vec<f64>; 5] = std::array::from_fn(|_| Vec::with_capacity(days));
    let x0 = model.layout().x(0);
    for (i, x) in path.chunks_exact(n).enumerate() {
        let t = i + 1;
        let mu = x[crate::model::StateLayout::MU];
        let seasonal = model.seasonal_component(x);
        let weather = x[x0];
        let forced = model.forced(t, x);
        let error = data.value(i).map_or(f64::NAN, |y| y - (mu + seasonal + weather + forced));
        for (slot, v) in values.iter_mut().zip([mu, seasonal, weather, forced, error]) {
            slot.push(v);
        }
    }
    Ok(ComponentPath { values })
}

/// Per-trajectory components for a whole ensemble.
#[derive(Debug, Clone)]
pub struct ComponentSeries {
    start: NaiveDate,
    members: Vec<ComponentPath>,
}

impl ComponentSeries {
    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn members(&self) -> &[ComponentPath] {
        &self.members
    }

    pub fn days(&self) -> usize {
        self.members[0].len()
    }
}

/// Decomposes every member of `ensemble`, which must have been sampled for
/// `model` over exactly `data`.
pub fn decompose(ensemble: &TrajectoryEnsemble, model: &NaoModel, data: &DailySeries) -> Result<ComponentSeries> {
    check_alignment(model, data, ensemble.steps(), ensemble.dim())?;
    let members = (0..ensemble.members())
        .map(|m| decompose_path(ensemble.path(m), model, data))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComponentSeries { start: data.start(), members })
}
