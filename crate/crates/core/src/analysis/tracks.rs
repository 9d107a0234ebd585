use std::path::Path;

use chrono::{Datelike, NaiveDate};

use super::anova::{read_records, write_csv};
use crate::calendar::OMEGA;
use crate::error::{Error, Result};
use crate::model::{ForcingKind, NaoModel, StateLayout};
use crate::ssm::TrajectoryEnsemble;
use crate::stats;

/// Ensemble mean and 95% interval of a named quantity on one date.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Band {
    pub date: NaiveDate,
    pub name: String,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

fn band(date: NaiveDate, name: &str, values: &[f64]) -> Band {
    let finite: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    let mean = if finite.is_empty() { f64::NAN } else { stats::mean(&finite) };
    let (lo, hi) = stats::interval(&finite, 0.025, 0.975);
    Band { date, name: name.to_string(), mean, lo, hi }
}

pub fn write_bands_csv(bands: &[Band], path: impl AsRef<Path>) -> Result<()> {
    write_csv(bands.iter(), path.as_ref())
}

pub fn read_bands_csv(path: impl AsRef<Path>) -> Result<Vec<Band>> {
    read_records(path.as_ref())
}

/// Day of year of the first peak of harmonic `k` during the calendar year
/// of step `t`, given the harmonic pair `(psi, psi_star)` at that step and
/// no further disturbances. `None` when the amplitude is zero.
pub fn harmonic_peak_doy(model: &NaoModel, t: usize, k: usize, psi: f64, psi_star: f64) -> Option<u32> {
    if psi == 0.0 && psi_star == 0.0 {
        return None;
    }
    let date = model.date(t);
    let angle = k as f64 * OMEGA;
    let at = |h: i64| {
        let a = angle * h as f64;
        psi * a.cos() + psi_star * a.sin()
    };
    let h0 = -(date.ordinal0() as i64);
    let days = if date.leap_year() { 366 } else { 365 };
    (h0..h0 + days)
        .find(|&h| at(h) >= at(h - 1) && at(h) > at(h + 1))
        .map(|h| (h - h0) as u32 + 1)
}

/// Slowly varying components sampled every few days: the mean level,
/// amplitude and phase of each harmonic and the autoregressive
/// coefficients.
#[derive(Debug, Clone)]
pub struct SummaryTracks {
    model: NaoModel,
    steps: Vec<usize>,
    names: Vec<String>,
    /// `[name][step][member]`
    values: Vec<Vec<Vec<f64>>>,
    path_len: usize,
}

impl SummaryTracks {
    /// Tracks on steps `1, 1 + stride, ...` up to `steps`.
    pub fn new(model: &NaoModel, steps: usize, stride: usize) -> Result<Self> {
        if stride == 0 || steps == 0 {
            return Err(Error::InvalidArgument("stride and step count must be positive".into()));
        }
        let l = model.layout();
        let mut names = vec!["mu".to_string()];
        for k in 1..=l.harmonics {
            names.push(format!("amplitude{k}"));
            names.push(format!("phase{k}"));
        }
        names.extend((1..=l.order).map(|p| format!("phi{p}")));
        let picked: Vec<usize> = (1..=steps).step_by(stride).collect();
        Ok(Self {
            model: model.clone(),
            values: vec![vec![Vec::new(); picked.len()]; names.len()],
            steps: picked,
            names,
            path_len: steps * l.dim(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn push(&mut self, path: &[f64]) -> Result<()> {
        if path.len() != self.path_len {
            return Err(Error::Dimension(format!("path of {} values, expected {}", path.len(), self.path_len)));
        }
        let l = *self.model.layout();
        let n = l.dim();
        for (j, &t) in self.steps.iter().enumerate() {
            let x = &path[(t - 1) * n..t * n];
            let mut row = vec![x[StateLayout::MU]];
            for k in 1..=l.harmonics {
                let (a, b) = (x[l.psi(k)], x[l.psi_star(k)]);
                row.push(a.hypot(b));
                row.push(harmonic_peak_doy(&self.model, t, k, a, b).map_or(f64::NAN, f64::from));
            }
            row.extend((1..=l.order).map(|p| x[l.phi(p)]));
            for (slot, v) in self.values.iter_mut().zip(row) {
                slot[j].push(v);
            }
        }
        Ok(())
    }

    /// One band per (step, name), in step order.
    pub fn bands(&self) -> Vec<Band> {
        let mut out = Vec::with_capacity(self.steps.len() * self.names.len());
        for (j, &t) in self.steps.iter().enumerate() {
            let date = self.model.date(t);
            for (name, v) in self.names.iter().zip(&self.values) {
                out.push(band(date, name, &v[j]));
            }
        }
        out
    }
}

/// Component tracks of every member of `ensemble`, sampled every `stride`
/// days.
pub fn component_summaries(ensemble: &TrajectoryEnsemble, model: &NaoModel, stride: usize) -> Result<Vec<Band>> {
    let mut tracks = SummaryTracks::new(model, ensemble.steps(), stride)?;
    for m in 0..ensemble.members() {
        tracks.push(ensemble.path(m))?;
    }
    Ok(tracks.bands())
}

/// The forcing state `δ` through November to April of one winter, labelled
/// by its January year.
#[derive(Debug, Clone)]
pub struct ForcingEvolution {
    first_step: usize,
    dates: Vec<NaiveDate>,
    coord: usize,
    dim: usize,
    path_len: usize,
    /// `[day][member]`
    values: Vec<Vec<f64>>,
}

impl ForcingEvolution {
    pub fn new(model: &NaoModel, steps: usize, winter: i32) -> Result<Self> {
        let l = model.layout();
        if l.forcing != ForcingKind::MeanShift {
            return Err(Error::InvalidArgument(format!(
                "forcing evolution needs a mean-shift model, not {}",
                l.forcing
            )));
        }
        let from = NaiveDate::from_ymd_opt(winter - 1, 11, 1)
            .ok_or_else(|| Error::InvalidArgument(format!("winter {winter}")))?;
        let to = NaiveDate::from_ymd_opt(winter, 4, 30).expect("valid date");
        let first = model.step_of(from).unwrap_or(1).max(1);
        let last = model.step_of(to).map_or(0, |s| s.min(steps));
        if last < first {
            return Err(Error::InvalidArgument(format!("winter {winter} lies outside the data")));
        }
        Ok(Self {
            first_step: first,
            dates: (first..=last).map(|t| model.date(t)).collect(),
            coord: l.delta(0),
            dim: l.dim(),
            path_len: steps * l.dim(),
            values: vec![Vec::new(); last - first + 1],
        })
    }

    pub fn push(&mut self, path: &[f64]) -> Result<()> {
        if path.len() != self.path_len {
            return Err(Error::Dimension(format!("path of {} values, expected {}", path.len(), self.path_len)));
        }
        for (i, slot) in self.values.iter_mut().enumerate() {
            let t = self.first_step + i;
            slot.push(path[(t - 1) * self.dim + self.coord]);
        }
        Ok(())
    }

    pub fn bands(&self) -> Vec<Band> {
        self.dates.iter().zip(&self.values).map(|(d, v)| band(*d, "delta", v)).collect()
    }
}

pub fn forcing_evolution(ensemble: &TrajectoryEnsemble, model: &NaoModel, winter: i32) -> Result<Vec<Band>> {
    let mut f = ForcingEvolution::new(model, ensemble.steps(), winter)?;
    for m in 0..ensemble.members() {
        f.push(ensemble.path(m))?;
    }
    Ok(f.bands())
}
