use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::smoother::smoother_gain;
use super::{member_rng, FilterResult};
use crate::error::{Error, Result};
use crate::linalg::{psd_factor, symmetrize};

/// Sampled latent paths, stored member-major as `[member][step][coordinate]`.
/// Step index 0 is time step 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    members: usize,
    steps: usize,
    dim: usize,
    data: Vec<f64>,
    labels: Vec<String>,
}

impl TrajectoryEnsemble {
    pub fn from_paths(paths: Vec<Vec<f64>>, steps: usize, dim: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidArgument("an ensemble needs at least one member".into()));
        }
        if paths.iter().any(|p| p.len() != steps * dim) {
            return Err(Error::Dimension("member paths have inconsistent lengths".into()));
        }
        let data: Vec<f64> = paths.concat();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite value in sampled trajectory".into()));
        }
        let labels = (0..dim).map(|i| format!("x{i}")).collect();
        Ok(Self { members: paths.len(), steps, dim, data, labels })
    }

    /// Replaces the coordinate names used when writing the ensemble.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim {
            return Err(Error::Dimension(format!(
                "{} labels for {} coordinates",
                labels.len(),
                self.dim
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Full path of one member, `steps * dim` values.
    pub fn path(&self, member: usize) -> &[f64] {
        let len = self.steps * self.dim;
        &self.data[member * len..(member + 1) * len]
    }

    /// State of `member` at 0-based step index `step`.
    pub fn state(&self, member: usize, step: usize) -> &[f64] {
        let off = (member * self.steps + step) * self.dim;
        &self.data[off..off + self.dim]
    }

    pub fn value(&self, member: usize, step: usize, coord: usize) -> f64 {
        self.data[(member * self.steps + step) * self.dim + coord]
    }

    /// Ensemble mean of one coordinate at one step.
    pub fn mean(&self, step: usize, coord: usize) -> f64 {
        crate::stats::sum((0..self.members).map(|m| self.value(m, step, coord)))
            / self.members as f64
    }

    /// CSV dump with columns `time,member,<labels...>`, time being the
    /// 1-based step.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let wrap = |e: std::io::Error| Error::Io { path: path.to_path_buf(), source: e };
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(wrap)?);
        writeln!(w, "time,member,{}", self.labels.join(",")).map_err(wrap)?;
        for step in 0..self.steps {
            for m in 0..self.members {
                write!(w, "{},{}", step + 1, m).map_err(wrap)?;
                for v in self.state(m, step) {
                    write!(w, ",{v}").map_err(wrap)?;
                }
                writeln!(w).map_err(wrap)?;
            }
        }
        w.flush().map_err(wrap)
    }
}

/// Backward conditional `x_t | x_{t+1} ~ N(offset + gain x_{t+1}, factor factor')`.
struct Kernel {
    offset: DVector<f64>,
    gain: DMatrix<f64>,
    factor: DMatrix<f64>,
}

/// Forward-filtering backward-sampling under the per-step linearised
/// Gaussian approximation. The per-step kernels are built once; members are
/// then drawn independently, member `m` from stream `m` of the seed.
pub struct BackwardSampler {
    dim: usize,
    terminal_mean: DVector<f64>,
    terminal_factor: DMatrix<f64>,
    kernels: Vec<Kernel>,
}

impl BackwardSampler {
    pub fn new(filter: &FilterResult) -> Result<Self> {
        let n_steps = filter.steps.len();
        if n_steps == 0 {
            return Err(Error::InvalidArgument("cannot sample from an empty filter".into()));
        }
        let last = &filter.steps[n_steps - 1].filtered;
        let kernels = (0..n_steps - 1)
            .into_par_iter()
            .map(|i| {
                let gain = smoother_gain(filter, i)?;
                let filt = &filter.steps[i].filtered;
                let pred = &filter.steps[i + 1].predicted;
                let offset = &filt.mean - &gain * &pred.mean;
                let mut cond = &filt.cov - &gain * &pred.cov * gain.transpose();
                symmetrize(&mut cond);
                Ok(Kernel { offset, gain, factor: psd_factor(&cond) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: last.dim(),
            terminal_mean: last.mean.clone(),
            terminal_factor: psd_factor(&last.cov),
            kernels,
        })
    }

    pub fn steps(&self) -> usize {
        self.kernels.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One path, `steps * dim` values in step order.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim;
        let steps = self.steps();
        let mut out = vec![0.0; steps * n];
        let mut z = DVector::zeros(n);
        let fill = |z: &mut DVector<f64>, rng: &mut R| {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        };
        fill(&mut z, rng);
        let mut x = &self.terminal_mean + &self.terminal_factor * &z;
        out[(steps - 1) * n..].copy_from_slice(x.as_slice());
        for i in (0..steps - 1).rev() {
            let k = &self.kernels[i];
            fill(&mut z, rng);
            let mut next = k.offset.clone();
            next.gemv(1.0, &k.gain, &x, 1.0);
            next.gemv(1.0, &k.factor, &z, 1.0);
            out[i * n..(i + 1) * n].copy_from_slice(next.as_slice());
            x = next;
        }
        out
    }

    /// Path of member `member` under `seed`.
    pub fn draw_member(&self, seed: u64, member: usize) -> Vec<f64> {
        self.draw(&mut member_rng(seed, member as u64))
    }

    /// Members `range`, drawn in parallel; identical to drawing them one by
    /// one with [`draw_member`](Self::draw_member).
    pub fn sample_range(&self, range: std::ops::Range<usize>, seed: u64) -> Result<TrajectoryEnsemble> {
        let paths: Vec<Vec<f64>> = range
            .into_par_iter()
            .map(|m| self.draw_member(seed, m))
            .collect();
        TrajectoryEnsemble::from_paths(paths, self.steps(), self.dim)
    }
}

/// Draws `members` trajectories from the linearised smoothing distribution.
pub fn sample_trajectories(filter: &FilterResult, members: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    if members == 0 {
        return Err(Error::InvalidArgument("member count must be at least 1".into()));
    }
    BackwardSampler::new(filter)?.sample_range(0..members, seed)
}

#[cfg(test)]
mod tests {
    use super::super::{ekf_filter, rts_smooth, GaussianState, LinearGaussianModel};
    use super::*;

    fn walk(q: f64, v: f64) -> LinearGaussianModel {
        LinearGaussianModel::constant(
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, q),
            DVector::from_element(1, 1.0),
            v,
        )
    }

    #[test]
    fn static_state_paths_are_constant() {
        let prior = GaussianState::diagonal(&[0.0], &[1.0]).unwrap();
        let f = ekf_filter(&walk(0.0, 0.1), &prior, &[Some(2.0), None, Some(2.0)]).unwrap();
        let s = rts_smooth(&f).unwrap();
        let e = sample_trajectories(&f, 4000, 1).unwrap();
        for m in 0..4000 {
            for t in 1..3 {
                assert!((e.value(m, t, 0) - e.value(m, 0, 0)).abs() < 1e-9);
            }
        }
        let se = s[0].sd(0) / 4000f64.sqrt();
        assert!((e.mean(0, 0) - s[0].mean[0]).abs() < 4.0 * se);
    }

    #[test]
    fn same_seed_same_ensemble() {
        let prior = GaussianState::diagonal(&[0.0], &[1.0]).unwrap();
        let f = ekf_filter(&walk(0.3, 0.5), &prior, &[Some(1.0), Some(0.0), Some(-1.0)]).unwrap();
        let a = sample_trajectories(&f, 20, 42).unwrap();
        let b = sample_trajectories(&f, 20, 42).unwrap();
        let c = sample_trajectories(&f, 20, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let sampler = BackwardSampler::new(&f).unwrap();
        assert_eq!(sampler.sample_range(5..8, 42).unwrap().path(1), a.path(6));
    }

    #[test]
    fn csv_dump_has_one_row_per_member_and_step() {
        let prior = GaussianState::diagonal(&[0.0], &[1.0]).unwrap();
        let f = ekf_filter(&walk(0.3, 0.5), &prior, &[Some(1.0), Some(0.0)]).unwrap();
        let e = sample_trajectories(&f, 3, 1).unwrap().with_labels(vec!["level".into()]).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        e.write_csv(file.path()).unwrap();
        let text = std::fs::read_to_string(file.path()).unwrap();
        assert!(text.starts_with("time,member,level\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 3);
    }
}
