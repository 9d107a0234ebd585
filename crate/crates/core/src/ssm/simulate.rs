use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{member_rng, GaussianState, ModelFunctions, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::linalg::psd_factor;

/// Starting point of a simulation.
#[derive(Debug, Clone)]
pub enum Initial {
    Fixed(DVector<f64>),
    /// `mean + factor z` with standard normal `z`; build with
    /// [`Initial::gaussian`].
    Gaussian { mean: DVector<f64>, factor: DMatrix<f64> },
}

impl Initial {
    pub fn gaussian(state: &GaussianState) -> Self {
        Initial::Gaussian { mean: state.mean.clone(), factor: psd_factor(&state.cov) }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            Initial::Fixed(x) => x.clone(),
            Initial::Gaussian { mean, factor } => {
                let z = DVector::from_fn(mean.len(), |_, _| rng.sample(StandardNormal));
                mean + factor * z
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Initial::Fixed(x) => x.len(),
            Initial::Gaussian { mean, .. } => mean.len(),
        }
    }
}

/// Simulated paths and their observations (`[member][step]`).
#[derive(Debug, Clone)]
pub struct Simulation {
    pub ensemble: TrajectoryEnsemble,
    pub observations: Vec<Vec<f64>>,
}

/// Runs one realisation over steps `first_step..first_step + steps`,
/// calling `visit(t, state, observation)` after each step.
pub fn simulate_member<R: Rng + ?Sized>(
    model: &dyn ModelFunctions,
    initial: &Initial,
    first_step: usize,
    steps: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, &DVector<f64>, f64),
) -> Result<()> {
    let n = model.dim();
    if initial.dim() != n {
        return Err(Error::Dimension(format!(
            "initial state has dimension {}, model {}",
            initial.dim(),
            n
        )));
    }
    let mut x = initial.draw(rng);
    let mut z = DVector::zeros(n);
    for t in first_step..first_step + steps {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let noise = model.noise(t, &x);
        x = model.propagate(t, &x);
        noise.add_scaled(&z, &mut x);
        let e: f64 = rng.sample(StandardNormal);
        let y = model.observe(t, &x) + model.observation_variance(t, &x).max(0.0).sqrt() * e;
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: t });
        }
        visit(t, &x, y);
    }
    Ok(())
}

/// Simulates `members` independent realisations of steps `1..=steps`;
/// member `m` uses stream `m` of `seed`.
pub fn simulate(
    model: &dyn ModelFunctions,
    initial: &Initial,
    steps: usize,
    members: usize,
    seed: u64,
) -> Result<Simulation> {
    if steps == 0 || members == 0 {
        return Err(Error::InvalidArgument("steps and members must be at least 1".into()));
    }
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..members)
        .into_par_iter()
        .map(|m| {
            let mut rng = member_rng(seed, m as u64);
            let mut path = Vec::with_capacity(steps * model.dim());
            let mut obs = Vec::with_capacity(steps);
            simulate_member(model, initial, 1, steps, &mut rng, |_, x, y| {
                path.extend_from_slice(x.as_slice());
                obs.push(y);
            })?;
            Ok((path, obs))
        })
        .collect::<Result<_>>()?;
    let (paths, observations): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    Ok(Simulation {
        ensemble: TrajectoryEnsemble::from_paths(paths, steps, model.dim())?,
        observations,
    })
}
