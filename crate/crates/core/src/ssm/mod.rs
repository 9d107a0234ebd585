//! Conditionally Gaussian state-space machinery: extended Kalman filter,
//! Rauch-Tung-Striebel smoother, forward-filtering backward-sampling and a
//! forward simulator.
//!
//! Time steps are 1-based. The prior describes the state at step 0, and
//! `transition(t, x)` maps the state at step `t - 1` to step `t`.

mod filter;
mod sampler;
mod simulate;
mod smoother;

pub use filter::{ekf_filter, ekf_filtered_at, ekf_loglik, FilterResult, FilterStep};
pub use sampler::{sample_trajectories, BackwardSampler, TrajectoryEnsemble};
pub use simulate::{simulate, simulate_member, Initial, Simulation};
pub use smoother::rts_smooth;

pub use crate::linalg::SparseRows;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Mean and covariance of the latent state at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "covariance is {:?} for a state of length {n}",
                cov.shape()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite state".into()));
        }
        let trace = cov.trace();
        if linalg::max_asymmetry(&cov) > 1e-10 * trace.max(1.0) {
            return Err(Error::InvalidArgument("covariance is not symmetric".into()));
        }
        if n > 0 {
            let min_eig = cov.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-8 * trace.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidArgument(format!(
                    "covariance is not positive semidefinite (eigenvalue {min_eig})"
                )));
            }
        }
        Ok(Self { mean, cov })
    }

    /// Independent coordinates with the given means and variances.
    pub fn diagonal(mean: &[f64], var: &[f64]) -> Result<Self> {
        if mean.len() != var.len() {
            return Err(Error::Dimension("mean and variance lengths differ".into()));
        }
        if var.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("variances must be non-negative".into()));
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(var)),
        )
    }

    /// A point mass at `x`.
    pub fn point(x: DVector<f64>) -> Self {
        let n = x.len();
        Self { mean: x, cov: DMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sd(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0).sqrt()
    }
}

/// Process-noise covariance, diagonal when the model allows it.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessNoise {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl ProcessNoise {
    pub fn dim(&self) -> usize {
        match self {
            ProcessNoise::Diagonal(d) => d.len(),
            ProcessNoise::Dense(q) => q.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ProcessNoise::Diagonal(d) => DMatrix::from_diagonal(d),
            ProcessNoise::Dense(q) => q.clone(),
        }
    }

    /// `P + Q`.
    pub fn add_to(&self, p: &mut DMatrix<f64>) {
        match self {
            ProcessNoise::Diagonal(d) => {
                for (i, v) in d.iter().enumerate() {
                    p[(i, i)] += v;
                }
            }
            ProcessNoise::Dense(q) => *p += q,
        }
    }

    /// Adds `L z` to `x`, where `L L' = Q`.
    pub fn add_scaled(&self, z: &DVector<f64>, x: &mut DVector<f64>) {
        match self {
            ProcessNoise::Diagonal(d) => {
                for i in 0..d.len() {
                    x[i] += d[i].max(0.0).sqrt() * z[i];
                }
            }
            ProcessNoise::Dense(q) => x.gemv(1.0, &linalg::psd_factor(q), z, 1.0),
        }
    }
}

/// Linearised transition into step `t`.
#[derive(Debug, Clone)]
pub struct Transition {
    /// Predicted mean `f(t, x)`.
    pub mean: DVector<f64>,
    /// Jacobian of `f` at the linearisation point.
    pub jacobian: SparseRows,
    pub noise: ProcessNoise,
}

/// Linearised scalar observation at step `t`.
#[derive(Debug, Clone)]
pub struct Observation {
    /// Predicted observation `h(t, x)` without measurement error.
    pub mean: f64,
    /// Gradient of `h` at the linearisation point.
    pub gradient: DVector<f64>,
    /// Measurement-error variance, `>= 0`.
    pub variance: f64,
}

/// A possibly nonlinear Gaussian state-space model with scalar observations.
pub trait ModelFunctions: Sync {
    fn dim(&self) -> usize;

    fn transition(&self, t: usize, x: &DVector<f64>) -> Transition;

    fn observation(&self, t: usize, x: &DVector<f64>) -> Observation;

    /// Noise-free transition; override when cheaper than [`transition`].
    ///
    /// [`transition`]: ModelFunctions::transition
    fn propagate(&self, t: usize, x: &DVector<f64>) -> DVector<f64> {
        self.transition(t, x).mean
    }

    /// Measurement-error variance at step `t`; override when cheaper than
    /// [`observation`](ModelFunctions::observation).
    fn observation_variance(&self, t: usize, x: &DVector<f64>) -> f64 {
        self.observation(t, x).variance
    }

    /// Process noise into step `t`; override when cheaper than
    /// [`transition`](ModelFunctions::transition).
    fn noise(&self, t: usize, x: &DVector<f64>) -> ProcessNoise {
        self.transition(t, x).noise
    }

    /// Noise-free observation; override when cheaper than [`observation`].
    ///
    /// [`observation`]: ModelFunctions::observation
    fn observe(&self, t: usize, x: &DVector<f64>) -> f64 {
        self.observation(t, x).mean
    }
}

/// Time-varying linear Gaussian model given by per-step matrices. Steps past
/// the end of the supplied sequences reuse the last entry.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    pub transitions: Vec<DMatrix<f64>>,
    pub noises: Vec<DMatrix<f64>>,
    pub loadings: Vec<DVector<f64>>,
    pub obs_variances: Vec<f64>,
}

impl LinearGaussianModel {
    /// Time-invariant model.
    pub fn constant(f: DMatrix<f64>, q: DMatrix<f64>, h: DVector<f64>, v: f64) -> Self {
        Self { transitions: vec![f], noises: vec![q], loadings: vec![h], obs_variances: vec![v] }
    }

    fn pick<T>(v: &[T], t: usize) -> &T {
        &v[(t.max(1) - 1).min(v.len() - 1)]
    }
}

impl ModelFunctions for LinearGaussianModel {
    fn dim(&self) -> usize {
        self.transitions[0].nrows()
    }

    fn transition(&self, t: usize, x: &DVector<f64>) -> Transition {
        let f = Self::pick(&self.transitions, t);
        let q = Self::pick(&self.noises, t);
        let noise = if linalg::is_diagonal(q) {
            ProcessNoise::Diagonal(q.diagonal())
        } else {
            ProcessNoise::Dense(q.clone())
        };
        Transition { mean: f * x, jacobian: SparseRows::from_dense(f), noise }
    }

    fn observation(&self, t: usize, x: &DVector<f64>) -> Observation {
        let h = Self::pick(&self.loadings, t);
        Observation { mean: h.dot(x), gradient: h.clone(), variance: *Self::pick(&self.obs_variances, t) }
    }
}

/// Independent random stream number `stream` derived from `seed`.
pub fn member_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
