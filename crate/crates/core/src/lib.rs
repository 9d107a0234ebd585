//! Structural state-space decomposition of daily climate indices.
//!
//! A daily index is modelled as a slowly varying mean with local trend, a
//! stochastic seasonal cycle, a time-varying autoregressive weather process,
//! observation error and an intermittently acting forced component gated by
//! an annual influence function. The crate fits the variance and forcing
//! parameters by maximum likelihood through an extended Kalman filter,
//! selects the forcing window by BIC, attributes seasonal means to the
//! components from sampled trajectories and issues ensemble seasonal
//! forecasts.

pub mod analysis;
pub mod forecast;
pub mod calendar;
pub mod error;
pub mod estimation;
pub mod model;
mod linalg;
pub mod ssm;
pub mod stats;
pub mod timeseries;

pub use calendar::{MonthWindow, OMEGA};
pub use error::{Error, Result};
pub use timeseries::DailySeries;
