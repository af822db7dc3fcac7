//! Sensing-constrained LQG control.
//!
//! Jointly selects `k` of `N` candidate sensors and computes the LQG
//! controller/estimator for a discrete-time linear-Gaussian system. The
//! controller gains are sensor-independent (separation), so sensing design
//! reduces to minimizing `sum_t tr(Theta_t Sigma_{t|t}(S))` over sensor sets;
//! a greedy pass over that cost carries an `exp(-gamma)` suboptimality
//! certificate driven by the supermodularity ratio `gamma` of the cost.
//!
//! Module map:
//! - [`model`]: system, sensors, stacked measurement model, JSON format.
//! - [`riccati`]: backward recursion for gains `K_t` and weights `Theta_t`.
//! - [`kalman`]: covariance recursion and the simulator's mean filter.
//! - [`selection`]: design costs and the selection policies.
//! - [`guarantees`]: supermodularity ratio, conditions, certificates.
//! - [`sim`]: closed-loop Monte Carlo validation.
//! - [`scenarios`]: formation-control and UAV benchmark generators.
//! - [`cli`]: experiment sweeps, CSV/manifest output.

pub mod cli;
pub mod error;
pub mod guarantees;
pub mod kalman;
pub mod linalg;
pub mod model;
pub mod riccati;
pub mod scenarios;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
