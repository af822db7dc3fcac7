//! Closed-loop Monte Carlo simulation of the sensing-constrained system.
//!
//! Each run draws `x_1 ~ N(x1_mean, Sigma_{1|0})`, updates the filter with
//! `y_1`, then for `t = 1..T` applies the control law, propagates the state,
//! and accumulates `||x_{t+1}||^2_{Q_t} + ||u_t||^2_{R_t}`.
//!
//! RNG contract: run `i` derives three `ChaCha8Rng` generators from
//! `seed + i` (wrapping), on streams 1/2/3 for the initial state, the process
//! noise, and the measurement noise respectively. Draws happen in time order
//! within each stream regardless of the control law, so paired comparisons —
//! across policies and across sensor sets — share their state-noise
//! realizations. Runs are embarrassingly parallel; `per_run_costs` is ordered
//! by run index.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::measurement_update;
use crate::linalg;
use crate::model::{stack_measurement, Sensor, SensorSet, TimeVaryingSystem};
use crate::riccati::RiccatiSolution;

/// Control law applied in the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlLaw {
    /// `u_t = K_t x_hat_t`, the optimal admissible policy.
    Estimated,
    /// `u_t = K_t x_t` using the true state (reference, not admissible).
    PerfectState,
    /// `u_t = 0`.
    Zero,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub runs: usize,
    pub seed: u64,
    pub control: ControlLaw,
    /// Mean of the initial state, shared by the sampler and the filter's
    /// prior. Defaults to zero.
    pub x1_mean: Option<DVector<f64>>,
}

impl SimOptions {
    pub fn new(runs: usize, seed: u64) -> Self {
        Self {
            runs,
            seed,
            control: ControlLaw::Estimated,
            x1_mean: None,
        }
    }

    pub fn control(mut self, control: ControlLaw) -> Self {
        self.control = control;
        self
    }

    pub fn x1_mean(mut self, mean: DVector<f64>) -> Self {
        self.x1_mean = Some(mean);
        self
    }
}

/// Empirical cost statistics over seeded runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub runs: usize,
    pub mean_cost: f64,
    /// `sample_std / sqrt(runs)`; zero for a single run.
    pub std_error: f64,
    pub per_run_costs: Vec<f64>,
    pub seed: u64,
    pub sensor_set: SensorSet,
}

struct Precomputed {
    c: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    v_factor: Vec<DMatrix<f64>>,
    w_factor: Vec<DMatrix<f64>>,
    x1_factor: DMatrix<f64>,
}

fn draw(rng: &mut ChaCha8Rng, factor: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_fn(factor.ncols(), |_, _| rng.sample(StandardNormal));
    factor * z
}

fn substream(seed: u64, run_index: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run_index));
    rng.set_stream(stream);
    rng
}

fn run_once(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    pre: &Precomputed,
    opts: &SimOptions,
    run_index: u64,
) -> Result<f64> {
    let mut rng_x1 = substream(opts.seed, run_index, 1);
    let mut rng_w = substream(opts.seed, run_index, 2);
    let mut rng_v = substream(opts.seed, run_index, 3);
    let horizon = model.horizon();
    let n = model.state_dim();
    let mean = opts.x1_mean.clone().unwrap_or_else(|| DVector::zeros(n));

    let mut x = &mean + draw(&mut rng_x1, &pre.x1_factor);
    let y1 = &pre.c[0] * &x + draw(&mut rng_v, &pre.v_factor[0]);
    let (mut x_hat, mut sigma) =
        measurement_update(&mean, model.sigma_1_0(), &pre.c[0], &pre.v[0], &y1)?;

    let mut cost = 0.0;
    for t in 1..=horizon {
        let u = match opts.control {
            ControlLaw::Estimated => ricc.k(t) * &x_hat,
            ControlLaw::PerfectState => ricc.k(t) * &x,
            ControlLaw::Zero => DVector::zeros(model.input_dim()),
        };
        let w = draw(&mut rng_w, &pre.w_factor[t - 1]);
        x = model.a(t) * &x + model.b(t) * &u + w;
        cost +=
            (x.transpose() * model.q(t) * &x)[(0, 0)] + (u.transpose() * model.r(t) * &u)[(0, 0)];
        if t < horizon {
            // Predict with the applied input, then update with y_{t+1}.
            let y = &pre.c[t] * &x + draw(&mut rng_v, &pre.v_factor[t]);
            if opts.control == ControlLaw::Estimated {
                let x_pred = model.a(t) * &x_hat + model.b(t) * &u;
                let sigma_pred = linalg::psd_clip(
                    &(model.a(t) * &sigma * model.a(t).transpose() + model.w(t)),
                    "Sigma_{t|t-1}",
                )?;
                let (xu, su) = measurement_update(&x_pred, &sigma_pred, &pre.c[t], &pre.v[t], &y)?;
                x_hat = xu;
                sigma = su;
            }
        }
    }
    Ok(cost)
}

/// Simulates the closed loop under the given options.
pub fn simulate_policy(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    s: &SensorSet,
    opts: &SimOptions,
) -> Result<MonteCarloReport> {
    if opts.runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    s.validate(ground_set)?;
    if let Some(mean) = &opts.x1_mean {
        if mean.len() != model.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "x1 mean".into(),
                expected: format!("{}", model.state_dim()),
                got: format!("{}", mean.len()),
            });
        }
    }

    let horizon = model.horizon();
    let mut c = Vec::with_capacity(horizon);
    let mut v = Vec::with_capacity(horizon);
    let mut v_factor = Vec::with_capacity(horizon);
    let mut w_factor = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let (ct, vt) = stack_measurement(ground_set, s, t)?;
        let ct = if ct.nrows() == 0 {
            DMatrix::zeros(0, model.state_dim())
        } else if ct.ncols() != model.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "stacked C".into(),
                expected: format!("{} columns", model.state_dim()),
                got: format!("{}", ct.ncols()),
            });
        } else {
            ct
        };
        v_factor.push(linalg::psd_factor(&vt));
        c.push(ct);
        v.push(vt);
        w_factor.push(linalg::psd_factor(model.w(t)));
    }
    let pre = Precomputed {
        c,
        v,
        v_factor,
        w_factor,
        x1_factor: linalg::psd_factor(model.sigma_1_0()),
    };

    let per_run_costs: Vec<f64> = (0..opts.runs as u64)
        .into_par_iter()
        .map(|i| run_once(model, ricc, &pre, opts, i))
        .collect::<Result<_>>()?;

    let runs = opts.runs;
    let mean_cost = per_run_costs.iter().sum::<f64>() / runs as f64;
    let std_error = if runs > 1 {
        let var = per_run_costs
            .iter()
            .map(|c| (c - mean_cost).powi(2))
            .sum::<f64>()
            / (runs as f64 - 1.0);
        (var / runs as f64).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloReport {
        runs,
        mean_cost,
        std_error,
        per_run_costs,
        seed: opts.seed,
        sensor_set: s.clone(),
    })
}

/// Simulates the optimal admissible policy `u_t = K_t x_hat_t`.
pub fn simulate(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    s: &SensorSet,
    runs: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    simulate_policy(model, ricc, ground_set, s, &SimOptions::new(runs, seed))
}
