//! Kalman covariance recursion for an arbitrary active sensor set, plus the
//! mean-update filter used by the closed-loop simulator.
//!
//! The covariance recursion, with boundary `Sigma_{1|0}(S) = Sigma_{1|0}`:
//!
//! ```text
//! Sigma_{t|t}   = (Sigma_{t|t-1}^{-1} + C_t(S)^T V_t(S)^{-1} C_t(S))^{-1}
//! Sigma_{t+1|t} = A_t Sigma_{t|t} A_t^T + W_t
//! ```
//!
//! The information form assumes `Sigma_{t|t-1}` invertible, which the source
//! recursion never states; when the predicted covariance is not PD we fall
//! back to the equivalent gain form. The simulator path uses the Joseph form
//! to preserve positive semidefiniteness.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{stack_measurement, Sensor, SensorSet, TimeVaryingSystem};

/// Predicted and filtered covariances for one sensor set over the horizon.
#[derive(Debug, Clone)]
pub struct CovarianceTrajectory {
    sensor_set: SensorSet,
    pred: Vec<DMatrix<f64>>,
    filt: Vec<DMatrix<f64>>,
}

impl CovarianceTrajectory {
    pub fn sensor_set(&self) -> &SensorSet {
        &self.sensor_set
    }

    pub fn horizon(&self) -> usize {
        self.filt.len()
    }

    /// `Sigma_{t|t-1}` for `t = 1..T` (`t = 1` is the prior).
    pub fn predicted(&self, t: usize) -> &DMatrix<f64> {
        &self.pred[t - 1]
    }

    /// `Sigma_{t|t}` for `t = 1..T`.
    pub fn filtered(&self, t: usize) -> &DMatrix<f64> {
        &self.filt[t - 1]
    }
}

/// Measurement update of a predicted covariance with the stacked pair
/// `(C, V)`. Empty stacks (zero measurement rows) leave the prediction
/// unchanged.
fn update_covariance(
    sigma_pred: &DMatrix<f64>,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if c.nrows() == 0 {
        return Ok(sigma_pred.clone());
    }
    // Information form when the prediction is PD, gain form otherwise.
    if let Some(chol) = linalg::symmetrize(sigma_pred).cholesky() {
        let v_inv_c = linalg::solve_spd(v, c, "V_t(S)")?;
        let info = linalg::symmetrize(&(chol.inverse() + c.transpose() * v_inv_c));
        if let Some(info_chol) = info.clone().cholesky() {
            return linalg::psd_clip(&info_chol.inverse(), "Sigma_{t|t}");
        }
    }
    let innovation = linalg::symmetrize(&(c * sigma_pred * c.transpose() + v));
    let gain_t = linalg::solve_spd(&innovation, &(c * sigma_pred), "innovation")?;
    linalg::psd_clip(
        &(sigma_pred - (sigma_pred * c.transpose()) * gain_t),
        "Sigma_{t|t}",
    )
}

/// Runs the covariance recursion for sensor set `s` over the full horizon.
pub fn covariance_trajectory(
    model: &TimeVaryingSystem,
    ground_set: &[Sensor],
    s: &SensorSet,
) -> Result<CovarianceTrajectory> {
    s.validate(ground_set)?;
    let horizon = model.horizon();
    let mut pred = Vec::with_capacity(horizon);
    let mut filt = Vec::with_capacity(horizon);
    let mut sigma_pred = model.sigma_1_0().clone();
    for t in 1..=horizon {
        let (c, v) = stack_measurement(ground_set, s, t)?;
        let sigma_filt = update_covariance(&sigma_pred, &c, &v)?;
        pred.push(sigma_pred);
        if t < horizon {
            sigma_pred = linalg::psd_clip(
                &(model.a(t) * &sigma_filt * model.a(t).transpose() + model.w(t)),
                "Sigma_{t+1|t}",
            )?;
        } else {
            sigma_pred = DMatrix::zeros(0, 0);
        }
        filt.push(sigma_filt);
    }
    Ok(CovarianceTrajectory {
        sensor_set: s.clone(),
        pred,
        filt,
    })
}

/// Kalman mean and covariance after the measurement update at time `t`.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub t: usize,
    pub x_hat: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

/// Joseph-form measurement update of `(x_hat, sigma)` with stacked `(c, v)`
/// and measurement `y`. Empty stacks return the inputs unchanged.
pub fn measurement_update(
    x_hat: &DVector<f64>,
    sigma: &DMatrix<f64>,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if y.len() != c.nrows() {
        return Err(Error::DimensionMismatch {
            what: "measurement".to_string(),
            expected: format!("{} rows", c.nrows()),
            got: format!("{}", y.len()),
        });
    }
    if c.nrows() == 0 {
        return Ok((x_hat.clone(), sigma.clone()));
    }
    let innovation_cov = linalg::symmetrize(&(c * sigma * c.transpose() + v));
    // L = Sigma C^T (C Sigma C^T + V)^{-1}, via a solve on the transpose.
    let gain_t = linalg::solve_spd(&innovation_cov, &(c * sigma), "innovation")?;
    let gain = gain_t.transpose();
    let x_new = x_hat + &gain * (y - c * x_hat);
    let i_lc = DMatrix::identity(sigma.nrows(), sigma.nrows()) - &gain * c;
    let sigma_new = &i_lc * sigma * i_lc.transpose() + &gain * v * gain.transpose();
    Ok((x_new, linalg::psd_clip(&sigma_new, "Sigma_{t|t}")?))
}

/// One predict-update cycle: propagates the `t`-indexed state through
/// `(A_t, B_t, W_t)` with the applied input `u_prev = u_t`, then updates with
/// the stacked measurement `y` at time `t + 1`.
pub fn filter_step(
    state: &FilterState,
    model: &TimeVaryingSystem,
    ground_set: &[Sensor],
    s: &SensorSet,
    u_prev: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<FilterState> {
    let t_new = state.t + 1;
    model.check_time(t_new)?;
    if u_prev.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input".to_string(),
            expected: format!("{}", model.input_dim()),
            got: format!("{}", u_prev.len()),
        });
    }
    let a = model.a(state.t);
    let b = model.b(state.t);
    let x_pred = a * &state.x_hat + b * u_prev;
    let sigma_pred = linalg::psd_clip(
        &(a * &state.sigma * a.transpose() + model.w(state.t)),
        "Sigma_{t|t-1}",
    )?;
    let (c, v) = stack_measurement(ground_set, s, t_new)?;
    let (x_hat, sigma) = measurement_update(&x_pred, &sigma_pred, &c, &v, y)?;
    Ok(FilterState {
        t: t_new,
        x_hat,
        sigma,
    })
}
