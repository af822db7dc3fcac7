//! Backward Riccati recursion for the control side.
//!
//! For `t = T..1`, with boundary `N_{T+1} = 0`:
//!
//! ```text
//! S_t     = Q_t + N_{t+1}
//! M_t     = B_t^T S_t B_t + R_t
//! K_t     = -M_t^{-1} B_t^T S_t A_t
//! Theta_t = K_t^T M_t K_t
//! N_t     = A_t^T (S_t - S_t B_t M_t^{-1} B_t^T S_t) A_t
//! ```
//!
//! The `N_t` update uses the Woodbury-equivalent product form, which stays
//! valid when `S_t` is singular (the `S_t^{-1}` form does not). Everything is
//! independent of the sensor set; `tr(Theta_t Sigma_{t|t}(S))` is the expected
//! control mismatch a sensor set induces against the perfect-information
//! controller.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::TimeVaryingSystem;

/// Sensor-independent gains and cost weights, one entry per `t = 1..T`.
/// `N_{T+1} = 0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    s: Vec<DMatrix<f64>>,
    n: Vec<DMatrix<f64>>,
    m: Vec<DMatrix<f64>>,
    k: Vec<DMatrix<f64>>,
    theta: Vec<DMatrix<f64>>,
}

impl RiccatiSolution {
    pub fn horizon(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self, t: usize) -> &DMatrix<f64> {
        &self.s[t - 1]
    }

    pub fn n(&self, t: usize) -> &DMatrix<f64> {
        &self.n[t - 1]
    }

    pub fn m(&self, t: usize) -> &DMatrix<f64> {
        &self.m[t - 1]
    }

    pub fn k(&self, t: usize) -> &DMatrix<f64> {
        &self.k[t - 1]
    }

    pub fn theta(&self, t: usize) -> &DMatrix<f64> {
        &self.theta[t - 1]
    }

    /// Sum of the control-mismatch weights over the horizon.
    pub fn theta_sum(&self) -> DMatrix<f64> {
        let dim = self.theta[0].nrows();
        self.theta
            .iter()
            .fold(DMatrix::zeros(dim, dim), |acc, th| acc + th)
    }
}

/// Runs the backward recursion. `M_t` is positive definite whenever the model
/// validated (`M_t >= R_t > 0`); a failed factorization is a numerical error.
pub fn backward_riccati(model: &TimeVaryingSystem) -> Result<RiccatiSolution> {
    let horizon = model.horizon();
    let n_dim = model.state_dim();
    let mut s = vec![DMatrix::zeros(0, 0); horizon];
    let mut n = vec![DMatrix::zeros(0, 0); horizon];
    let mut m = vec![DMatrix::zeros(0, 0); horizon];
    let mut k = vec![DMatrix::zeros(0, 0); horizon];
    let mut theta = vec![DMatrix::zeros(0, 0); horizon];

    let mut n_next = DMatrix::zeros(n_dim, n_dim);
    for t in (1..=horizon).rev() {
        let a_t = model.a(t);
        let b_t = model.b(t);
        let s_t = linalg::symmetrize(&(model.q(t) + &n_next));
        let m_t = linalg::symmetrize(&(b_t.transpose() * &s_t * b_t + model.r(t)));
        // X = M_t^{-1} B_t^T S_t via a symmetric solve; K_t = -X A_t.
        let g = b_t.transpose() * &s_t;
        let x = linalg::solve_spd(&m_t, &g, "M_t")
            .map_err(|_| Error::Numerical(format!("M_{t} not positive definite")))?;
        let k_t = -(&x * a_t);
        let theta_t = linalg::symmetrize(&(k_t.transpose() * &m_t * &k_t));
        let n_t = linalg::symmetrize(&(a_t.transpose() * (&s_t - g.transpose() * &x) * a_t));

        s[t - 1] = s_t;
        m[t - 1] = m_t;
        k[t - 1] = k_t;
        theta[t - 1] = theta_t;
        n[t - 1] = n_t.clone();
        n_next = n_t;
    }

    Ok(RiccatiSolution { s, n, m, k, theta })
}
