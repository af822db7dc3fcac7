//! Generators for the two benchmark experiments: sensing-constrained
//! formation control and resource-constrained UAV navigation.
//!
//! Both model each vehicle as a discretized double integrator with step
//! `dt`: per axis, position += dt * velocity and the input is an
//! acceleration entering as `[dt^2/2, dt]`. State coordinates are deviations
//! from the target (formation shape or landing point), so regulation to zero
//! is tracking.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Sensor, TimeVaryingSystem};

/// Sensing-constrained formation control: `n_agents` planar double
/// integrators, one GPS per agent and one relative-position lidar per
/// unordered agent pair.
#[derive(Debug, Clone)]
pub struct FormationConfig {
    pub n_agents: usize,
    /// Weighs agent 1's tracking error 100x harder (10 I vs 0.1 I).
    pub heterogeneous: bool,
    pub horizon: usize,
    pub dt: f64,
    /// Side of the square the agents deploy in; presentational only, the
    /// regulated coordinates are deviations from the target formation.
    pub deployment_box: f64,
    pub seed: u64,
}

impl Default for FormationConfig {
    fn default() -> Self {
        Self {
            n_agents: 4,
            heterogeneous: false,
            horizon: 20,
            dt: 1.0,
            deployment_box: 10.0,
            seed: 0,
        }
    }
}

/// Resource-constrained UAV navigation: one 3D double integrator landing at
/// the origin, with GPS, altimeter, and `num_landmarks` relative-position
/// landmark sightings of per-seed random accuracy.
#[derive(Debug, Clone)]
pub struct UavConfig {
    pub num_landmarks: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for UavConfig {
    fn default() -> Self {
        Self {
            num_landmarks: 10,
            horizon: 20,
            seed: 0,
        }
    }
}

fn double_integrator(dim: usize, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let eye = DMatrix::<f64>::identity(dim, dim);
    let mut a = DMatrix::zeros(2 * dim, 2 * dim);
    a.view_mut((0, 0), (dim, dim)).copy_from(&eye);
    a.view_mut((0, dim), (dim, dim)).copy_from(&(&eye * dt));
    a.view_mut((dim, dim), (dim, dim)).copy_from(&eye);
    let mut b = DMatrix::zeros(2 * dim, dim);
    b.view_mut((0, 0), (dim, dim))
        .copy_from(&(&eye * (dt * dt / 2.0)));
    b.view_mut((dim, 0), (dim, dim)).copy_from(&(&eye * dt));
    (a, b)
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `I + G G^T / n` with `G` an n x n standard-normal draw: PD by construction
/// with O(1) conditioning.
fn randomized_prior(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = standard_normal_matrix(rng, n, n);
    DMatrix::identity(n, n) + (&g * g.transpose()) / n as f64
}

pub fn formation_scenario(
    cfg: &FormationConfig,
) -> Result<(TimeVaryingSystem, Vec<Sensor>, Vec<String>)> {
    if cfg.n_agents < 2 {
        return Err(Error::InvalidConfig("n_agents must be at least 2".into()));
    }
    if cfg.horizon < 1 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let n_agents = cfg.n_agents;
    let n = 4 * n_agents;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Per agent: state [p; v] in R^4, A/B from the double integrator,
    // W = diag[1e-2, 1e-2, 1e-4, 1e-4].
    let (a_agent, b_agent) = double_integrator(2, cfg.dt);
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 2 * n_agents);
    let mut w = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    let w_agent =
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1e-2, 1e-2, 1e-4, 1e-4]));
    for i in 0..n_agents {
        a.view_mut((4 * i, 4 * i), (4, 4)).copy_from(&a_agent);
        b.view_mut((4 * i, 2 * i), (4, 2)).copy_from(&b_agent);
        w.view_mut((4 * i, 4 * i), (4, 4)).copy_from(&w_agent);
        let weight = if cfg.heterogeneous && i == 0 {
            10.0
        } else {
            0.1
        };
        q.view_mut((4 * i, 4 * i), (4, 4))
            .copy_from(&(DMatrix::identity(4, 4) * weight));
    }
    let r = DMatrix::identity(2 * n_agents, 2 * n_agents);
    let sigma_1_0 = randomized_prior(&mut rng, n);
    let model = TimeVaryingSystem::time_invariant(cfg.horizon, a, b, w, q, r, sigma_1_0)?;

    // GPS per agent (selects p_i), then one lidar per unordered pair
    // measuring p_j - p_i.
    let mut sensors = Vec::new();
    let mut id = 0;
    for i in 0..n_agents {
        let mut c = DMatrix::zeros(2, n);
        c.view_mut((0, 4 * i), (2, 2))
            .copy_from(&DMatrix::identity(2, 2));
        sensors.push(Sensor::time_invariant(
            id,
            Some("gps".into()),
            c,
            DMatrix::identity(2, 2) * 2.0,
            cfg.horizon,
        )?);
        id += 1;
    }
    for i in 0..n_agents {
        for j in (i + 1)..n_agents {
            let mut c = DMatrix::zeros(2, n);
            c.view_mut((0, 4 * i), (2, 2))
                .copy_from(&(DMatrix::identity(2, 2) * -1.0));
            c.view_mut((0, 4 * j), (2, 2))
                .copy_from(&DMatrix::identity(2, 2));
            sensors.push(Sensor::time_invariant(
                id,
                Some("lidar".into()),
                c,
                DMatrix::identity(2, 2) * 0.1,
                cfg.horizon,
            )?);
            id += 1;
        }
    }
    Ok((model, sensors, vec!["gps".to_string()]))
}

pub fn uav_scenario(cfg: &UavConfig) -> Result<(TimeVaryingSystem, Vec<Sensor>, Vec<String>)> {
    if cfg.horizon < 1 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (a, b) = double_integrator(3, 1.0);
    let w = DMatrix::identity(n, n);
    // Landing weights the vertical channel: Q = diag[1e-3, 1e-3, 10, 1e-3, 1e-3, 10].
    let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        1e-3, 1e-3, 10.0, 1e-3, 1e-3, 10.0,
    ]));
    let r = DMatrix::identity(3, 3);
    let sigma_1_0 = DMatrix::identity(n, n);
    let model = TimeVaryingSystem::time_invariant(cfg.horizon, a, b, w, q, r, sigma_1_0)?;

    let mut sensors = Vec::new();
    let mut c_gps = DMatrix::zeros(3, n);
    c_gps
        .view_mut((0, 0), (3, 3))
        .copy_from(&DMatrix::identity(3, 3));
    sensors.push(Sensor::time_invariant(
        0,
        Some("gps".into()),
        c_gps,
        DMatrix::identity(3, 3) * 2.0,
        cfg.horizon,
    )?);

    let mut c_alt = DMatrix::zeros(1, n);
    c_alt[(0, 2)] = 1.0;
    sensors.push(Sensor::time_invariant(
        1,
        Some("altimeter".into()),
        c_alt,
        DMatrix::from_element(1, 1, 0.25),
        cfg.horizon,
    )?);

    // Landmark sightings: relative position, with a per-seed random accuracy
    // V = 0.25 I + G G^T / 3.
    let mut c_lm = DMatrix::zeros(3, n);
    c_lm.view_mut((0, 0), (3, 3))
        .copy_from(&(DMatrix::identity(3, 3) * -1.0));
    for l in 0..cfg.num_landmarks {
        let g = standard_normal_matrix(&mut rng, 3, 3);
        let v = DMatrix::identity(3, 3) * 0.25 + (&g * g.transpose()) / 3.0;
        sensors.push(Sensor::time_invariant(
            2 + l,
            Some("landmark".into()),
            c_lm.clone(),
            v,
            cfg.horizon,
        )?);
    }
    Ok((model, sensors, vec!["gps".to_string()]))
}
