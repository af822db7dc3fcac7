//! Shared generators and independent oracles for the integration suites.
//!
//! The oracles here deliberately avoid the library's own recursion paths:
//! covariances come from a straight-line textbook predict/update loop in gain
//! form with plain matrix inversion, and measurement stacking is re-derived
//! by direct row concatenation.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use lqg_sense::model::{Sensor, SensorSet, TimeVaryingSystem};
use lqg_sense::riccati::RiccatiSolution;

pub struct TestInstance {
    pub model: TimeVaryingSystem,
    pub ground: Vec<Sensor>,
}

pub fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn rand_psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let g = randn(rng, n, n);
    (&g * g.transpose()) * (scale / n as f64)
}

pub fn rand_pd(rng: &mut ChaCha8Rng, n: usize, floor: f64, scale: f64) -> DMatrix<f64> {
    rand_psd(rng, n, scale) + DMatrix::identity(n, n) * floor
}

/// Mildly time-varying random instance: `A_t` near the identity (invertible
/// with overwhelming probability), PSD `W_t`/`Q_t`, PD `R_t`, and `sensors`
/// random sensors with 1- or 2-dimensional outputs.
pub fn random_instance(
    seed: u64,
    n: usize,
    m: usize,
    horizon: usize,
    sensors: usize,
) -> TestInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let spread = 0.35 / (n as f64).sqrt();
    let mut a = Vec::with_capacity(horizon);
    let mut b = Vec::with_capacity(horizon);
    let mut w = Vec::with_capacity(horizon);
    let mut q = Vec::with_capacity(horizon);
    let mut r = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        a.push(DMatrix::identity(n, n) + randn(&mut rng, n, n) * spread);
        b.push(randn(&mut rng, n, m) * 0.6);
        w.push(rand_psd(&mut rng, n, 0.3));
        q.push(rand_psd(&mut rng, n, 1.0));
        r.push(rand_pd(&mut rng, m, 0.4, 0.5));
    }
    let sigma_1_0 = rand_pd(&mut rng, n, 1.0, 1.0);
    let model = TimeVaryingSystem::new(a, b, w, q, r, sigma_1_0).expect("valid random model");

    let ground = (0..sensors)
        .map(|id| {
            let p = 1 + (rng.random_range(0..2usize));
            let c: Vec<DMatrix<f64>> = (0..horizon).map(|_| randn(&mut rng, p, n)).collect();
            let v: Vec<DMatrix<f64>> = (0..horizon)
                .map(|_| rand_pd(&mut rng, p, 0.2, 0.6))
                .collect();
            Sensor::new(id, None, c, v).expect("valid random sensor")
        })
        .collect();
    TestInstance { model, ground }
}

/// Independent stacking: direct row concatenation in increasing id order.
pub fn oracle_stack(
    ground: &[Sensor],
    s: &SensorSet,
    t: usize,
    n: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut members: Vec<&Sensor> = ground
        .iter()
        .filter(|sensor| s.ids().contains(&sensor.id()))
        .collect();
    members.sort_by_key(|sensor| sensor.id());
    let rows: usize = members.iter().map(|m| m.c(t).nrows()).sum();
    let mut c = DMatrix::zeros(rows, n);
    let mut v = DMatrix::zeros(rows, rows);
    let mut at = 0;
    for member in members {
        let p = member.c(t).nrows();
        for i in 0..p {
            for j in 0..n {
                c[(at + i, j)] = member.c(t)[(i, j)];
            }
            for j in 0..p {
                v[(at + i, at + j)] = member.v(t)[(i, j)];
            }
        }
        at += p;
    }
    (c, v)
}

/// Textbook gain-form Kalman covariance loop with plain `try_inverse`; returns
/// the filtered covariances `Sigma_{t|t}` for `t = 1..T`.
pub fn oracle_filtered_covariances(
    model: &TimeVaryingSystem,
    ground: &[Sensor],
    s: &SensorSet,
) -> Vec<DMatrix<f64>> {
    let n = model.state_dim();
    let mut sigma = model.sigma_1_0().clone();
    let mut out = Vec::with_capacity(model.horizon());
    for t in 1..=model.horizon() {
        let (c, v) = oracle_stack(ground, s, t, n);
        if c.nrows() > 0 {
            let innov = &c * &sigma * c.transpose() + &v;
            let gain = &sigma * c.transpose() * innov.try_inverse().expect("innovation invertible");
            sigma = &sigma - &gain * &c * &sigma;
        }
        out.push(sigma.clone());
        if t < model.horizon() {
            sigma = model.a(t) * &sigma * model.a(t).transpose() + model.w(t);
        }
    }
    out
}

/// Design cost recomputed from the oracle covariances with a dense product
/// trace.
pub fn oracle_selection_cost(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground: &[Sensor],
    s: &SensorSet,
) -> f64 {
    oracle_filtered_covariances(model, ground, s)
        .iter()
        .enumerate()
        .map(|(i, sigma)| (ricc.theta(i + 1) * sigma).trace())
        .sum()
}

fn subsets_of(ids: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &id in ids {
        let mut extended: Vec<Vec<usize>> = out
            .iter()
            .map(|subset| {
                let mut s = subset.clone();
                s.push(id);
                s
            })
            .collect();
        out.append(&mut extended);
    }
    out
}

/// Second, independently coded supermodularity-ratio enumerator: recursive
/// subset generation, fresh cost evaluations through the supplied closure,
/// explicit double loop over the pair (x, x'). Mirrors the degenerate-pair
/// conventions (skip denominators below 1e-12 * scale; zero numerators
/// contribute 0; clamp to [0, 1]; 1 on an empty quantifier domain).
pub fn oracle_gamma_exact(ids: &[usize], f: &dyn Fn(&[usize]) -> f64) -> f64 {
    let ids = ids.to_vec();
    let f_empty = f(&[]);
    let f_full = f(&ids);
    let tol = 1e-12 * (f_empty - f_full).max(f_empty.abs()).max(1e-300);

    let mut min_ratio = f64::INFINITY;
    let mut any = false;
    for subset in subsets_of(&ids) {
        for &x in ids.iter().filter(|id| !subset.contains(id)) {
            let mut with_x = subset.clone();
            with_x.push(x);
            let num = f(&subset) - f(&with_x);
            for &xp in ids.iter().filter(|&&id| id != x && !subset.contains(&id)) {
                let mut with_xp = subset.clone();
                with_xp.push(xp);
                let mut with_both = with_xp.clone();
                with_both.push(x);
                let den = f(&with_xp) - f(&with_both);
                if den < tol {
                    continue;
                }
                any = true;
                let ratio = if num < tol { 0.0 } else { num / den };
                min_ratio = min_ratio.min(ratio);
            }
        }
    }
    if any {
        min_ratio.clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Instance family satisfying the ratio lower bound's hypotheses: `A_t` near
/// the identity, small process noise, a prior with one dominant eigenvalue
/// (so the trace condition holds along the no-sensor trajectory), and sensors
/// with spherical noise whose `C` is rescaled to unit normalized Frobenius
/// norm.
pub fn hypothesis_instance(seed: u64, n: usize, horizon: usize, sensors: usize) -> TestInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_F491_4F6C_DD1D));
    let spread = 0.15 / (n as f64).sqrt();
    let mut a = Vec::with_capacity(horizon);
    let mut b = Vec::with_capacity(horizon);
    let mut w = Vec::with_capacity(horizon);
    let mut q = Vec::with_capacity(horizon);
    let mut r = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        a.push(DMatrix::identity(n, n) + randn(&mut rng, n, n) * spread);
        b.push(randn(&mut rng, n, n) * 0.6);
        w.push(DMatrix::identity(n, n) * 0.02);
        q.push(rand_pd(&mut rng, n, 0.1, 0.8));
        r.push(rand_pd(&mut rng, n, 0.4, 0.4));
    }
    let mut sigma_diag = DMatrix::identity(n, n) * 0.5;
    sigma_diag[(0, 0)] = 25.0;
    let model = TimeVaryingSystem::new(a, b, w, q, r, sigma_diag).expect("valid model");

    let ground = (0..sensors)
        .map(|id| {
            let p = 1 + rng.random_range(0..2usize);
            let noise = 0.3 + 1.7 * rng.random_range(0.0..1.0f64);
            let raw = randn(&mut rng, p, n);
            // Spherical noise v I makes Cbar = C / sqrt(v); rescale C so
            // ||Cbar||_F = 1.
            let c = &raw * (noise.sqrt() / raw.norm());
            Sensor::time_invariant(id, None, c, DMatrix::identity(p, p) * noise, horizon)
                .expect("valid sensor")
        })
        .collect();
    TestInstance { model, ground }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
