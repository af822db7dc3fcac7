//! Supermodularity-ratio computation (exact and lower bound), the
//! near-optimality conditions on the cost matrices, and numeric verification
//! of the recursion identities behind them.
//!
//! The supermodularity ratio of the non-increasing design cost `f` is
//!
//! ```text
//! gamma = min over A subset V, distinct x, x' in V \ A of
//!         [f(A) - f(A u {x})] / [f(A u {x'}) - f(A u {x', x})]
//! ```
//!
//! and drives the greedy suboptimality bound `exp(-gamma)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::covariance_trajectory;
use crate::linalg;
use crate::model::{normalized_measurement, Sensor, SensorSet, TimeVaryingSystem};
use crate::riccati::RiccatiSolution;
use crate::selection::{
    brute_force_select_capped, expected_lqg_cost, greedy_select, selection_cost,
    DEFAULT_ENUMERATION_CAP,
};

/// Largest ground set for which the exact ratio is enumerated.
pub const GAMMA_EXACT_MAX_GROUND: usize = 10;

/// Table of design costs for every subset of the ground set, indexed by
/// bitmask over the sorted sensor ids.
struct CostTable {
    ids: Vec<usize>,
    f: Vec<f64>,
}

impl CostTable {
    fn build(
        model: &TimeVaryingSystem,
        ricc: &RiccatiSolution,
        ground_set: &[Sensor],
    ) -> Result<Self> {
        let mut ids: Vec<usize> = ground_set.iter().map(Sensor::id).collect();
        ids.sort_unstable();
        let n = ids.len();
        let f: Vec<f64> = (0u32..1u32 << n)
            .into_par_iter()
            .map(|mask| {
                let subset = SensorSet::new(
                    ids.iter()
                        .enumerate()
                        .filter(|(bit, _)| mask >> bit & 1 == 1)
                        .map(|(_, &id)| id),
                );
                selection_cost(model, ricc, ground_set, &subset)
            })
            .collect::<Result<_>>()?;
        Ok(Self { ids, f })
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn full_mask(&self) -> u32 {
        (1u32 << self.ids.len()) - 1
    }

    /// Float-noise threshold for marginal drops, relative to the magnitude of
    /// the cost values and the total achievable decrease.
    fn drop_tolerance(&self, rel: f64) -> f64 {
        let f_empty = self.f[0];
        let f_full = self.f[self.full_mask() as usize];
        rel * (f_empty - f_full).max(f_empty.abs()).max(1e-300)
    }
}

/// Exact supermodularity ratio of the design cost, by enumeration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaExactReport {
    /// The ratio, clamped to [0, 1].
    pub value: f64,
    /// No valid (A, x, x') triple existed; `value` is 1 by the empty-minimum
    /// convention.
    pub vacuous: bool,
    /// Triples skipped because the denominator sat below the noise threshold.
    pub degenerate_pairs: u64,
    /// Triples that contributed a ratio.
    pub evaluated_pairs: u64,
}

/// Enumerates all `(A, x, x')` triples over subsets of the ground set.
/// Requires `|V| <= GAMMA_EXACT_MAX_GROUND`. Denominators below
/// `1e-12 * scale` are 0/0-degenerate and skipped (counted); zero numerators
/// against a real denominator contribute 0.
pub fn gamma_exact(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
) -> Result<GammaExactReport> {
    if ground_set.len() > GAMMA_EXACT_MAX_GROUND {
        return Err(Error::GroundSetTooLarge {
            ground: ground_set.len(),
            max: GAMMA_EXACT_MAX_GROUND,
        });
    }
    let table = CostTable::build(model, ricc, ground_set)?;
    Ok(gamma_from_table(&table))
}

fn gamma_from_table(table: &CostTable) -> GammaExactReport {
    let n = table.len();
    let tol = table.drop_tolerance(1e-12);
    let mut min_ratio = f64::INFINITY;
    let mut degenerate = 0u64;
    let mut evaluated = 0u64;
    for mask in 0..1u32 << n {
        for x in 0..n {
            if mask >> x & 1 == 1 {
                continue;
            }
            let num = table.f[mask as usize] - table.f[(mask | 1 << x) as usize];
            for xp in 0..n {
                if xp == x || mask >> xp & 1 == 1 {
                    continue;
                }
                let with_xp = mask | 1 << xp;
                let den = table.f[with_xp as usize] - table.f[(with_xp | 1 << x) as usize];
                if den < tol {
                    degenerate += 1;
                    continue;
                }
                evaluated += 1;
                let ratio = if num < tol { 0.0 } else { num / den };
                if ratio < min_ratio {
                    min_ratio = ratio;
                }
            }
        }
    }
    if evaluated == 0 {
        GammaExactReport {
            value: 1.0,
            vacuous: true,
            degenerate_pairs: degenerate,
            evaluated_pairs: 0,
        }
    } else {
        GammaExactReport {
            value: min_ratio.clamp(0.0, 1.0),
            vacuous: false,
            degenerate_pairs: degenerate,
            evaluated_pairs: evaluated,
        }
    }
}

/// Checks the diminishing-returns inequality
/// `f(A) - f(A u {x}) >= f(A u {x'}) - f(A u {x', x})` on every triple, within
/// `rel * scale`. Passing implies the design cost is supermodular on this
/// instance (up to float noise).
pub fn diminishing_returns_screen(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    rel_tol: f64,
) -> Result<bool> {
    if ground_set.len() > GAMMA_EXACT_MAX_GROUND {
        return Err(Error::GroundSetTooLarge {
            ground: ground_set.len(),
            max: GAMMA_EXACT_MAX_GROUND,
        });
    }
    let table = CostTable::build(model, ricc, ground_set)?;
    let tol = table.drop_tolerance(rel_tol);
    let n = table.len();
    for mask in 0..1u32 << n {
        for x in 0..n {
            if mask >> x & 1 == 1 {
                continue;
            }
            let num = table.f[mask as usize] - table.f[(mask | 1 << x) as usize];
            for xp in 0..n {
                if xp == x || mask >> xp & 1 == 1 {
                    continue;
                }
                let with_xp = mask | 1 << xp;
                let den = table.f[with_xp as usize] - table.f[(with_xp | 1 << x) as usize];
                if num < den - tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Whether `sum_t Theta_t` is positive definite, with its margin
/// `lambda_min(sum_t Theta_t)`.
pub fn check_theta_condition(ricc: &RiccatiSolution) -> (bool, f64) {
    let theta_sum = ricc.theta_sum();
    let eigs = linalg::sym_eigenvalues(&theta_sum);
    let margin = eigs.min();
    (margin > linalg::pd_tolerance(eigs.max()), margin)
}

/// Whether `sum_t (A_t...A_1)^T Q_t (A_t...A_1) > N_1` strictly, with the
/// margin `lambda_min(L - N_1)`. When true, the all-zeroes control policy is
/// suboptimal for the noiseless perfect-information problem for every nonzero
/// initial condition.
pub fn check_system_condition(model: &TimeVaryingSystem, ricc: &RiccatiSolution) -> (bool, f64) {
    let n = model.state_dim();
    let mut transition = DMatrix::<f64>::identity(n, n);
    let mut level = DMatrix::<f64>::zeros(n, n);
    for t in 1..=model.horizon() {
        transition = model.a(t) * transition;
        level += transition.transpose() * model.q(t) * &transition;
    }
    let diff = linalg::symmetrize(&(level - ricc.n(1)));
    let eigs = linalg::sym_eigenvalues(&diff);
    let margin = eigs.min();
    (margin > linalg::pd_tolerance(eigs.max().abs()), margin)
}

/// Max relative residuals of the recursion identities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `Theta_t = A_t^T S_t A_t + Q_{t-1} - S_{t-1}` over `t = 2..T`.
    pub theta_recurrence: f64,
    /// `sum_t (A_{t-1}...A_1)^T Theta_t (A_{t-1}...A_1)
    ///    = sum_t (A_t...A_1)^T Q_t (A_t...A_1) - N_1`.
    pub telescoping: f64,
}

pub fn verify_identities(model: &TimeVaryingSystem, ricc: &RiccatiSolution) -> IdentityResiduals {
    let n = model.state_dim();
    let mut theta_recurrence = 0.0f64;
    for t in 2..=model.horizon() {
        let rhs = model.a(t).transpose() * ricc.s(t) * model.a(t) + model.q(t - 1) - ricc.s(t - 1);
        theta_recurrence = theta_recurrence.max(linalg::relative_residual(ricc.theta(t), &rhs));
    }

    let mut lhs = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, n);
    let mut transition = DMatrix::<f64>::identity(n, n);
    for t in 1..=model.horizon() {
        // transition holds A_{t-1}...A_1 here.
        lhs += transition.transpose() * ricc.theta(t) * &transition;
        transition = model.a(t) * transition;
        rhs += transition.transpose() * model.q(t) * &transition;
    }
    rhs -= ricc.n(1);
    IdentityResiduals {
        theta_recurrence,
        telescoping: linalg::relative_residual(&lhs, &rhs),
    }
}

/// Hypothesis flags for the closed-form ratio lower bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AssumptionFlags {
    /// `sum_t Theta_t > 0` (strictly).
    pub theta_condition: bool,
    /// Every normalized measurement matrix has unit Frobenius norm.
    pub unit_frobenius: bool,
    /// `tr[Sigma_{t|t}(empty)] <= lambda_max^2[Sigma_{t|t}(empty)]` for all t.
    pub trace_condition: bool,
}

impl AssumptionFlags {
    pub fn all_met(&self) -> bool {
        self.theta_condition && self.unit_frobenius && self.trace_condition
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaLowerBoundReport {
    pub value: f64,
    pub assumptions: AssumptionFlags,
    pub theta_margin: f64,
}

/// Closed-form lower bound on the supermodularity ratio: the product of the
/// spread of `sum_t Theta_t`, the squared spread of the best/worst filtered
/// covariances, and the normalized-sensor innovation fraction. Returns 0 with
/// the flag down when `sum_t Theta_t` is singular. The normalization
/// hypotheses are recorded, not enforced.
pub fn gamma_lower_bound(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
) -> Result<GammaLowerBoundReport> {
    let (theta_ok, theta_margin) = check_theta_condition(ricc);
    let horizon = model.horizon();

    let traj_full = covariance_trajectory(model, ground_set, &SensorSet::all(ground_set))?;
    let traj_empty = covariance_trajectory(model, ground_set, &SensorSet::empty())?;

    let mut unit_frobenius = !ground_set.is_empty();
    let mut cbar_min = f64::INFINITY;
    let mut cbar_max = f64::NEG_INFINITY;
    for sensor in ground_set {
        for t in 1..=horizon {
            let cbar = normalized_measurement(sensor, t)?;
            if (cbar.norm() - 1.0).abs() > 1e-6 {
                unit_frobenius = false;
            }
            let on_full = &cbar * traj_full.filtered(t) * cbar.transpose();
            let on_empty = &cbar * traj_empty.filtered(t) * cbar.transpose();
            cbar_min = cbar_min.min(linalg::lambda_min(&on_full));
            cbar_max = cbar_max.max(linalg::lambda_max(&on_empty));
        }
    }

    let mut trace_condition = true;
    let mut full_min = f64::INFINITY;
    let mut empty_max = f64::NEG_INFINITY;
    for t in 1..=horizon {
        let lam_max_empty = linalg::lambda_max(traj_empty.filtered(t));
        if traj_empty.filtered(t).trace() > lam_max_empty * lam_max_empty + 1e-12 {
            trace_condition = false;
        }
        full_min = full_min.min(linalg::lambda_min(traj_full.filtered(t)));
        empty_max = empty_max.max(lam_max_empty);
    }

    let assumptions = AssumptionFlags {
        theta_condition: theta_ok,
        unit_frobenius,
        trace_condition,
    };

    if !theta_ok || ground_set.is_empty() {
        return Ok(GammaLowerBoundReport {
            value: 0.0,
            assumptions,
            theta_margin,
        });
    }

    let theta_sum = ricc.theta_sum();
    let spread = theta_margin / linalg::lambda_max(&theta_sum);
    let covariance_fraction = (full_min * full_min) / (empty_max * empty_max);
    let innovation_fraction = (1.0 + cbar_min) / (2.0 + cbar_max);
    Ok(GammaLowerBoundReport {
        value: spread * covariance_fraction * innovation_fraction,
        assumptions,
        theta_margin,
    })
}

/// Greedy-vs-optimal ratio `(h - g*) / (g(empty) - g*)` against the
/// `exp(-gamma)` bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuboptimalityReport {
    pub greedy_cost: f64,
    pub optimal_cost: f64,
    pub empty_cost: f64,
    /// `None` when `g(empty) = g*` (0/0; the bound is trivially satisfied).
    pub ratio: Option<f64>,
    pub degenerate: bool,
    pub gamma_exact: Option<f64>,
    pub gamma_lower_bound: f64,
    pub exp_neg_gamma_exact: Option<f64>,
    pub exp_neg_gamma_lower: f64,
}

pub fn suboptimality_report(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    k: usize,
) -> Result<SuboptimalityReport> {
    let greedy = greedy_select(model, ricc, ground_set, k)?;
    let optimal = brute_force_select_capped(model, ricc, ground_set, k, DEFAULT_ENUMERATION_CAP)?;
    let empty_cost = expected_lqg_cost(model, ricc, ground_set, &SensorSet::empty())?;
    let h = greedy.g_cost;
    let g_star = optimal.g_cost;
    let gap = empty_cost - g_star;
    let degenerate = gap.abs() <= 1e-12 * empty_cost.abs().max(1.0);
    let ratio = if degenerate {
        None
    } else {
        Some((h - g_star) / gap)
    };
    let exact = if ground_set.len() <= GAMMA_EXACT_MAX_GROUND {
        Some(gamma_exact(model, ricc, ground_set)?)
    } else {
        None
    };
    let lower = gamma_lower_bound(model, ricc, ground_set)?;
    Ok(SuboptimalityReport {
        greedy_cost: h,
        optimal_cost: g_star,
        empty_cost,
        ratio,
        degenerate,
        gamma_exact: exact.map(|g| g.value),
        gamma_lower_bound: lower.value,
        exp_neg_gamma_exact: exact.map(|g| (-g.value).exp()),
        exp_neg_gamma_lower: (-lower.value).exp(),
    })
}

/// Everything the guarantees layer can say about one instance, serializable
/// to JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaCertificate {
    pub gamma_exact: Option<f64>,
    pub gamma_vacuous: bool,
    pub degenerate_pairs: u64,
    pub gamma_lower_bound: f64,
    /// `lambda_min(sum_t Theta_t)`.
    pub theta_sum_min_eig: f64,
    /// `lambda_min(sum_t (A_t...A_1)^T Q_t (A_t...A_1) - N_1)`.
    pub system_condition_margin: f64,
    /// `exp(-gamma)` using the best available gamma.
    pub bound_value: f64,
    pub assumptions_met: AssumptionFlags,
    pub residuals: IdentityResiduals,
}

pub fn certificate(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
) -> Result<GammaCertificate> {
    let exact = if ground_set.len() <= GAMMA_EXACT_MAX_GROUND {
        Some(gamma_exact(model, ricc, ground_set)?)
    } else {
        None
    };
    let lower = gamma_lower_bound(model, ricc, ground_set)?;
    let (_, theta_margin) = check_theta_condition(ricc);
    let (_, system_margin) = check_system_condition(model, ricc);
    let best_gamma = exact.map(|g| g.value).unwrap_or(lower.value);
    Ok(GammaCertificate {
        gamma_exact: exact.map(|g| g.value),
        gamma_vacuous: exact.is_some_and(|g| g.vacuous),
        degenerate_pairs: exact.map_or(0, |g| g.degenerate_pairs),
        gamma_lower_bound: lower.value,
        theta_sum_min_eig: theta_margin,
        system_condition_margin: system_margin,
        bound_value: (-best_gamma).exp(),
        assumptions_met: lower.assumptions,
        residuals: verify_identities(model, ricc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::backward_riccati;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn scalar_model(horizon: usize, a: f64, b: f64, q: f64, r: f64) -> TimeVaryingSystem {
        TimeVaryingSystem::time_invariant(
            horizon,
            scalar(a),
            scalar(b),
            scalar(1.0),
            scalar(q),
            scalar(r),
            scalar(1.0),
        )
        .unwrap()
    }

    fn scalar_sensor(id: usize, c: f64, v: f64, horizon: usize) -> Sensor {
        Sensor::time_invariant(id, None, scalar(c), scalar(v), horizon).unwrap()
    }

    #[test]
    fn single_sensor_ground_set_is_vacuous() {
        let model = scalar_model(1, 1.0, 1.0, 1.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![scalar_sensor(0, 1.0, 1.0, 1)];
        let report = gamma_exact(&model, &ricc, &ground).unwrap();
        assert!(report.vacuous);
        assert_eq!(report.value, 1.0);
    }

    #[test]
    fn oversized_ground_set_is_rejected() {
        let model = scalar_model(1, 1.0, 1.0, 1.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let ground: Vec<Sensor> = (0..11).map(|i| scalar_sensor(i, 1.0, 1.0, 1)).collect();
        assert!(matches!(
            gamma_exact(&model, &ricc, &ground),
            Err(Error::GroundSetTooLarge { .. })
        ));
    }

    #[test]
    fn theta_condition_hand_values() {
        let model = scalar_model(1, 1.0, 1.0, 1.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let (ok, margin) = check_theta_condition(&ricc);
        assert!(ok);
        assert!((margin - 0.5).abs() < 1e-12);

        let zero_q = scalar_model(2, 1.0, 1.0, 0.0, 1.0);
        let ricc = backward_riccati(&zero_q).unwrap();
        let (ok, margin) = check_theta_condition(&ricc);
        assert!(!ok);
        assert_eq!(margin, 0.0);
    }

    #[test]
    fn system_condition_hand_values() {
        let model = scalar_model(1, 1.0, 1.0, 1.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let (ok, margin) = check_system_condition(&model, &ricc);
        assert!(ok);
        assert!((margin - 0.5).abs() < 1e-12);

        let zero_q = scalar_model(2, 1.0, 1.0, 0.0, 1.0);
        let ricc = backward_riccati(&zero_q).unwrap();
        let (ok, margin) = check_system_condition(&zero_q, &ricc);
        assert!(!ok);
        assert_eq!(margin, 0.0);
    }

    #[test]
    fn system_condition_margin_grows_as_r_shrinks() {
        let mut last = f64::NEG_INFINITY;
        for r in [1.0, 0.1, 0.01] {
            let model = scalar_model(1, 1.0, 1.0, 1.0, r);
            let ricc = backward_riccati(&model).unwrap();
            let (ok, margin) = check_system_condition(&model, &ricc);
            assert!(ok);
            assert!(margin > last);
            last = margin;
        }
    }

    #[test]
    fn identities_hold_on_hand_instance() {
        let model = scalar_model(1, 1.0, 1.0, 1.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let res = verify_identities(&model, &ricc);
        assert!(res.theta_recurrence <= 1e-15);
        assert!(res.telescoping <= 1e-12);
    }

    #[test]
    fn identities_trivial_on_zero_q() {
        let model = scalar_model(3, 1.1, 0.7, 0.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let res = verify_identities(&model, &ricc);
        assert_eq!(res.theta_recurrence, 0.0);
        assert_eq!(res.telescoping, 0.0);
    }

    #[test]
    fn lower_bound_zero_when_theta_singular() {
        let model = scalar_model(2, 1.0, 1.0, 0.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![scalar_sensor(0, 1.0, 1.0, 2)];
        let report = gamma_lower_bound(&model, &ricc, &ground).unwrap();
        assert_eq!(report.value, 0.0);
        assert!(!report.assumptions.theta_condition);
    }

    #[test]
    fn empty_budget_suboptimality_is_degenerate() {
        let model = scalar_model(1, 1.0, 1.0, 1.0, 1.0);
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![scalar_sensor(0, 1.0, 1.0, 1), scalar_sensor(1, 1.0, 2.0, 1)];
        let report = suboptimality_report(&model, &ricc, &ground, 0).unwrap();
        assert!(report.degenerate);
        assert!(report.ratio.is_none());
    }
}
