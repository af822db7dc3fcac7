//! Sensing-design cost functionals and the selection policies: greedy,
//! brute-force optimal, logdet baseline, pseudo-random baseline, and the
//! all-sensors reference.
//!
//! The design cost of a sensor set is `J(S) = sum_t tr(Theta_t Sigma_{t|t}(S))`
//! and the full expected LQG cost it induces is
//! `g(S) = tr(N_1 Sigma_{1|0}) + sum_t [tr(Theta_t Sigma_{t|t}(S)) + tr(W_t S_t)]`,
//! the minimum of the control problem's objective over policies for fixed `S`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kalman::covariance_trajectory;
use crate::linalg;
use crate::model::{Sensor, SensorSet, TimeVaryingSystem};
use crate::riccati::RiccatiSolution;

/// Default cap on the number of subsets brute-force enumeration will visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    GreedyLqg,
    BruteForce,
    Logdet,
    PseudoRandom,
    AllSensors,
}

/// Outcome of a selection policy.
///
/// `iterations` lists `(added sensor id, policy objective after addition)`
/// for the greedy policies and is empty for the one-shot policies; its cost
/// column is non-increasing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub chosen: SensorSet,
    /// Design cost `J(S) = sum_t tr(Theta_t Sigma_{t|t}(S))`.
    pub j_cost: f64,
    /// Full expected LQG cost `g(S)`.
    pub g_cost: f64,
    pub iterations: Vec<(usize, f64)>,
    pub policy: SelectionPolicy,
}

/// `J(S) = sum_t tr(Theta_t Sigma_{t|t}(S))`, the sensor-dependent part of the
/// LQG cost; non-negative.
pub fn selection_cost(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    s: &SensorSet,
) -> Result<f64> {
    let traj = covariance_trajectory(model, ground_set, s)?;
    Ok((1..=model.horizon())
        .map(|t| linalg::trace_prod(ricc.theta(t), traj.filtered(t)))
        .sum())
}

/// Sensor-independent part of `g`: `tr(N_1 Sigma_{1|0}) + sum_t tr(W_t S_t)`.
pub fn cost_offset(model: &TimeVaryingSystem, ricc: &RiccatiSolution) -> f64 {
    let prior_term = linalg::trace_prod(ricc.n(1), model.sigma_1_0());
    let noise_term: f64 = (1..=model.horizon())
        .map(|t| linalg::trace_prod(model.w(t), ricc.s(t)))
        .sum();
    prior_term + noise_term
}

/// `g(S)`, the minimum achievable expected LQG cost for fixed sensor set `S`.
pub fn expected_lqg_cost(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    s: &SensorSet,
) -> Result<f64> {
    Ok(cost_offset(model, ricc) + selection_cost(model, ricc, ground_set, s)?)
}

fn report(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    chosen: SensorSet,
    iterations: Vec<(usize, f64)>,
    policy: SelectionPolicy,
) -> Result<SelectionReport> {
    let j_cost = selection_cost(model, ricc, ground_set, &chosen)?;
    Ok(SelectionReport {
        j_cost,
        g_cost: cost_offset(model, ricc) + j_cost,
        chosen,
        iterations,
        policy,
    })
}

fn check_budget(k: usize, ground_set: &[Sensor]) -> Result<()> {
    if k > ground_set.len() {
        return Err(Error::BudgetExceedsGroundSet {
            k,
            ground: ground_set.len(),
        });
    }
    Ok(())
}

/// Greedy selection driven by a per-candidate objective. Candidates within a
/// round are evaluated in parallel; the argmin is reduced deterministically
/// with ties broken by smallest sensor id.
fn greedy_by<F>(
    ground_set: &[Sensor],
    k: usize,
    objective: F,
) -> Result<(SensorSet, Vec<(usize, f64)>)>
where
    F: Fn(&SensorSet) -> Result<f64> + Sync,
{
    check_budget(k, ground_set)?;
    let mut chosen = SensorSet::empty();
    let mut iterations = Vec::with_capacity(k);
    for _ in 0..k {
        let mut candidates: Vec<usize> = ground_set
            .iter()
            .map(Sensor::id)
            .filter(|id| !chosen.contains(*id))
            .collect();
        candidates.sort_unstable();
        let scored: Vec<(usize, f64)> = candidates
            .par_iter()
            .map(|&id| objective(&chosen.with(id)).map(|cost| (id, cost)))
            .collect::<Result<_>>()?;
        // Strict `<` over ascending ids keeps the smallest id on ties.
        let (best_id, best_cost) = scored
            .into_iter()
            .fold(None::<(usize, f64)>, |best, (id, cost)| match best {
                Some((_, c)) if cost >= c => best,
                _ => Some((id, cost)),
            })
            .expect("non-empty candidate set");
        chosen = chosen.with(best_id);
        iterations.push((best_id, best_cost));
    }
    Ok((chosen, iterations))
}

/// Greedy minimization of the design cost: each round evaluates
/// `sum_t tr(Theta_t Sigma_{t|t}(S u {a}))` for every remaining candidate by
/// running the full covariance recursion, then keeps the minimizer.
pub fn greedy_select(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    k: usize,
) -> Result<SelectionReport> {
    let (chosen, iterations) = greedy_by(ground_set, k, |s| {
        selection_cost(model, ricc, ground_set, s)
    })?;
    report(
        model,
        ricc,
        ground_set,
        chosen,
        iterations,
        SelectionPolicy::GreedyLqg,
    )
}

/// Control-agnostic greedy baseline: minimizes the average log-determinant of
/// the filtered covariance over the horizon, ignoring `Theta_t`.
pub fn logdet_select(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    k: usize,
) -> Result<SelectionReport> {
    let horizon = model.horizon() as f64;
    let (chosen, iterations) = greedy_by(ground_set, k, |s| {
        let traj = covariance_trajectory(model, ground_set, s)?;
        Ok((1..=model.horizon())
            .map(|t| linalg::logdet_spd(traj.filtered(t)))
            .sum::<f64>()
            / horizon)
    })?;
    report(
        model,
        ricc,
        ground_set,
        chosen,
        iterations,
        SelectionPolicy::Logdet,
    )
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Lexicographic k-combinations of `items`.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(
        items: &[usize],
        k: usize,
        start: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining = k - current.len();
        for i in start..=items.len().saturating_sub(remaining) {
            current.push(items[i]);
            rec(items, k, i + 1, current, out);
            current.pop();
        }
    }
    if k == 0 {
        out.push(Vec::new());
    } else if k <= items.len() {
        rec(items, k, 0, &mut current, &mut out);
    }
    out
}

/// Exact minimizer of the design cost over all subsets of cardinality exactly
/// `k` (monotonicity makes that optimal among `|S| <= k`). Ties are broken by
/// lexicographic id order. Refuses instances with more than `cap` subsets.
pub fn brute_force_select_capped(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    k: usize,
    cap: u128,
) -> Result<SelectionReport> {
    check_budget(k, ground_set)?;
    let count = binomial(ground_set.len(), k);
    if count > cap {
        return Err(Error::EnumerationCapExceeded {
            combinations: count,
            cap,
        });
    }
    let mut ids: Vec<usize> = ground_set.iter().map(Sensor::id).collect();
    ids.sort_unstable();
    let subsets = combinations(&ids, k);
    let costs: Vec<f64> = subsets
        .par_iter()
        .map(|ids| {
            selection_cost(
                model,
                ricc,
                ground_set,
                &SensorSet::new(ids.iter().copied()),
            )
        })
        .collect::<Result<_>>()?;
    // Strict `<` over lexicographic enumeration order keeps the
    // lexicographically smallest subset on ties.
    let mut best = 0;
    for i in 1..costs.len() {
        if costs[i] < costs[best] {
            best = i;
        }
    }
    report(
        model,
        ricc,
        ground_set,
        SensorSet::new(subsets[best].iter().copied()),
        Vec::new(),
        SelectionPolicy::BruteForce,
    )
}

pub fn brute_force_select(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    k: usize,
) -> Result<SelectionReport> {
    brute_force_select_capped(model, ricc, ground_set, k, DEFAULT_ENUMERATION_CAP)
}

/// Pseudo-random baseline: keeps every sensor whose tag is in the scenario's
/// mandatory list, then fills the remaining budget uniformly at random
/// (seeded) from the rest. Deterministic for a fixed seed.
pub fn pseudo_random_select(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
    k: usize,
    mandatory_tags: &[String],
    seed: u64,
) -> Result<SelectionReport> {
    check_budget(k, ground_set)?;
    let is_mandatory = |s: &Sensor| {
        s.tag()
            .is_some_and(|t| mandatory_tags.iter().any(|m| m == t))
    };
    let mut mandatory: Vec<usize> = ground_set
        .iter()
        .filter(|s| is_mandatory(s))
        .map(Sensor::id)
        .collect();
    mandatory.sort_unstable();
    if mandatory.len() > k {
        return Err(Error::MandatoryExceedsBudget {
            mandatory: mandatory.len(),
            k,
        });
    }
    let mut pool: Vec<usize> = ground_set
        .iter()
        .filter(|s| !is_mandatory(s))
        .map(Sensor::id)
        .collect();
    pool.sort_unstable();
    let need = k - mandatory.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, pool.len(), need);
    let chosen = SensorSet::new(mandatory.into_iter().chain(picked.iter().map(|i| pool[i])));
    report(
        model,
        ricc,
        ground_set,
        chosen,
        Vec::new(),
        SelectionPolicy::PseudoRandom,
    )
}

/// Reference report for the full ground set (infeasible under the budget; used
/// for comparison only).
pub fn all_sensors_report(
    model: &TimeVaryingSystem,
    ricc: &RiccatiSolution,
    ground_set: &[Sensor],
) -> Result<SelectionReport> {
    report(
        model,
        ricc,
        ground_set,
        SensorSet::all(ground_set),
        Vec::new(),
        SelectionPolicy::AllSensors,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::backward_riccati;
    use nalgebra::DMatrix;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn scalar_model() -> TimeVaryingSystem {
        TimeVaryingSystem::time_invariant(
            1,
            scalar(1.0),
            scalar(1.0),
            scalar(1.0),
            scalar(1.0),
            scalar(1.0),
            scalar(1.0),
        )
        .unwrap()
    }

    fn scalar_sensor(id: usize, tag: Option<&str>, c: f64, v: f64) -> Sensor {
        Sensor::time_invariant(id, tag.map(String::from), scalar(c), scalar(v), 1).unwrap()
    }

    #[test]
    fn zero_theta_gives_zero_cost() {
        let model = TimeVaryingSystem::time_invariant(
            2,
            scalar(1.0),
            scalar(0.0),
            scalar(1.0),
            scalar(1.0),
            scalar(1.0),
            scalar(1.0),
        )
        .unwrap();
        let ricc = backward_riccati(&model).unwrap();
        let cost = selection_cost(&model, &ricc, &[], &SensorSet::empty()).unwrap();
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn scalar_hand_values() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let j = selection_cost(&model, &ricc, &[], &SensorSet::empty()).unwrap();
        assert!((j - 0.5).abs() < 1e-14);
        let g = expected_lqg_cost(&model, &ricc, &[], &SensorSet::empty()).unwrap();
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn g_decomposes_as_offset_plus_j() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![scalar_sensor(0, None, 1.0, 1.0)];
        let s = SensorSet::new([0]);
        let g = expected_lqg_cost(&model, &ricc, &ground, &s).unwrap();
        let j = selection_cost(&model, &ricc, &ground, &s).unwrap();
        let offset = cost_offset(&model, &ricc);
        assert!((g - (j + offset)).abs() <= 1e-10 * g.abs());
    }

    #[test]
    fn greedy_empty_budget() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![scalar_sensor(0, None, 1.0, 1.0)];
        let rep = greedy_select(&model, &ricc, &ground, 0).unwrap();
        assert!(rep.chosen.is_empty());
        assert!((rep.j_cost - 0.5).abs() < 1e-14);
        assert!(rep.iterations.is_empty());
    }

    #[test]
    fn greedy_exhaustive_budget_takes_everything() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![
            scalar_sensor(0, None, 1.0, 1.0),
            scalar_sensor(1, None, 2.0, 4.0),
            scalar_sensor(2, None, 0.5, 2.0),
        ];
        let rep = greedy_select(&model, &ricc, &ground, 3).unwrap();
        assert_eq!(rep.chosen, SensorSet::all(&ground));
        let costs: Vec<f64> = rep.iterations.iter().map(|(_, c)| *c).collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn budget_larger_than_ground_set_is_rejected() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![scalar_sensor(0, None, 1.0, 1.0)];
        let err = greedy_select(&model, &ricc, &ground, 2).unwrap_err();
        assert!(err.to_string().contains("budget exceeds ground set"));
    }

    #[test]
    fn brute_force_picks_dominating_sensor() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![
            scalar_sensor(0, None, 1.0, 1e4),
            scalar_sensor(1, None, 1.0, 1e-4),
            scalar_sensor(2, None, 1.0, 1e4),
        ];
        let rep = brute_force_select(&model, &ricc, &ground, 1).unwrap();
        assert_eq!(rep.chosen, SensorSet::new([1]));
        let greedy = greedy_select(&model, &ricc, &ground, 1).unwrap();
        assert_eq!(greedy.chosen, rep.chosen);
    }

    #[test]
    fn brute_force_empty_budget() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![scalar_sensor(0, None, 1.0, 1.0)];
        let rep = brute_force_select(&model, &ricc, &ground, 0).unwrap();
        assert!(rep.chosen.is_empty());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground: Vec<Sensor> = (0..6).map(|i| scalar_sensor(i, None, 1.0, 1.0)).collect();
        let err = brute_force_select_capped(&model, &ricc, &ground, 3, 5).unwrap_err();
        assert!(err
            .to_string()
            .contains("instance too large for enumeration"));
    }

    #[test]
    fn pseudo_random_is_deterministic_and_respects_mandatory() {
        let model = scalar_model();
        let ricc = backward_riccati(&model).unwrap();
        let ground = vec![
            scalar_sensor(0, Some("gps"), 1.0, 2.0),
            scalar_sensor(1, Some("gps"), 1.0, 2.0),
            scalar_sensor(2, Some("lidar"), 1.0, 0.1),
            scalar_sensor(3, Some("lidar"), 1.0, 0.1),
            scalar_sensor(4, Some("lidar"), 1.0, 0.1),
        ];
        let tags = vec!["gps".to_string()];

        // k equal to the mandatory count selects exactly the gps set.
        let rep = pseudo_random_select(&model, &ricc, &ground, 2, &tags, 13).unwrap();
        assert_eq!(rep.chosen, SensorSet::new([0, 1]));

        // Same seed twice gives the identical set.
        let a = pseudo_random_select(&model, &ricc, &ground, 3, &tags, 7).unwrap();
        let b = pseudo_random_select(&model, &ricc, &ground, 3, &tags, 7).unwrap();
        assert_eq!(a.chosen, b.chosen);
        assert!(a.chosen.contains(0) && a.chosen.contains(1));

        // Exhaustive budget returns the whole ground set.
        let full = pseudo_random_select(&model, &ricc, &ground, 5, &tags, 99).unwrap();
        assert_eq!(full.chosen, SensorSet::all(&ground));

        // Mandatory set larger than the budget errors.
        let err = pseudo_random_select(&model, &ricc, &ground, 1, &tags, 0).unwrap_err();
        assert!(matches!(err, Error::MandatoryExceedsBudget { .. }));
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(binomial(10, 6), 210);
        assert_eq!(binomial(6, 0), 1);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(21, 6), 54264);
    }
}
