//! Supermodularity-ratio machinery against a duplicate enumerator and the
//! closed-form lower bound.

mod common;

use lqg_sense::guarantees::{diminishing_returns_screen, gamma_exact, gamma_lower_bound};
use lqg_sense::model::{Sensor, SensorSet, TimeVaryingSystem};
use lqg_sense::riccati::backward_riccati;
use lqg_sense::selection::selection_cost;
use nalgebra::DMatrix;

use common::{hypothesis_instance, oracle_gamma_exact, oracle_selection_cost, random_instance};

#[test]
fn duplicate_enumerator_agrees() {
    for seed in [11u64, 12, 13] {
        let inst = random_instance(seed, 2, 1, 3, 5);
        let ricc = backward_riccati(&inst.model).unwrap();
        let ours = gamma_exact(&inst.model, &ricc, &inst.ground).unwrap();
        assert!(!ours.vacuous);

        let ids: Vec<usize> = inst.ground.iter().map(|s| s.id()).collect();
        // Same cost path, independently coded enumeration: tight agreement.
        let same_f = |subset: &[usize]| {
            selection_cost(
                &inst.model,
                &ricc,
                &inst.ground,
                &SensorSet::new(subset.iter().copied()),
            )
            .unwrap()
        };
        let dup = oracle_gamma_exact(&ids, &same_f);
        assert!(
            (ours.value - dup).abs() <= 1e-12,
            "seed {seed}: {} vs {dup}",
            ours.value
        );

        // Fully independent cost path (textbook covariances): loose agreement.
        let oracle_f = |subset: &[usize]| {
            oracle_selection_cost(
                &inst.model,
                &ricc,
                &inst.ground,
                &SensorSet::new(subset.iter().copied()),
            )
        };
        let independent = oracle_gamma_exact(&ids, &oracle_f);
        assert!(
            (ours.value - independent).abs() <= 1e-6,
            "seed {seed}: {} vs {independent}",
            ours.value
        );
    }
}

#[test]
fn scalar_one_step_cost_is_supermodular() {
    // For n = 1, T = 1 the design cost is theta / (1/sigma0 + sum_i c_i^2/v_i),
    // whose marginal drops shrink as the set grows; the screen passes and the
    // exact ratio is 1.
    let model = TimeVaryingSystem::time_invariant(
        1,
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
    )
    .unwrap();
    let ricc = backward_riccati(&model).unwrap();
    let ground: Vec<Sensor> = [0.8f64, 1.3, 0.5, 2.0]
        .iter()
        .enumerate()
        .map(|(id, &c)| {
            Sensor::time_invariant(
                id,
                None,
                DMatrix::from_element(1, 1, c),
                DMatrix::from_element(1, 1, 0.7 + 0.2 * id as f64),
                1,
            )
            .unwrap()
        })
        .collect();
    assert!(diminishing_returns_screen(&model, &ricc, &ground, 1e-9).unwrap());
    let report = gamma_exact(&model, &ricc, &ground).unwrap();
    assert!(report.value >= 1.0 - 1e-6, "gamma = {}", report.value);
}

#[test]
fn lower_bound_respects_exact_ratio_under_hypotheses() {
    for seed in 0..5 {
        let inst = hypothesis_instance(seed, 2, 4, 5);
        let ricc = backward_riccati(&inst.model).unwrap();
        let lower = gamma_lower_bound(&inst.model, &ricc, &inst.ground).unwrap();
        assert!(
            lower.assumptions.all_met(),
            "seed {seed}: hypotheses not met {:?}",
            lower.assumptions
        );
        let exact = gamma_exact(&inst.model, &ricc, &inst.ground).unwrap();
        assert!(exact.value >= 0.0 && exact.value <= 1.0);
        assert!(
            lower.value <= exact.value + 1e-9,
            "seed {seed}: lower {} > exact {}",
            lower.value,
            exact.value
        );
        assert!(lower.value >= 0.0 && lower.value <= 1.0);
    }
}
