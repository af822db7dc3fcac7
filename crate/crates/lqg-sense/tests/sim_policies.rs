//! Paired policy comparisons in the closed loop: the optimal admissible
//! policy dominates the zero policy, and richer sensor sets dominate poorer
//! ones in mean cost.

mod common;

use lqg_sense::guarantees::check_system_condition;
use lqg_sense::model::SensorSet;
use lqg_sense::riccati::backward_riccati;
use lqg_sense::sim::{simulate, simulate_policy, ControlLaw, SimOptions};

use common::random_instance;

#[test]
fn zero_policy_never_beats_lqg_in_mean() {
    let mut checked = 0;
    for seed in 0..8u64 {
        let inst = random_instance(700 + seed, 3, 2, 6, 3);
        let ricc = backward_riccati(&inst.model).unwrap();
        let (system_ok, _) = check_system_condition(&inst.model, &ricc);
        if !system_ok {
            continue;
        }
        checked += 1;
        let s = SensorSet::all(&inst.ground);
        let lqg = simulate(&inst.model, &ricc, &inst.ground, &s, 2000, 50 + seed).unwrap();
        let zero = simulate_policy(
            &inst.model,
            &ricc,
            &inst.ground,
            &s,
            &SimOptions::new(2000, 50 + seed).control(ControlLaw::Zero),
        )
        .unwrap();
        assert!(
            zero.mean_cost >= lqg.mean_cost,
            "seed {seed}: zero {} < lqg {}",
            zero.mean_cost,
            lqg.mean_cost
        );
    }
    assert!(
        checked >= 4,
        "too few instances passed the system condition"
    );
}

#[test]
fn full_sensor_set_beats_no_sensors_in_mean() {
    for seed in 0..4u64 {
        let inst = random_instance(800 + seed, 3, 1, 6, 3);
        let ricc = backward_riccati(&inst.model).unwrap();
        let all = simulate(
            &inst.model,
            &ricc,
            &inst.ground,
            &SensorSet::all(&inst.ground),
            2000,
            60 + seed,
        )
        .unwrap();
        let none = simulate(
            &inst.model,
            &ricc,
            &inst.ground,
            &SensorSet::empty(),
            2000,
            60 + seed,
        )
        .unwrap();
        assert!(
            all.mean_cost <= none.mean_cost,
            "seed {seed}: all {} > none {}",
            all.mean_cost,
            none.mean_cost
        );
    }
}
