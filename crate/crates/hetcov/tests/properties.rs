//! Cross-module property tests: feasibility of every weight-producing path,
//! utility masking, movement norms, config validation and serialization.

use hetcov::rng::{stream_rng, Stream};
use hetcov::simulator::run_trial_recorded;
use hetcov::solver::{solve_weights, WeightMatrix};
use hetcov::strategies::{compute_weights, StrategyKind};
use hetcov::utility::{blend_movement, build_utility, DEFAULT_STEP_SIZE};
use hetcov::{
    validate_config, EventField, EventSource, RobotState, SimConfig, SolverParams, Strategy, Vec2,
};
use ndarray::Array2;
use proptest::prelude::*;
// `hetcov::Strategy` shadows the prelude's trait of the same name; bring the
// trait's methods back into scope anonymously.
use proptest::strategy::Strategy as _;

/// One random solver instance: capabilities with nonempty rows, utilities in
/// [0, 10], a feasible previous weight matrix, and regularizer strengths.
#[derive(Debug, Clone)]
struct Instance {
    caps: Array2<u8>,
    s: Array2<f64>,
    w_prev: WeightMatrix,
    gamma1: f64,
    gamma2: f64,
}

fn build_caps(n: usize, e: usize, bits: &[u64]) -> Array2<u8> {
    let mut caps = Array2::<u8>::zeros((n, e));
    for i in 0..n {
        for j in 0..e {
            caps[[i, j]] = ((bits[i] >> j) & 1) as u8;
        }
    }
    caps
}

fn feasible_weights(caps: &Array2<u8>, raw: &[f64]) -> WeightMatrix {
    let (n, e) = caps.dim();
    let mut w = Array2::<f64>::zeros((n, e));
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..e {
            if caps[[i, j]] == 1 {
                w[[i, j]] = raw[i * e + j];
                sum += raw[i * e + j];
            }
        }
        for j in 0..e {
            w[[i, j]] /= sum;
        }
    }
    WeightMatrix { values: w }
}

fn instances() -> impl proptest::strategy::Strategy<Value = Instance> {
    (1usize..=8, 1usize..=5).prop_flat_map(|(n, e)| {
        (
            proptest::collection::vec(1u64..(1u64 << e), n),
            proptest::collection::vec(0.0..=10.0f64, n * e),
            proptest::collection::vec(0.01..=1.0f64, n * e),
            0.0..=5.0f64,
            0.0..=5.0f64,
        )
            .prop_map(move |(bits, s_flat, w_flat, gamma1, gamma2)| {
                let caps = build_caps(n, e, &bits);
                let s = Array2::from_shape_vec((n, e), s_flat).unwrap();
                let w_prev = feasible_weights(&caps, &w_flat);
                Instance {
                    caps,
                    s,
                    w_prev,
                    gamma1,
                    gamma2,
                }
            })
    })
}

/// Row-stochastic within 1e-6, nonnegative, and capability-supported.
fn check_feasible(w: &Array2<f64>, caps: &Array2<u8>) -> Result<(), TestCaseError> {
    let (n, e) = caps.dim();
    for i in 0..n {
        let row_sum: f64 = w.row(i).sum();
        prop_assert!(
            (row_sum - 1.0).abs() <= 1e-6,
            "row {i} sums to {row_sum}"
        );
        for j in 0..e {
            prop_assert!(w[[i, j]] >= 0.0, "negative weight at ({i},{j})");
            if caps[[i, j]] == 0 {
                prop_assert_eq!(w[[i, j]], 0.0, "weight on incapable event ({}, {})", i, j);
            }
        }
    }
    Ok(())
}

fn configs() -> impl proptest::strategy::Strategy<Value = SimConfig> {
    (
        1usize..=20,
        1usize..=6,
        any::<u64>(),
        0u32..=80,
        0.0..=5.0f64,
        0.0..=5.0f64,
        0usize..=3,
        prop::sample::select(Strategy::ALL.to_vec()),
    )
        .prop_map(
            |(n, e, seed, horizon, gamma1, gamma2, failures, strategy)| {
                let mut config = SimConfig::new(n, e, strategy, seed);
                config.horizon = horizon;
                config.gamma1 = gamma1;
                config.gamma2 = gamma2;
                config.failure_count = failures.min(n.saturating_sub(1));
                config.failure_window = [1, horizon.max(1)];
                config
            },
        )
}

proptest! {
    #[test]
    fn solver_output_is_feasible(inst in instances()) {
        let params = SolverParams::default();
        let out = solve_weights(&inst.s, &inst.w_prev, &inst.caps, &params, inst.gamma1, inst.gamma2);
        let out = out.map_err(|e| TestCaseError::fail(format!("solver error: {e}")))?;
        check_feasible(&out.weights.values, &inst.caps)?;
    }

    #[test]
    fn every_strategy_emits_feasible_weights(inst in instances(), seed in any::<u64>()) {
        let params = SolverParams::default();
        for strategy in Strategy::ALL {
            let kind = StrategyKind::for_trial(
                strategy,
                &inst.caps,
                &mut stream_rng(seed, Stream::SingleCapabilityPicks),
            );
            let out = compute_weights(
                &kind, &inst.s, &inst.w_prev, &inst.caps, &params, inst.gamma1, inst.gamma2,
            );
            let out = out.map_err(|e| {
                TestCaseError::fail(format!("{} failed: {e}", strategy.name()))
            })?;
            check_feasible(&out.weights.values, &inst.caps)?;
        }
    }

    /// The non-adaptive strategies depend only on capabilities (and the
    /// per-trial sensor picks), never on the utilities or previous weights,
    /// so their rows stay constant over a trial with a fixed live team.
    #[test]
    fn fixed_strategies_ignore_utilities(
        inst in instances(),
        s2_flat in proptest::collection::vec(0.0..=10.0f64, 8 * 5),
        w2_flat in proptest::collection::vec(0.01..=1.0f64, 8 * 5),
        seed in any::<u64>(),
    ) {
        let params = SolverParams::default();
        let (n, e) = inst.caps.dim();
        let s2 = Array2::from_shape_vec((n, e), s2_flat[..n * e].to_vec()).unwrap();
        let w2 = feasible_weights(&inst.caps, &w2_flat[..n * e]);
        for strategy in [Strategy::EquallyWeighted, Strategy::SingleCapability] {
            let kind = StrategyKind::for_trial(
                strategy,
                &inst.caps,
                &mut stream_rng(seed, Stream::SingleCapabilityPicks),
            );
            let a = compute_weights(&kind, &inst.s, &inst.w_prev, &inst.caps, &params, inst.gamma1, inst.gamma2).unwrap();
            let b = compute_weights(&kind, &s2, &w2, &inst.caps, &params, inst.gamma1, inst.gamma2).unwrap();
            prop_assert_eq!(a.weights.values, b.weights.values);
        }
    }

    /// Blending weighted unit candidates rescales to exactly unit length, or
    /// to no motion at all when the blend cancels out.
    #[test]
    fn blended_displacement_is_unit_or_zero(
        parts in proptest::collection::vec((0.0..=1.0f64, 0.0..std::f64::consts::TAU, any::<bool>()), 1..6),
    ) {
        let weights: Vec<f64> = parts.iter().map(|&(w, _, _)| w).collect();
        let directions: Vec<Vec2> = parts
            .iter()
            .map(|&(_, angle, zero)| {
                if zero {
                    Vec2::ZERO
                } else {
                    Vec2::new(angle.cos(), angle.sin())
                }
            })
            .collect();
        let step = blend_movement(&weights, &directions);
        let norm = step.norm();
        prop_assert!(
            norm == 0.0 || (norm - 1.0).abs() <= 1e-9,
            "blend length {norm}"
        );
    }

    /// Utilities are nonnegative, zero for dead or incapable robots, and a
    /// zero utility always comes with a zero candidate movement.
    #[test]
    fn utilities_are_masked_and_nonnegative(
        robot_data in proptest::collection::vec(
            ((0.0..=100.0f64, 0.0..=100.0f64), 1u64..8, any::<bool>()),
            1..6,
        ),
        source_xy in proptest::collection::vec((0.0..=100.0f64, 0.0..=100.0f64), 3),
    ) {
        let e = 3;
        let robots: Vec<RobotState> = robot_data
            .iter()
            .enumerate()
            .map(|(id, &((x, y), bits, alive))| {
                let caps = (0..e).map(|j| ((bits >> j) & 1) as u8).collect();
                let mut r = RobotState::new(id, Vec2::new(x, y), caps);
                r.alive = alive;
                r
            })
            .collect();
        let fields: Vec<EventField> = source_xy
            .iter()
            .enumerate()
            .map(|(j, &(x, y))| EventField {
                event_type: j,
                sources: vec![EventSource::new(j, Vec2::new(x, y))],
            })
            .collect();
        let utility = build_utility(&robots, &fields, DEFAULT_STEP_SIZE);
        for (i, robot) in robots.iter().enumerate() {
            for j in 0..e {
                let value = utility.values[[i, j]];
                prop_assert!(value >= 0.0);
                if !robot.alive || !robot.can_sense(j) {
                    prop_assert_eq!(value, 0.0);
                }
                if value == 0.0 {
                    prop_assert_eq!(utility.directions[[i, j]], Vec2::ZERO);
                }
            }
        }
    }

    /// The config document survives a JSON round trip unchanged.
    #[test]
    fn config_round_trips_through_json(config in configs()) {
        let text = serde_json::to_string(&config).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, config);
    }

    /// Validation never mutates its input and is idempotent: the same config
    /// yields the same verdict every time.
    #[test]
    fn validation_is_idempotent(config in configs()) {
        let first = validate_config(&config);
        let second = validate_config(&config);
        prop_assert_eq!(first.clone(), second);
        if let Ok(validated) = first {
            prop_assert_eq!(validated.config, config);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Over whole seeded trials: robots never leave the environment square,
    /// and a failed robot's position never changes again.
    #[test]
    fn trials_contain_positions_and_freeze_the_dead(
        n in 2usize..=5,
        e in 1usize..=3,
        seed in any::<u64>(),
        failures in 0usize..=2,
        strategy in prop::sample::select(Strategy::ALL.to_vec()),
    ) {
        let mut config = SimConfig::new(n, e, strategy, seed);
        config.horizon = 15;
        config.failure_count = failures.min(n - 1);
        config.failure_window = [1, config.horizon];
        let (result, rows) = run_trial_recorded(&config)
            .map_err(|err| TestCaseError::fail(format!("trial failed: {err}")))?;

        for row in &rows {
            prop_assert!(row.x >= 0.0 && row.x <= config.environment_size);
            prop_assert!(row.y >= 0.0 && row.y <= config.environment_size);
        }
        for ev in &result.failure_events.events {
            let frozen: Vec<_> = rows
                .iter()
                .filter(|row| row.robot_id == ev.robot_id && row.t >= ev.step)
                .collect();
            prop_assert!(!frozen.is_empty());
            for row in &frozen {
                prop_assert!(!row.alive, "robot {} alive after its failure", ev.robot_id);
                prop_assert_eq!(row.x, frozen[0].x);
                prop_assert_eq!(row.y, frozen[0].y);
            }
        }
    }
}
