//! Time-stepping engine: per-step utility → weights → movement, scheduled
//! robot failures, and the sensing-quality metric.

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{RobotState, SimConfig, Vec2};
use crate::fields::{field_value, generate_events, EventField};
use crate::rng::{stream_rng, Stream};
use crate::solver::{init_weights, SolverError, WeightMatrix};
use crate::strategies::{compute_weights, StrategyKind};
use crate::utility::{blend_movement, build_utility, DEFAULT_STEP_SIZE};

/// One scheduled whole-robot failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub step: u32,
    pub robot_id: usize,
}

/// All failures planned for a trial, sorted by step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureSchedule {
    pub events: Vec<FailureEvent>,
}

/// Full simulation state between steps. Weight rows cover alive robots only,
/// in ascending robot-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub robots: Vec<RobotState>,
    pub fields: Vec<EventField>,
    pub t: u32,
    pub w_prev: WeightMatrix,
}

/// Outcome of one seeded simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Q(0) .. Q(T).
    pub quality_trace: Vec<f64>,
    /// Q(T) / Q(0).
    pub improvement: f64,
    /// max_t Q(t) / Q(0).
    pub peak_improvement: f64,
    pub failure_events: FailureSchedule,
    pub config: SimConfig,
    pub seed: u64,
    /// Steps where the weight solve hit its iteration cap far from its
    /// tolerance; the final iterate was used and the run continued.
    pub unconverged_steps: usize,
}

/// One row of the per-step position/quality trace (all robots, every step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: u32,
    pub robot_id: usize,
    pub x: f64,
    pub y: f64,
    pub alive: bool,
    pub q_total: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("weight solve failed at step {step}: {source}")]
    Solver { step: u32, source: SolverError },
}

/// Sensing quality: capability-masked sum of true field values at alive
/// robots' positions — the quantity the per-robot utilities locally climb.
pub fn sensing_quality(world: &WorldState) -> f64 {
    world
        .robots
        .iter()
        .filter(|r| r.alive)
        .map(|r| {
            world
                .fields
                .iter()
                .enumerate()
                .filter(|(j, _)| r.can_sense(*j))
                .map(|(_, f)| field_value(f, r.position))
                .sum::<f64>()
        })
        .sum()
}

/// Draws the team for a trial: ids 0..N, uniformly random nonempty capability
/// subsets, start positions uniform in the configured disc (clamped into the
/// environment). Capability and position draws come from separate named
/// streams so neither perturbs the other.
pub fn generate_robots(config: &SimConfig, trial_seed: u64) -> Vec<RobotState> {
    let e = config.num_event_types;
    let mut caps_rng = stream_rng(trial_seed, Stream::Capabilities);
    let mut pos_rng = stream_rng(trial_seed, Stream::StartPositions);

    (0..config.num_robots)
        .map(|id| {
            let bits = caps_rng.gen_range(1..(1u64 << e));
            let capabilities = (0..e).map(|j| ((bits >> j) & 1) as u8).collect();

            // uniform over the disc: radius scales with sqrt of a uniform draw
            let radius = config.start_area.radius * pos_rng.gen_range(0.0f64..=1.0).sqrt();
            let angle = pos_rng.gen_range(0.0..std::f64::consts::TAU);
            let position = config
                .start_area
                .center
                .add(Vec2::new(radius * angle.cos(), radius * angle.sin()))
                .clamp_to_square(config.environment_size);

            RobotState::new(id, position, capabilities)
        })
        .collect()
}

/// Plans `failure_count` failures: distinct robots chosen uniformly, failure
/// steps drawn without replacement from the failure window.
pub fn build_failure_schedule<R: Rng>(config: &SimConfig, rng: &mut R) -> FailureSchedule {
    if config.failure_count == 0 {
        return FailureSchedule::default();
    }
    let ids = sample(rng, config.num_robots, config.failure_count).into_vec();
    let [lo, hi] = config.failure_window;
    let window_len = (hi - lo + 1) as usize;
    let steps = sample(rng, window_len, config.failure_count).into_vec();
    let mut events: Vec<FailureEvent> = ids
        .into_iter()
        .zip(steps)
        .map(|(robot_id, offset)| FailureEvent {
            step: lo + offset as u32,
            robot_id,
        })
        .collect();
    events.sort_by_key(|ev| ev.step);
    FailureSchedule { events }
}

/// Advances the world one step: apply failures scheduled for t+1, build the
/// utility matrix over survivors, compute this step's weights under the
/// strategy, move every alive robot by its blended unit displacement (clipped
/// to the environment square), and roll the weights forward with dead rows
/// dropped. Returns whether the weight solve hit its cap unconverged.
pub fn step(
    world: &mut WorldState,
    schedule: &FailureSchedule,
    kind: &StrategyKind,
    config: &SimConfig,
) -> Result<bool, SimError> {
    let t_next = world.t + 1;

    let prev_alive: Vec<usize> = world
        .robots
        .iter()
        .filter(|r| r.alive)
        .map(|r| r.id)
        .collect();

    for ev in schedule.events.iter().filter(|ev| ev.step == t_next) {
        world.robots[ev.robot_id].alive = false;
    }

    let alive: Vec<usize> = world
        .robots
        .iter()
        .filter(|r| r.alive)
        .map(|r| r.id)
        .collect();

    let e = config.num_event_types;
    if alive.is_empty() {
        world.w_prev = WeightMatrix {
            values: Array2::zeros((0, e)),
        };
        world.t = t_next;
        return Ok(false);
    }

    let survivors: Vec<RobotState> = alive.iter().map(|&id| world.robots[id].clone()).collect();
    let utility = build_utility(&survivors, &world.fields, DEFAULT_STEP_SIZE);
    let capabilities = capability_matrix(&survivors);

    // Keep only the previous-weight rows whose robot survived this step's
    // failures; survival is monotone, so the kept rows line up with `alive`.
    let kept: Vec<usize> = prev_alive
        .iter()
        .enumerate()
        .filter(|(_, &id)| world.robots[id].alive)
        .map(|(row, _)| row)
        .collect();
    let w_prev = WeightMatrix {
        values: world.w_prev.values.select(Axis(0), &kept),
    };

    let outcome = compute_weights(
        &kind.row_view(&alive),
        &utility.values,
        &w_prev,
        &capabilities,
        &config.solver,
        config.gamma1,
        config.gamma2,
    )
    .map_err(|source| SimError::Solver {
        step: t_next,
        source,
    })?;

    for (row, &id) in alive.iter().enumerate() {
        let weight_row: Vec<f64> = outcome.weights.values.row(row).to_vec();
        let directions_row: Vec<Vec2> = utility.directions.row(row).to_vec();
        let displacement = blend_movement(&weight_row, &directions_row);
        let robot = &mut world.robots[id];
        robot.position = robot
            .position
            .add(displacement)
            .clamp_to_square(config.environment_size);
    }

    world.w_prev = outcome.weights;
    world.t = t_next;
    Ok(outcome.no_convergence)
}

/// Binary capability matrix over the given robots, one row each.
pub fn capability_matrix(robots: &[RobotState]) -> Array2<u8> {
    let n = robots.len();
    let e = robots.first().map_or(0, |r| r.capabilities.len());
    let mut m = Array2::zeros((n, e));
    for (i, r) in robots.iter().enumerate() {
        for (j, &c) in r.capabilities.iter().enumerate() {
            m[[i, j]] = c;
        }
    }
    m
}

/// Runs one full trial from a validated config: generate fields, team, and
/// failure schedule from the seed, step to the horizon, and report the
/// quality trace with its improvement ratios.
pub fn run_trial(config: &SimConfig) -> Result<TrialResult, SimError> {
    run_trial_inner(config, None)
}

/// [`run_trial`] plus a per-step trace row for every robot (alive or not).
pub fn run_trial_recorded(config: &SimConfig) -> Result<(TrialResult, Vec<TraceRow>), SimError> {
    let mut rows = Vec::new();
    let result = run_trial_inner(config, Some(&mut rows))?;
    Ok((result, rows))
}

fn run_trial_inner(
    config: &SimConfig,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<TrialResult, SimError> {
    let seed = config.seed;
    let fields = generate_events(config, &mut stream_rng(seed, Stream::EventPlacement));
    let robots = generate_robots(config, seed);
    let schedule = build_failure_schedule(config, &mut stream_rng(seed, Stream::FailureSchedule));

    let capabilities = capability_matrix(&robots);
    let kind = StrategyKind::for_trial(
        config.strategy,
        &capabilities,
        &mut stream_rng(seed, Stream::SingleCapabilityPicks),
    );
    let w0 = init_weights(&capabilities).map_err(|source| SimError::Solver { step: 0, source })?;

    let mut world = WorldState {
        robots,
        fields,
        t: 0,
        w_prev: w0,
    };

    let mut quality_trace = Vec::with_capacity(config.horizon as usize + 1);
    let q0 = sensing_quality(&world);
    quality_trace.push(q0);
    if let Some(rows) = trace.as_deref_mut() {
        record_rows(rows, &world, q0);
    }

    let mut unconverged_steps = 0usize;
    while world.t < config.horizon {
        if step(&mut world, &schedule, &kind, config)? {
            unconverged_steps += 1;
        }
        let q = sensing_quality(&world);
        quality_trace.push(q);
        if let Some(rows) = trace.as_deref_mut() {
            record_rows(rows, &world, q);
        }
    }

    let q_final = *quality_trace.last().expect("trace holds at least Q(0)");
    let peak = quality_trace.iter().cloned().fold(f64::MIN, f64::max);
    Ok(TrialResult {
        improvement: q_final / q0,
        peak_improvement: peak / q0,
        quality_trace,
        failure_events: schedule,
        config: config.clone(),
        seed,
        unconverged_steps,
    })
}

fn record_rows(rows: &mut Vec<TraceRow>, world: &WorldState, q_total: f64) {
    for r in &world.robots {
        rows.push(TraceRow {
            t: world.t,
            robot_id: r.id,
            x: r.position.x,
            y: r.position.y,
            alive: r.alive,
            q_total,
        });
    }
}
