//! Utility matrix construction and per-robot movement blending.
//!
//! For each robot/event pair the candidate movement is a unit step along the
//! estimated density gradient; its utility is the density the robot would
//! sense after taking that step. A robot's actual displacement blends the
//! candidate movements with its weight row and rescales to unit length.

use ndarray::Array2;

use crate::domain::{RobotState, Vec2};
use crate::fields::{estimate, estimate_gradient, EventField};

pub const DEFAULT_STEP_SIZE: f64 = 1.0;
/// Below this gradient magnitude a robot has no usable direction signal.
pub const GRAD_EPSILON: f64 = 1e-9;
/// Below this blended-displacement magnitude the robot stays in place.
pub const MOTION_EPSILON: f64 = 1e-9;

/// Per-robot, per-event movement utilities plus the candidate movements that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    /// N×E nonnegative utilities; zero wherever the robot is dead or lacks
    /// the capability.
    pub values: Array2<f64>,
    /// N×E candidate movements p_{i→j}; zero vector wherever values is zero.
    pub directions: Array2<Vec2>,
}

/// Candidate movement of `robot` toward `field`'s sources: a `step_size`-long
/// step along the estimated gradient, or the zero vector when the robot is
/// dead, lacks the capability, or sits where the gradient vanishes.
pub fn movement_direction(robot: &RobotState, field: &EventField, step_size: f64) -> Vec2 {
    let g = estimate_gradient(robot, field, robot.position);
    if g.norm() > GRAD_EPSILON {
        g.normalized().scale(step_size)
    } else {
        Vec2::ZERO
    }
}

/// Builds the N×E utility matrix: s_ij is the density robot i would sense of
/// event j after its candidate movement, masked to capable alive robots.
pub fn build_utility(
    robots: &[RobotState],
    fields: &[EventField],
    step_size: f64,
) -> UtilityMatrix {
    let n = robots.len();
    let e = fields.len();
    let mut values = Array2::zeros((n, e));
    let mut directions = Array2::from_elem((n, e), Vec2::ZERO);
    for (i, robot) in robots.iter().enumerate() {
        for (j, field) in fields.iter().enumerate() {
            let movement = movement_direction(robot, field, step_size);
            // estimate() re-applies the dead/incapable mask, so s_ij and the
            // stored movement are zero together.
            let s = estimate(robot, field, robot.position.add(movement));
            values[[i, j]] = s;
            directions[[i, j]] = movement;
        }
    }
    UtilityMatrix { values, directions }
}

/// Blends one robot's candidate movements with its weight row and rescales to
/// a unit displacement; a near-zero blend means the robot stays.
pub fn blend_movement(weight_row: &[f64], directions_row: &[Vec2]) -> Vec2 {
    let mut raw = Vec2::ZERO;
    for (w, d) in weight_row.iter().zip(directions_row) {
        raw = raw.add(d.scale(*w));
    }
    if raw.norm() > MOTION_EPSILON {
        raw.normalized()
    } else {
        Vec2::ZERO
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::EventSource;
    use approx::assert_relative_eq;

    // Explicit parameters so the closed-form expectations below stay valid
    // even if the defaults move.
    fn source_at(event_type: usize, x: f64, y: f64) -> EventField {
        EventField {
            event_type,
            sources: vec![EventSource {
                event_type,
                center: Vec2::new(x, y),
                amplitude: 10.0,
                sigma: 10.0,
            }],
        }
    }

    #[test]
    fn movement_points_toward_the_source() {
        let field = source_at(0, 60.0, 50.0);
        let robot = RobotState::new(0, Vec2::new(50.0, 50.0), vec![1]);
        let m = movement_direction(&robot, &field, 1.0);
        assert_relative_eq!(m.x, 1.0, max_relative = 1e-12);
        assert_eq!(m.y, 0.0);

        // step_size scales the same unit direction
        let m2 = movement_direction(&robot, &field, 2.5);
        assert_relative_eq!(m2.x, 2.5, max_relative = 1e-12);
    }

    #[test]
    fn movement_is_zero_at_center_and_for_incapable() {
        let field = source_at(0, 50.0, 50.0);
        let at_center = RobotState::new(0, Vec2::new(50.0, 50.0), vec![1]);
        assert_eq!(movement_direction(&at_center, &field, 1.0), Vec2::ZERO);

        let incapable = RobotState::new(1, Vec2::new(10.0, 10.0), vec![0]);
        assert_eq!(movement_direction(&incapable, &field, 1.0), Vec2::ZERO);
    }

    #[test]
    fn utility_after_unit_step_matches_closed_form() {
        // Robot 10 units from the source: after a unit step toward it the
        // distance is 9, so s = 10 * exp(-81 / 200).
        let field = source_at(0, 60.0, 50.0);
        let robot = RobotState::new(0, Vec2::new(50.0, 50.0), vec![1]);
        let u = build_utility(&[robot], &[field], 1.0);
        assert_relative_eq!(u.values[[0, 0]], 6.669768108584744, max_relative = 1e-12);
        assert_relative_eq!(u.directions[[0, 0]].x, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn utility_at_source_center_is_the_amplitude() {
        let field = source_at(0, 50.0, 50.0);
        let robot = RobotState::new(0, Vec2::new(50.0, 50.0), vec![1]);
        let u = build_utility(&[robot], &[field], 1.0);
        assert_eq!(u.values[[0, 0]], 10.0);
        assert_eq!(u.directions[[0, 0]], Vec2::ZERO);
    }

    #[test]
    fn masked_rows_are_zero() {
        let fields = [source_at(0, 20.0, 20.0), source_at(1, 80.0, 80.0)];
        let no_caps = RobotState::new(0, Vec2::new(50.0, 50.0), vec![0, 0]);
        let mut dead = RobotState::new(1, Vec2::new(50.0, 50.0), vec![1, 1]);
        dead.alive = false;
        let u = build_utility(&[no_caps, dead], &fields, 1.0);
        assert!(u.values.iter().all(|&v| v == 0.0));
        assert!(u.directions.iter().all(|&d| d == Vec2::ZERO));
    }

    #[test]
    fn blend_with_single_active_weight_returns_that_direction() {
        let dirs = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert_eq!(blend_movement(&[1.0, 0.0], &dirs), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn blend_normalizes_the_weighted_sum() {
        let dirs = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let b = blend_movement(&[0.5, 0.5], &dirs);
        assert_relative_eq!(b.x, 0.7071067811865475, max_relative = 1e-14);
        assert_relative_eq!(b.y, 0.7071067811865475, max_relative = 1e-14);
        assert_relative_eq!(b.norm(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn blend_of_zero_directions_stays_put() {
        let dirs = [Vec2::ZERO, Vec2::ZERO];
        assert_eq!(blend_movement(&[0.5, 0.5], &dirs), Vec2::ZERO);
    }

    #[test]
    fn opposing_directions_cancel_below_epsilon() {
        let dirs = [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)];
        assert_eq!(blend_movement(&[0.5, 0.5], &dirs), Vec2::ZERO);
    }
}
