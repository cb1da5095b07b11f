//! Gaussian-mixture event density fields, their gradients, and the
//! capability-masked per-robot estimates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{RobotState, SimConfig, Vec2};

pub const DEFAULT_AMPLITUDE: f64 = 10.0;
pub const DEFAULT_SIGMA: f64 = 10.0;

/// Ranges the event generator draws per-source parameters from, centered on
/// the defaults. Heterogeneous sources keep the coverage problem interesting:
/// if every bump had the same height and spread, any peak would be worth the
/// same as any other and weighting one event over another could never pay
/// off.
pub const AMPLITUDE_RANGE: std::ops::RangeInclusive<f64> = 4.0..=16.0;
pub const SIGMA_RANGE: std::ops::RangeInclusive<f64> = 8.0..=22.0;

/// One Gaussian bump contributing to an event type's density field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSource {
    pub event_type: usize,
    pub center: Vec2,
    pub amplitude: f64,
    pub sigma: f64,
}

impl EventSource {
    pub fn new(event_type: usize, center: Vec2) -> EventSource {
        EventSource {
            event_type,
            center,
            amplitude: DEFAULT_AMPLITUDE,
            sigma: DEFAULT_SIGMA,
        }
    }
}

/// Density field for one event type: a sum of Gaussian sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventField {
    pub event_type: usize,
    pub sources: Vec<EventSource>,
}

/// Field intensity at `point`: sum of `amplitude * exp(-||d||^2 / (2 sigma^2))`
/// over the field's sources. An empty field reads 0 everywhere.
pub fn field_value(field: &EventField, point: Vec2) -> f64 {
    field
        .sources
        .iter()
        .map(|s| {
            let d = point.sub(s.center);
            s.amplitude * (-d.norm_sq() / (2.0 * s.sigma * s.sigma)).exp()
        })
        .sum()
}

/// Analytic gradient of [`field_value`] at `point`. Each source contributes
/// `amplitude * exp(-||d||^2 / (2 sigma^2)) * (-d / sigma^2)`, so the result
/// points toward increasing density.
pub fn field_gradient(field: &EventField, point: Vec2) -> Vec2 {
    let mut g = Vec2::ZERO;
    for s in &field.sources {
        let d = point.sub(s.center);
        let sigma_sq = s.sigma * s.sigma;
        let weight = s.amplitude * (-d.norm_sq() / (2.0 * sigma_sq)).exp();
        g = g.add(d.scale(-weight / sigma_sq));
    }
    g
}

/// Robot i's estimate of field j at `point`: the true field value when the
/// robot is alive and has the capability bit for this event type, else 0.
pub fn estimate(robot: &RobotState, field: &EventField, point: Vec2) -> f64 {
    if robot.alive && robot.can_sense(field.event_type) {
        field_value(field, point)
    } else {
        0.0
    }
}

/// Gradient counterpart of [`estimate`]: zero vector for dead or incapable
/// robots.
pub fn estimate_gradient(robot: &RobotState, field: &EventField, point: Vec2) -> Vec2 {
    if robot.alive && robot.can_sense(field.event_type) {
        field_gradient(field, point)
    } else {
        Vec2::ZERO
    }
}

/// Draws one field per event type, each with `sources_per_event` sources
/// placed uniformly in the environment square, with per-source amplitude and
/// spread drawn from [`AMPLITUDE_RANGE`] and [`SIGMA_RANGE`]. Deterministic
/// for a fixed RNG state.
pub fn generate_events<R: Rng>(config: &SimConfig, rng: &mut R) -> Vec<EventField> {
    (0..config.num_event_types)
        .map(|event_type| {
            let sources = (0..config.sources_per_event)
                .map(|_| {
                    let x = rng.gen_range(0.0..=config.environment_size);
                    let y = rng.gen_range(0.0..=config.environment_size);
                    let amplitude = rng.gen_range(AMPLITUDE_RANGE);
                    let sigma = rng.gen_range(SIGMA_RANGE);
                    EventSource {
                        event_type,
                        center: Vec2::new(x, y),
                        amplitude,
                        sigma,
                    }
                })
                .collect();
            EventField { event_type, sources }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Strategy;
    use crate::rng::{stream_rng, Stream};
    use approx::assert_relative_eq;

    // Explicit parameters so the closed-form expectations below stay valid
    // even if the defaults move.
    fn single_source_field() -> EventField {
        EventField {
            event_type: 0,
            sources: vec![EventSource {
                event_type: 0,
                center: Vec2::new(50.0, 50.0),
                amplitude: 10.0,
                sigma: 10.0,
            }],
        }
    }

    #[test]
    fn value_at_center_is_amplitude() {
        let f = single_source_field();
        assert_eq!(field_value(&f, Vec2::new(50.0, 50.0)), 10.0);
    }

    #[test]
    fn value_at_distance_ten_matches_closed_form() {
        // 10 * exp(-100 / 200) = 10 * exp(-0.5)
        let f = single_source_field();
        let v = field_value(&f, Vec2::new(60.0, 50.0));
        assert_relative_eq!(v, 6.065306597126334, max_relative = 1e-14);
    }

    #[test]
    fn coincident_sources_add() {
        let mut f = single_source_field();
        f.sources.push(f.sources[0]);
        assert_eq!(field_value(&f, Vec2::new(50.0, 50.0)), 20.0);
    }

    #[test]
    fn empty_field_reads_zero() {
        let f = EventField {
            event_type: 0,
            sources: vec![],
        };
        assert_eq!(field_value(&f, Vec2::new(1.0, 2.0)), 0.0);
        assert_eq!(field_gradient(&f, Vec2::new(1.0, 2.0)), Vec2::ZERO);
    }

    #[test]
    fn gradient_vanishes_at_source_center() {
        let f = single_source_field();
        assert_eq!(field_gradient(&f, Vec2::new(50.0, 50.0)), Vec2::ZERO);
    }

    #[test]
    fn gradient_at_distance_ten_matches_closed_form() {
        // d = (10, 0): g_x = 10 * exp(-0.5) * (-10 / 100)
        let f = single_source_field();
        let g = field_gradient(&f, Vec2::new(60.0, 50.0));
        assert_relative_eq!(g.x, -0.6065306597126334, max_relative = 1e-14);
        assert_eq!(g.y, 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = stream_rng(99, Stream::EventPlacement);
        let cfg = SimConfig::new(4, 3, Strategy::Full, 99);
        let fields = generate_events(&cfg, &mut rng);
        let h = 1e-5;
        for field in &fields {
            for _ in 0..100 {
                let p = Vec2::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
                let g = field_gradient(field, p);
                let fd = Vec2::new(
                    (field_value(field, Vec2::new(p.x + h, p.y))
                        - field_value(field, Vec2::new(p.x - h, p.y)))
                        / (2.0 * h),
                    (field_value(field, Vec2::new(p.x, p.y + h))
                        - field_value(field, Vec2::new(p.x, p.y - h)))
                        / (2.0 * h),
                );
                // Relative to the gradient magnitude; skip near-critical points
                // where both are numerically zero.
                let scale = g.norm().max(fd.norm());
                if scale > 1e-9 {
                    assert!(
                        g.sub(fd).norm() / scale < 1e-5,
                        "gradient mismatch at ({}, {}): analytic {:?} vs fd {:?}",
                        p.x,
                        p.y,
                        g,
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn estimate_masks_by_capability_and_liveness() {
        let f = single_source_field();
        let at = Vec2::new(50.0, 50.0);

        let capable = RobotState::new(0, at, vec![1]);
        assert_eq!(estimate(&capable, &f, at), 10.0);

        let incapable = RobotState::new(1, at, vec![0]);
        assert_eq!(estimate(&incapable, &f, at), 0.0);
        assert_eq!(estimate_gradient(&incapable, &f, at), Vec2::ZERO);

        let mut dead = RobotState::new(2, at, vec![1]);
        dead.alive = false;
        assert_eq!(estimate(&dead, &f, at), 0.0);
        assert_eq!(estimate_gradient(&dead, &f, at), Vec2::ZERO);
    }

    #[test]
    fn generate_events_is_seeded_and_in_bounds() {
        let cfg = SimConfig::new(5, 4, Strategy::Full, 123);
        let fields_a = generate_events(&cfg, &mut stream_rng(123, Stream::EventPlacement));
        let fields_b = generate_events(&cfg, &mut stream_rng(123, Stream::EventPlacement));
        assert_eq!(fields_a, fields_b);

        assert_eq!(fields_a.len(), 4);
        let total: usize = fields_a.iter().map(|f| f.sources.len()).sum();
        assert_eq!(total, 8);
        for (j, f) in fields_a.iter().enumerate() {
            assert_eq!(f.event_type, j);
            for s in &f.sources {
                assert!(s.center.x >= 0.0 && s.center.x <= 100.0);
                assert!(s.center.y >= 0.0 && s.center.y <= 100.0);
                assert_eq!(s.event_type, j);
            }
        }

        let other = generate_events(&cfg, &mut stream_rng(124, Stream::EventPlacement));
        assert_ne!(fields_a, other);
    }
}
