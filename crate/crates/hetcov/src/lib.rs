//! Heterogeneous multi-robot sensor coverage.
//!
//! A team of robots, each carrying only a subset of the possible sensor
//! types, deploys in a planar environment to maximize how well the team as a
//! whole observes a set of event density fields. At every time step a
//! regularized optimization problem is solved for a row-stochastic weight
//! matrix that balances each robot's sensing capabilities against the
//! capabilities available to the rest of the team; robots then move along
//! the weighted blend of their per-event gradient directions.
//!
//! Modules follow the pipeline:
//!
//! - [`domain`]: core types, configuration, validation.
//! - [`fields`]: Gaussian-mixture event density fields and gradients.
//! - [`utility`]: per-robot per-event movement utilities and motion blending.
//! - [`solver`]: the augmented-Lagrangian weight solver and a brute-force
//!   grid-search oracle used to validate it.
//! - [`strategies`]: the adaptive solver strategies plus the non-adaptive
//!   comparison strategies.
//! - [`simulator`]: time stepping, failure injection, sensing-quality metric.

pub mod domain;
pub mod fields;
pub mod linalg;
pub mod rng;
pub mod simulator;
pub mod solver;
pub mod strategies;
pub mod utility;

pub use domain::{
    validate_config, ConfigError, RobotState, SimConfig, SolverParams, StartArea, Strategy,
    Validated, Vec2,
};
pub use fields::{EventField, EventSource};
pub use simulator::{FailureSchedule, TrialResult, WorldState};
pub use solver::{SolveOutcome, SolverError, WeightMatrix};
pub use strategies::StrategyKind;
pub use utility::UtilityMatrix;
