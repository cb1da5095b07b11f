//! Core data types, configuration, and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Planar vector / position in environment units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Vec2 {
        Vec2 { x, y }
    }

    pub fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector, or zero if the length is zero.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            Vec2::ZERO
        } else {
            self.scale(1.0 / n)
        }
    }

    /// Componentwise clamp into the square `[0, size]^2`.
    pub fn clamp_to_square(self, size: f64) -> Vec2 {
        Vec2::new(self.x.clamp(0.0, size), self.y.clamp(0.0, size))
    }
}

/// One team member: position, which event types it can sense, and whether it
/// is still operating. A dead robot contributes nothing anywhere downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: usize,
    pub position: Vec2,
    /// Length-E vector with entries exactly 0 or 1.
    pub capabilities: Vec<u8>,
    pub alive: bool,
}

impl RobotState {
    pub fn new(id: usize, position: Vec2, capabilities: Vec<u8>) -> RobotState {
        RobotState {
            id,
            position,
            capabilities,
            alive: true,
        }
    }

    pub fn can_sense(&self, event_type: usize) -> bool {
        self.capabilities.get(event_type).copied().unwrap_or(0) == 1
    }

    pub fn capability_count(&self) -> usize {
        self.capabilities.iter().filter(|&&c| c == 1).count()
    }
}

/// Disc in which robot start positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartArea {
    pub center: Vec2,
    pub radius: f64,
}

impl Default for StartArea {
    fn default() -> StartArea {
        StartArea {
            center: Vec2::new(50.0, 50.0),
            radius: 5.0,
        }
    }
}

/// Weighting strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Regularized solve with the configured gamma1/gamma2.
    Full,
    /// Regularized solve with gamma1 = gamma2 = 0.
    Baseline,
    /// Constant equal weights over each robot's capabilities.
    EquallyWeighted,
    /// One randomly chosen capability per robot, fixed for the trial.
    SingleCapability,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Full,
        Strategy::Baseline,
        Strategy::EquallyWeighted,
        Strategy::SingleCapability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Baseline => "baseline",
            Strategy::EquallyWeighted => "equally_weighted",
            Strategy::SingleCapability => "single_capability",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "full" => Ok(Strategy::Full),
            "baseline" => Ok(Strategy::Baseline),
            "equally_weighted" => Ok(Strategy::EquallyWeighted),
            "single_capability" => Ok(Strategy::SingleCapability),
            other => Err(format!(
                "unknown strategy '{other}' (expected full, baseline, equally_weighted, \
                 or single_capability)"
            )),
        }
    }
}

/// Parameters of the iterative weight solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Initial penalty coefficient, > 0.
    pub mu0: f64,
    /// Penalty growth factor, strictly between 1 and 2.
    pub rho: f64,
    /// Convergence threshold on the Frobenius norm of the iterate change.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Guard for column norms when building the reweighting matrix.
    pub column_norm_epsilon: f64,
}

impl Default for SolverParams {
    fn default() -> SolverParams {
        SolverParams {
            mu0: 1.0,
            rho: 1.5,
            tol: 1e-7,
            max_iter: 200,
            column_norm_epsilon: 1e-9,
        }
    }
}

/// Full description of one simulation trial. This is the on-disk config
/// document; field names match in snake_case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_robots: usize,
    pub num_event_types: usize,
    #[serde(default = "default_sources_per_event")]
    pub sources_per_event: usize,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_gamma2")]
    pub gamma2: f64,
    #[serde(default = "default_environment_size")]
    pub environment_size: f64,
    #[serde(default)]
    pub start_area: StartArea,
    #[serde(default)]
    pub failure_count: usize,
    #[serde(default = "default_failure_window")]
    pub failure_window: [u32; 2],
    pub strategy: Strategy,
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverParams,
}

fn default_sources_per_event() -> usize {
    2
}
fn default_horizon() -> u32 {
    75
}
fn default_gamma1() -> f64 {
    1.0
}
fn default_gamma2() -> f64 {
    0.5
}
fn default_environment_size() -> f64 {
    100.0
}
fn default_failure_window() -> [u32; 2] {
    [10, 60]
}

impl SimConfig {
    /// Convenience constructor with all defaulted fields at their defaults.
    pub fn new(num_robots: usize, num_event_types: usize, strategy: Strategy, seed: u64) -> Self {
        SimConfig {
            num_robots,
            num_event_types,
            sources_per_event: default_sources_per_event(),
            horizon: default_horizon(),
            gamma1: default_gamma1(),
            gamma2: default_gamma2(),
            environment_size: default_environment_size(),
            start_area: StartArea::default(),
            failure_count: 0,
            failure_window: default_failure_window(),
            strategy,
            seed,
            solver: SolverParams::default(),
        }
    }
}

/// Config validation failure: one entry per violated invariant.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid config: {}", violations.join("; "))]
pub struct ConfigError {
    pub violations: Vec<String>,
}

/// A config that passed validation, along with non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub config: SimConfig,
    pub warnings: Vec<String>,
}

/// Checks every config invariant and returns the config unchanged when all
/// hold, otherwise the full list of violations. Validation never mutates, so
/// it is idempotent.
pub fn validate_config(config: &SimConfig) -> Result<Validated, ConfigError> {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    if config.num_robots == 0 {
        violations.push("num_robots must be positive".to_string());
    }
    if config.num_event_types == 0 {
        violations.push("num_event_types must be positive".to_string());
    }
    if config.sources_per_event == 0 {
        violations.push("sources_per_event must be positive".to_string());
    }
    if !(config.environment_size > 0.0) {
        violations.push(format!(
            "environment_size must be positive (got {})",
            config.environment_size
        ));
    }
    if !(config.start_area.radius > 0.0) {
        violations.push(format!(
            "start_area.radius must be positive (got {})",
            config.start_area.radius
        ));
    }
    if !config.gamma1.is_finite() || config.gamma1 < 0.0 {
        violations.push(format!("gamma1 must be nonnegative (got {})", config.gamma1));
    }
    if !config.gamma2.is_finite() || config.gamma2 < 0.0 {
        violations.push(format!("gamma2 must be nonnegative (got {})", config.gamma2));
    }
    if config.num_robots > 0 && config.failure_count >= config.num_robots {
        violations.push(format!(
            "failure_count must be < num_robots (got {} with {} robots)",
            config.failure_count, config.num_robots
        ));
    }
    if config.failure_count > 0 {
        let [lo, hi] = config.failure_window;
        if lo < 1 || hi > config.horizon || lo > hi {
            violations.push(format!(
                "failure_window [{lo}, {hi}] must lie within [1, {}]",
                config.horizon
            ));
        }
        let window_len = (config.failure_window[1].saturating_sub(config.failure_window[0]) + 1)
            as usize;
        if config.failure_count > window_len {
            violations.push(format!(
                "failure_count {} exceeds the {} distinct steps in the failure window",
                config.failure_count, window_len
            ));
        }
    }

    let p = &config.solver;
    if !(p.mu0 > 0.0) {
        violations.push(format!("solver.mu0 must be positive (got {})", p.mu0));
    }
    if !(p.rho > 1.0 && p.rho < 2.0) {
        violations.push(format!("solver.rho must lie in (1, 2) (got {})", p.rho));
    }
    if !(p.tol > 0.0) {
        violations.push(format!("solver.tol must be positive (got {})", p.tol));
    }
    if p.max_iter == 0 {
        violations.push("solver.max_iter must be positive".to_string());
    }
    if !(p.column_norm_epsilon > 0.0) {
        violations.push(format!(
            "solver.column_norm_epsilon must be positive (got {})",
            p.column_norm_epsilon
        ));
    }

    if config.num_event_types > config.num_robots {
        warnings.push(format!(
            "num_event_types ({}) exceeds num_robots ({}); coverage of every event type is \
             unlikely with fewer robots than event types",
            config.num_event_types, config.num_robots
        ));
    }

    if violations.is_empty() {
        Ok(Validated {
            config: config.clone(),
            warnings,
        })
    } else {
        Err(ConfigError { violations })
    }
}
