use thiserror::Error;

/// Errors produced by the ringbody toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A state with non-positive ring radius was handed to a vector field.
    #[error("collision domain: ring radius r = {r:e} at t = {t}")]
    Collision { t: f64, r: f64 },

    #[error("seed is outside the collisionless family: {0}")]
    OutsideFamily(String),

    /// A closed-form bound failed on integrated data. Signals a bug, not physics.
    #[error("theorem check violated: {0}")]
    TheoremViolation(String),

    #[error("step size underflow at t = {t} (h = {h:e}); collision suspected")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration budget of {max_steps} steps exceeded at t = {t}")]
    Budget { t: f64, max_steps: usize },

    #[error("t = {t} is outside the trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("reduced and Cartesian integrations diverged: {deviation:e} > {tolerance:e}")]
    Divergence { deviation: f64, tolerance: f64 },

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
