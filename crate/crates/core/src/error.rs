use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("density is zero at theta = {theta}; hazard quantities undefined")]
    UndefinedDensity { theta: f64 },

    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("mixture weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("allocation violates the majorization feasibility condition by {violation}")]
    InfeasibleAllocation { violation: f64 },

    #[error("cost function is not strictly convex (second difference {worst} at q = {at})")]
    NonConvexCost { worst: f64, at: f64 },

    #[error("negative-status bound {given} is below the required {required}")]
    BoundTooSmall { required: f64, given: f64 },

    #[error("condition not applicable: {0}")]
    Inapplicable(String),

    #[error("value function is not in suffering mode (v' must be <= -1 everywhere)")]
    NotSuffering,

    #[error("value function violates standard-mode assumptions: {0}")]
    InvalidValueFunction(String),

    #[error("operation requires bounded support")]
    UnboundedSupport,

    #[error("search space too large: {0}")]
    SizeGuard(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
