use thiserror::Error;

/// Errors raised by the analytic engines, the optimizer and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("raw moment of order {order} exceeds the supported cap {cap}")]
    MomentOrder { order: usize, cap: usize },

    #[error("station {station}: {reason}")]
    InvalidStation { station: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unstable system: total utilization {rho} is not below 1")]
    Unstable { rho: f64 },

    #[error("station {station}: exact moments require exponentially distributed glue periods")]
    NonExponentialGlue { station: usize },

    #[error("series division by u with nonzero constant term {residual:e}")]
    SeriesDivision { residual: f64 },

    #[error("scaled moments of order {needed} requested but the table only reaches order {available}")]
    PhiOrder { needed: usize, available: usize },

    #[error("fixed-point iteration for order {order} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        order: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("station {station}: zero arrival rate, waiting time undefined")]
    ZeroArrivalRate { station: usize },

    #[error("station {station}: zero utilization, visit-period moments undefined")]
    ZeroUtilization { station: usize },

    #[error("station {station}: glue period never lets orbit customers through (LST at the retrial rate is 1)")]
    DegenerateGlue { station: usize },

    #[error("glue means sum to {actual} but the budget is {budget}")]
    BudgetMismatch { budget: f64, actual: f64 },

    #[error("argument outside domain: {0}")]
    OutOfDomain(String),

    #[error("bracketing failed: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
