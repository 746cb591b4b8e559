//! Gated polling systems with retrials and glue periods.
//!
//! A single server visits `N` stations in cyclic order. Customers that
//! arrive while the server is away enter an orbit and retry after
//! exponential times; a retrial that lands in the glue period just before
//! the server's visit sticks and is served during that visit, as is every
//! arrival during the glue period itself.
//!
//! - [`exact`]: station-size moments for exponential glue periods.
//! - [`pcl`]: pseudo conservation law and the mean-waiting approximation.
//! - [`optimize`]: glue-period allocation under a budget.
//! - [`sim`]: discrete-event simulation.

pub mod dist;
pub mod error;
pub mod exact;
pub mod model;
pub mod optimize;
pub mod pcl;
pub mod series;
pub mod sim;

pub use dist::DistributionSpec;
pub use error::{Error, Result};
pub use model::{StationParams, SystemConfig};
