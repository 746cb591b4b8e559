//! System parameters and the global quantities every engine shares:
//! utilizations, the mean cycle length and the moments of the total idle
//! time per cycle.

use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};

/// Configurations with total utilization at or above `1 - STABILITY_MARGIN`
/// are rejected.
pub const STABILITY_MARGIN: f64 = 1e-12;

/// One station of the polling cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationParams {
    /// Poisson arrival rate.
    pub lambda: f64,
    /// Retrial rate of orbit customers.
    pub nu: f64,
    pub service: DistributionSpec,
    /// Switchover from this station to the next one.
    pub switchover: DistributionSpec,
    /// Glue period preceding each visit.
    pub glue: DistributionSpec,
    /// Cost weight in the glue-budget objective.
    pub weight: f64,
}

impl StationParams {
    pub fn new(
        lambda: f64,
        nu: f64,
        service: DistributionSpec,
        switchover: DistributionSpec,
        glue: DistributionSpec,
    ) -> Self {
        Self {
            lambda,
            nu,
            service,
            switchover,
            glue,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn rho(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    /// `G(ν) / (1 - G(ν))` where `G` is the glue-period transform: the mean
    /// number of extra cycles an orbit customer spends before it is glued.
    pub fn retrial_multiplier(&self) -> f64 {
        let g = self.glue.lst(self.nu);
        g / (1.0 - g)
    }

    fn validate(&self, station: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidStation { station, reason };
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(bad(format!("arrival rate must be >= 0, got {}", self.lambda)));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(bad(format!("retrial rate must be > 0, got {}", self.nu)));
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(bad(format!("weight must be > 0, got {}", self.weight)));
        }
        for (name, d) in [
            ("service", &self.service),
            ("switchover", &self.switchover),
            ("glue", &self.glue),
        ] {
            d.validate().map_err(|e| bad(format!("{name}: {e}")))?;
            if d.mean() <= 0.0 {
                return Err(bad(format!("{name} time must have a positive mean")));
            }
        }
        Ok(())
    }
}

/// A validated polling system: stations in visiting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    stations: Vec<StationParams>,
}

impl SystemConfig {
    /// Validates every station and the stability condition.
    pub fn new(stations: Vec<StationParams>) -> Result<Self> {
        if stations.is_empty() {
            return Err(Error::InvalidConfig("at least one station is required".into()));
        }
        for (i, s) in stations.iter().enumerate() {
            s.validate(i)?;
        }
        let cfg = Self { stations };
        let rho = cfg.rho();
        if rho >= 1.0 - STABILITY_MARGIN {
            return Err(Error::Unstable { rho });
        }
        Ok(cfg)
    }

    pub fn stations(&self) -> &[StationParams] {
        &self.stations
    }

    pub fn station(&self, i: usize) -> &StationParams {
        &self.stations[i]
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Cyclic index normalization: station `i` for any integer `i`.
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.stations.len() as isize) as usize
    }

    /// The station visited just before `i`.
    pub fn prev(&self, i: usize) -> usize {
        self.wrap(i as isize - 1)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.stations.iter().map(|s| s.lambda).collect()
    }

    pub fn rho(&self) -> f64 {
        self.stations.iter().map(StationParams::rho).sum()
    }

    /// Per-station and total utilizations.
    pub fn utilizations(&self) -> (Vec<f64>, f64) {
        let per: Vec<f64> = self.stations.iter().map(StationParams::rho).collect();
        let total = per.iter().sum();
        (per, total)
    }

    /// Mean cycle length `Σ(E[G_i] + E[S_i]) / (1 - ρ)`.
    pub fn mean_cycle(&self) -> f64 {
        self.total_idle_moments().0 / (1.0 - self.rho())
    }

    /// Mean and second moment of the total idle time per cycle
    /// `X = Σ(S_i + G_i)`, all terms independent.
    pub fn total_idle_moments(&self) -> (f64, f64) {
        let (mean, var) = self.stations.iter().fold((0.0, 0.0), |(m, v), s| {
            (
                m + s.switchover.mean() + s.glue.mean(),
                v + s.switchover.variance() + s.glue.variance(),
            )
        });
        (mean, var + mean * mean)
    }

    /// `Σ λ_i E[B_i^2]`.
    pub fn service_second_moment_rate(&self) -> f64 {
        self.stations
            .iter()
            .map(|s| s.lambda * s.service.second_moment())
            .sum()
    }

    /// A copy with the glue distributions replaced.
    pub fn with_glue(&self, glue: &[DistributionSpec]) -> Result<Self> {
        if glue.len() != self.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} glue distributions, got {}",
                self.len(),
                glue.len()
            )));
        }
        let stations = self
            .stations
            .iter()
            .zip(glue)
            .map(|(s, g)| StationParams { glue: *g, ..*s })
            .collect();
        Self::new(stations)
    }

    /// A copy with every station transformed by `f`.
    pub fn map_stations(&self, f: impl Fn(usize, &StationParams) -> StationParams) -> Result<Self> {
        Self::new(self.stations.iter().enumerate().map(|(i, s)| f(i, s)).collect())
    }
}
