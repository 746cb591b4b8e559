//! Nonnegative distributions used for service, switchover and glue periods.
//!
//! Only three families are supported. Each one exposes its mean, raw moments
//! and Laplace-Stieltjes transform; everything downstream (series
//! coefficients, the pseudo conservation law, the simulator) goes through
//! this interface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest raw-moment order that [`DistributionSpec::raw_moment`] accepts.
pub const MOMENT_CAP: usize = 16;

/// A nonnegative random variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Point mass at `value`.
    Deterministic { value: f64 },
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Gamma with density `x^(k-1) e^(-x/θ) / (Γ(k) θ^k)`.
    Gamma { shape: f64, scale: f64 },
}

impl DistributionSpec {
    pub fn deterministic(value: f64) -> Self {
        Self::Deterministic { value }
    }

    pub fn exponential(mean: f64) -> Self {
        Self::Exponential { mean }
    }

    pub fn gamma(shape: f64, scale: f64) -> Self {
        Self::Gamma { shape, scale }
    }

    /// Checks the parameters. Deterministic zero is admitted here; callers
    /// that need a strictly positive mean check that separately.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Deterministic { value } => value.is_finite() && value >= 0.0,
            Self::Exponential { mean } => mean.is_finite() && mean > 0.0,
            Self::Gamma { shape, scale } => {
                shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(format!("{self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Deterministic { value } => value,
            Self::Exponential { mean } => mean,
            Self::Gamma { shape, scale } => shape * scale,
        }
    }

    /// `E[X^n]`.
    pub fn raw_moment(&self, n: usize) -> Result<f64> {
        if n > MOMENT_CAP {
            return Err(Error::MomentOrder {
                order: n,
                cap: MOMENT_CAP,
            });
        }
        let value = match *self {
            Self::Deterministic { value } => value.powi(n as i32),
            Self::Exponential { mean } => (1..=n).map(|j| j as f64 * mean).product(),
            Self::Gamma { shape, scale } => (0..n).map(|j| (shape + j as f64) * scale).product(),
        };
        Ok(value)
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Deterministic { .. } => 0.0,
            Self::Exponential { mean } => mean * mean,
            Self::Gamma { shape, scale } => shape * scale * scale,
        }
    }

    /// Second moment `E[X^2]`.
    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        self.variance() + m * m
    }

    /// `E[exp(-sX)]`. Defined for every `s >= 0`, and also for slightly
    /// negative `s` as long as the transform exists.
    pub fn lst(&self, s: f64) -> f64 {
        match *self {
            Self::Deterministic { value } => (-s * value).exp(),
            Self::Exponential { mean } => 1.0 / (1.0 + mean * s),
            Self::Gamma { shape, scale } => (1.0 + scale * s).powf(-shape),
        }
    }

    /// Rate of the distribution when it is exponential, including gamma
    /// with unit shape.
    pub fn exponential_rate(&self) -> Option<f64> {
        match *self {
            Self::Exponential { mean } => Some(1.0 / mean),
            Self::Gamma { shape, scale } if shape == 1.0 => Some(1.0 / scale),
            _ => None,
        }
    }

    /// Coefficients of the transform as a power series in `s`:
    /// `a_n = (-1)^n E[X^n] / n!` for `n = 0..=order`.
    pub fn lst_taylor(&self, order: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(order + 1);
        let mut factorial = 1.0;
        for n in 0..=order {
            if n > 0 {
                factorial *= n as f64;
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            out.push(sign * self.raw_moment(n)? / factorial);
        }
        Ok(out)
    }
}
