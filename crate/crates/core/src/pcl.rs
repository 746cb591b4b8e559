//! Pseudo conservation law and the mean-waiting-time approximation for
//! generally distributed glue periods.
//!
//! With `X = Σ (S_j + G_j)` the total idle time per cycle, the law reads
//!
//! ```text
//! Σ ρ_i E[W_i] = ρ (Σ λ_i E[B_i^2] / (2(1-ρ)) + E[X^2] / (2E[X]))
//!              + (ρ^2 + Σ ρ_i^2) E[X] / (2(1-ρ))
//!              + Σ ρ_i r_i (E[X] / (1-ρ) - E[G_i])
//! ```
//!
//! where `r_i = G_i~(ν_i) / (1 - G_i~(ν_i))`. The approximation assumes a
//! station-independent mean residual cycle and fixes it with the law.

use crate::error::{Error, Result};
use crate::model::SystemConfig;

fn retrial_multipliers(cfg: &SystemConfig) -> Result<Vec<f64>> {
    cfg.stations()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let g = s.glue.lst(s.nu);
            if g >= 1.0 {
                Err(Error::DegenerateGlue { station: i })
            } else {
                Ok(g / (1.0 - g))
            }
        })
        .collect()
}

/// Mean work left at station `i` when its visit ends:
/// `ρ_i^2 E[C] + ρ_i r_i (E[C] - E[G_i])`.
pub fn leftover_work(cfg: &SystemConfig) -> Result<Vec<f64>> {
    let ec = cfg.mean_cycle();
    let r = retrial_multipliers(cfg)?;
    Ok(cfg
        .stations()
        .iter()
        .zip(r)
        .map(|(s, r)| {
            let rho = s.rho();
            rho * rho * ec + rho * r * (ec - s.glue.mean())
        })
        .collect())
}

/// The right-hand side of the pseudo conservation law, split by term.
#[derive(Debug, Clone, PartialEq)]
pub struct PclReport {
    pub leftover_work: Vec<f64>,
    /// `ρ Σλ E[B^2] / (2(1-ρ))`.
    pub service_term: f64,
    /// `ρ E[X^2] / (2 E[X])`.
    pub idle_term: f64,
    /// `(ρ^2 + Σρ_i^2) E[X] / (2(1-ρ))`.
    pub cross_term: f64,
    /// `Σ ρ_i r_i (E[X]/(1-ρ) - E[G_i])`.
    pub retrial_term: f64,
    /// `Σ ρ_i E[W_i]`.
    pub weighted_wait: f64,
}

pub fn pcl_rhs(cfg: &SystemConfig) -> Result<PclReport> {
    let (rho_i, rho) = cfg.utilizations();
    let (ex, ex2) = cfg.total_idle_moments();
    let sum_sq: f64 = rho_i.iter().map(|r| r * r).sum();
    let r = retrial_multipliers(cfg)?;
    let service_term = rho * cfg.service_second_moment_rate() / (2.0 * (1.0 - rho));
    let idle_term = rho * ex2 / (2.0 * ex);
    let cross_term = (rho * rho + sum_sq) * ex / (2.0 * (1.0 - rho));
    let retrial_term = cfg
        .stations()
        .iter()
        .zip(&r)
        .map(|(s, r)| s.rho() * r * (ex / (1.0 - rho) - s.glue.mean()))
        .sum();
    Ok(PclReport {
        leftover_work: leftover_work(cfg)?,
        service_term,
        idle_term,
        cross_term,
        retrial_term,
        weighted_wait: service_term + idle_term + cross_term + retrial_term,
    })
}

/// Mean residual cycle time `E[R_c]` fixed by the conservation law.
pub fn residual_cycle(cfg: &SystemConfig) -> Result<f64> {
    let (rho_i, rho) = cfg.utilizations();
    if rho <= 0.0 {
        return Err(Error::OutOfDomain(
            "residual cycle needs positive total utilization".into(),
        ));
    }
    let (ex, ex2) = cfg.total_idle_moments();
    let sum_sq: f64 = rho_i.iter().map(|r| r * r).sum();
    let base = ex / (2.0 * (1.0 - rho));
    let bracket = cfg.service_second_moment_rate() / (2.0 * (1.0 - rho)) + ex2 / (2.0 * ex) + rho * base;
    Ok((rho * bracket + sum_sq * base) / (rho + sum_sq))
}

/// Approximate mean waiting times.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub residual_cycle: f64,
    pub mean_wait: Vec<f64>,
    /// `G_j~(ν_j) / (1 - G_j~(ν_j))`.
    pub retrial_multiplier: Vec<f64>,
}

/// `E[W_j] ≈ (1 + ρ_j) E[R_c] + r_j (E[C] - E[G_j])`.
pub fn approx_mean_waiting(cfg: &SystemConfig) -> Result<ApproxReport> {
    let rc = residual_cycle(cfg)?;
    let ec = cfg.mean_cycle();
    let r = retrial_multipliers(cfg)?;
    let mean_wait = cfg
        .stations()
        .iter()
        .zip(&r)
        .map(|(s, r)| (1.0 + s.rho()) * rc + r * (ec - s.glue.mean()))
        .collect();
    Ok(ApproxReport {
        residual_cycle: rc,
        mean_wait,
        retrial_multiplier: r,
    })
}

/// `Σ ρ_i w_i` for a vector of per-station waits.
pub fn weighted_sum(cfg: &SystemConfig, waits: &[f64]) -> f64 {
    cfg.stations().iter().zip(waits).map(|(s, w)| s.rho() * w).sum()
}
