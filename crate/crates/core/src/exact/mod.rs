//! Exact station-size moments for exponentially distributed glue periods.
//!
//! The pipeline is `Φ` (closed forms for order <= 1, fixed-point iteration
//! above) → `Ψ` at arbitrary epochs of glue, visit and switchover periods →
//! time-averaged moments of the orbit, orbit-plus-queue and total station
//! sizes. Mean waiting times follow from Little's law on the customers not
//! yet in service.
//!
//! Diagonal second moments come out of the generating-function calculus as
//! factorial moments `E[M(M-1)]`; variances are formed as
//! `E[M(M-1)] + E[M] - E[M]^2`.

pub mod phi;
pub mod psi;

pub use phi::{
    phi_first_moments, phi_higher_moments, phi_table, phi_table_with, IterationControl,
    OrderSystem, PhiTable,
};
pub use psi::{psi_moments, PsiMoments};

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::series;

/// Φ order needed for first moments.
pub const MEAN_ORDER: usize = 2;
/// Φ order needed for second moments.
pub const SECOND_MOMENT_ORDER: usize = 3;

/// Mean station sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StationMeans {
    /// `E[M_i^o]`: customers in orbit.
    pub orbit: Vec<f64>,
    /// `E[M_i^{oq}]`: orbit plus glued queue, excluding the one in service.
    pub orbit_queue: Vec<f64>,
    /// `E[M_i]`: everything at station `i`.
    pub total: Vec<f64>,
}

/// First and second moments of the station sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StationStats {
    pub means: StationMeans,
    /// `Var[M_i]`.
    pub variance: Vec<f64>,
    /// `Var[M_i] / E[M_i]^2` (0 for an empty station).
    pub scv: Vec<f64>,
    /// `E[M_i M_j]`, raw moments (diagonal included).
    pub second_moment: Vec<Vec<f64>>,
    /// `Cor(M_i, M_j)`, 1 on the diagonal, 0 when a variance vanishes.
    pub correlation: Vec<Vec<f64>>,
    /// `E[W_i] = E[M_i^{oq}] / λ_i`; `None` when `λ_i = 0`.
    pub mean_wait: Vec<Option<f64>>,
}

fn add(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn means_from(cfg: &SystemConfig, psi: &PsiMoments<'_>) -> Result<StationMeans> {
    let n = cfg.len();
    let zero = vec![0; n];
    let mut orbit = Vec::with_capacity(n);
    let mut orbit_queue = Vec::with_capacity(n);
    let mut total = Vec::with_capacity(n);
    for i in 0..n {
        let mo = psi.orbit_average(&series::unit(n, i))?;
        let moq = mo + psi.visit_weighted(i, &zero, 1)? + psi.glue_weighted(i, &zero, 1)?;
        orbit.push(mo);
        orbit_queue.push(moq);
        total.push(moq + cfg.station(i).rho());
    }
    Ok(StationMeans {
        orbit,
        orbit_queue,
        total,
    })
}

/// Mean station sizes (Φ through order 2).
pub fn station_means(cfg: &SystemConfig) -> Result<StationMeans> {
    let phi = phi_table(cfg, MEAN_ORDER)?;
    means_from(cfg, &psi_moments(cfg, &phi)?)
}

/// Exact mean waiting times `E[W_i] = E[M_i^{oq}] / λ_i`.
pub fn exact_mean_waiting(cfg: &SystemConfig) -> Result<Vec<f64>> {
    if let Some(i) = cfg.stations().iter().position(|s| s.lambda <= 0.0) {
        return Err(Error::ZeroArrivalRate { station: i });
    }
    let means = station_means(cfg)?;
    Ok(means
        .orbit_queue
        .iter()
        .zip(cfg.stations())
        .map(|(m, s)| m / s.lambda)
        .collect())
}

/// Full first- and second-moment statistics (Φ through order 3).
pub fn station_size_stats(cfg: &SystemConfig) -> Result<StationStats> {
    let phi = phi_table(cfg, SECOND_MOMENT_ORDER)?;
    station_size_stats_from(cfg, &phi)
}

/// As [`station_size_stats`] on a precomputed table of order >= 3.
pub fn station_size_stats_from(cfg: &SystemConfig, phi: &PhiTable) -> Result<StationStats> {
    let psi = psi_moments(cfg, phi)?;
    let means = means_from(cfg, &psi)?;
    let n = cfg.len();
    let zero = vec![0; n];
    let units: Vec<Vec<u32>> = (0..n).map(|i| series::unit(n, i)).collect();

    let mut second = vec![vec![0.0; n]; n];
    for i in 0..n {
        let ui = &units[i];
        let twice = add(ui, ui);
        let fact_orbit = 2.0 * psi.orbit_average(&twice)?;
        let fact_orbit_queue = fact_orbit
            + 2.0
                * (psi.visit_weighted(i, ui, 1)?
                    + psi.glue_weighted(i, ui, 1)?
                    + psi.visit_weighted(i, &zero, 2)?
                    + psi.glue_weighted(i, &zero, 2)?);
        let fact_total = fact_orbit_queue
            + 2.0 * (psi.visit_weighted(i, ui, 0)? + psi.visit_weighted(i, &zero, 1)?);
        second[i][i] = fact_total + means.total[i];

        for j in (i + 1)..n {
            let uj = &units[j];
            let orbit = psi.orbit_average(&add(ui, uj))?;
            let orbit_queue = orbit
                + psi.visit_weighted(i, uj, 1)?
                + psi.visit_weighted(j, ui, 1)?
                + psi.glue_weighted(i, uj, 1)?
                + psi.glue_weighted(j, ui, 1)?;
            let total = orbit_queue + psi.visit_weighted(i, uj, 0)? + psi.visit_weighted(j, ui, 0)?;
            second[i][j] = total;
            second[j][i] = total;
        }
    }

    let variance: Vec<f64> = (0..n)
        .map(|i| second[i][i] - means.total[i] * means.total[i])
        .collect();
    let scv = (0..n)
        .map(|i| {
            let m = means.total[i];
            if m > 0.0 {
                variance[i] / (m * m)
            } else {
                0.0
            }
        })
        .collect();
    let correlation = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return 1.0;
                    }
                    let denom = (variance[i] * variance[j]).sqrt();
                    if denom > 0.0 {
                        (second[i][j] - means.total[i] * means.total[j]) / denom
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mean_wait = means
        .orbit_queue
        .iter()
        .zip(cfg.stations())
        .map(|(m, s)| (s.lambda > 0.0).then(|| m / s.lambda))
        .collect();

    Ok(StationStats {
        means,
        variance,
        scv,
        second_moment: second,
        correlation,
        mean_wait,
    })
}
