//! Scaled moments of the station-size generating functions at arbitrary
//! epochs inside glue (`Ψ_g`), visit (`Ψ_v`) and switchover (`Ψ_s`) periods.

use crate::error::{Error, Result};
use crate::exact::phi::{glue_rates, PhiTable};
use crate::model::SystemConfig;
use crate::series::{self, CoefficientTensors};

/// Evaluates `Ψ_g`, `Ψ_v`, `Ψ_s` and `Θ` on demand from a Φ table.
#[derive(Debug, Clone)]
pub struct PsiMoments<'a> {
    cfg: &'a SystemConfig,
    phi: &'a PhiTable,
    tensors: CoefficientTensors,
    gamma: Vec<f64>,
    mean_cycle: f64,
}

fn minus(l: &[u32], lp: &[u32]) -> Vec<u32> {
    l.iter().zip(lp).map(|(a, b)| a - b).collect()
}

/// Builds the evaluator. Visit-period moments of total order `k` need the
/// table through order `k + 1`.
pub fn psi_moments<'a>(cfg: &'a SystemConfig, phi: &'a PhiTable) -> Result<PsiMoments<'a>> {
    Ok(PsiMoments {
        cfg,
        phi,
        tensors: CoefficientTensors::new(cfg, phi.order().max(1))?,
        gamma: glue_rates(cfg)?,
        mean_cycle: cfg.mean_cycle(),
    })
}

impl<'a> PsiMoments<'a> {
    fn need(&self, order: usize) -> Result<()> {
        if order > self.phi.order() {
            Err(Error::PhiOrder {
                needed: order,
                available: self.phi.order(),
            })
        } else {
            Ok(())
        }
    }

    /// `Ψ_{g,i}^{(l,m)} = γ_i Φ_i^{(l,m)}`.
    pub fn glue(&self, i: usize, l: &[u32], m: u32) -> Result<f64> {
        Ok(self.gamma[i] * self.phi.get(i, l, m)?)
    }

    /// `ρ_i Ψ_{v,i}^{(l,m)}`, which stays finite when `ρ_i = 0`.
    pub fn visit_weighted(&self, i: usize, l: &[u32], m: u32) -> Result<f64> {
        self.need(series::total(l) + m as usize + 1)?;
        let mut sum = 0.0;
        for lp in series::sub_indices(l) {
            let rest = minus(l, &lp);
            for k in 0..=series::total(&rest) {
                let eta = self.tensors.eta(i, k, &rest);
                if eta != 0.0 {
                    sum += self.phi.get(i, &lp, m + k as u32 + 1)? * eta;
                }
            }
        }
        Ok(self.gamma[i] / self.mean_cycle * sum)
    }

    /// `Ψ_{v,i}^{(l,m)}`.
    pub fn visit(&self, i: usize, l: &[u32], m: u32) -> Result<f64> {
        let rho = self.cfg.station(i).rho();
        if rho <= 0.0 {
            return Err(Error::ZeroUtilization { station: i });
        }
        Ok(self.visit_weighted(i, l, m)? / rho)
    }

    /// `Θ_i^{(l)}`: coefficients of `φ_i(z, β_i(z))`.
    pub fn theta(&self, i: usize, l: &[u32]) -> Result<f64> {
        self.need(series::total(l))?;
        let mut sum = 0.0;
        for lp in series::sub_indices(l) {
            let rest = minus(l, &lp);
            for k in 0..=series::total(&rest) {
                let delta = self.tensors.delta(i, k, &rest);
                if delta != 0.0 {
                    sum += self.phi.get(i, &lp, k as u32)? * delta;
                }
            }
        }
        Ok(sum)
    }

    /// `E[S_i] Ψ_{s,i}^{(l)}`.
    fn switchover_scaled(&self, i: usize, l: &[u32]) -> Result<f64> {
        let mut sum = 0.0;
        for lp in series::sub_indices(l) {
            let rest = minus(l, &lp);
            sum += self.theta(i, &lp)? * self.tensors.zeta(i, &rest);
        }
        Ok(self.gamma[i] * sum)
    }

    /// `(E[S_i] / E[C]) Ψ_{s,i}^{(l)}`.
    pub fn switchover_weighted(&self, i: usize, l: &[u32]) -> Result<f64> {
        Ok(self.switchover_scaled(i, l)? / self.mean_cycle)
    }

    /// `Ψ_{s,i}^{(l)}`.
    pub fn switchover(&self, i: usize, l: &[u32]) -> Result<f64> {
        Ok(self.switchover_scaled(i, l)? / self.cfg.station(i).switchover.mean())
    }

    /// `(E[G_i] / E[C]) Ψ_{g,i}^{(l,m)}`.
    pub fn glue_weighted(&self, i: usize, l: &[u32], m: u32) -> Result<f64> {
        Ok(self.glue(i, l, m)? / (self.gamma[i] * self.mean_cycle))
    }

    /// Time-average of a moment over the whole cycle for orbit-only
    /// coordinates: `Σ_k ρ_k Ψ_v,k + (E[G_k]/E[C]) Ψ_g,k + (E[S_k]/E[C]) Ψ_s,k`.
    pub fn orbit_average(&self, l: &[u32]) -> Result<f64> {
        let mut sum = 0.0;
        for k in 0..self.cfg.len() {
            sum += self.visit_weighted(k, l, 0)?
                + self.glue_weighted(k, l, 0)?
                + self.switchover_weighted(k, l)?;
        }
        Ok(sum)
    }
}
