//! Scaled moments `Φ_i^{(l,m)}` of the glue-period transform `φ_i(z, w)`.
//!
//! Orders 0 and 1 have closed forms. For every higher total order `k` the
//! moments solve a linear system whose right-hand side only involves
//! lower-order entries; it is solved by the monotone fixed-point iteration
//! `Φ(0) = 0, Φ(n) = c + A Φ(n-1)`, where `c > 0` collects the lower-order
//! terms and `A >= 0` the same-order coupling.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::series::{self, CoefficientTensors, MultiIndex};

/// Absolute (for entries up to 1, relative above) change in the largest
/// entry at which the iteration stops.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Glue rates `γ_i = 1 / E[G_i]`; fails unless every glue period is
/// exponential.
pub fn glue_rates(cfg: &SystemConfig) -> Result<Vec<f64>> {
    cfg.stations()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.glue
                .exponential_rate()
                .ok_or(Error::NonExponentialGlue { station: i })
        })
        .collect()
}

/// Iteration controls for the higher-order fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationControl {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IterationControl {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Convergence record for one total order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderReport {
    pub order: usize,
    pub iterations: usize,
    pub residual: f64,
}

/// `Φ_i^{(l,m)}` for every station and every multi-index up to a total order.
#[derive(Debug, Clone)]
pub struct PhiTable {
    stations: usize,
    order: usize,
    values: HashMap<(usize, MultiIndex), f64>,
    control: IterationControl,
    reports: Vec<OrderReport>,
}

impl PhiTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stations(&self) -> usize {
        self.stations
    }

    pub fn control(&self) -> IterationControl {
        self.control
    }

    /// Iteration reports for orders >= 2.
    pub fn reports(&self) -> &[OrderReport] {
        &self.reports
    }

    /// Total iterations used across all iterated orders.
    pub fn iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).sum()
    }

    pub fn get(&self, i: usize, l: &[u32], m: u32) -> Result<f64> {
        let order = series::total(l) + m as usize;
        if order > self.order {
            return Err(Error::PhiOrder {
                needed: order,
                available: self.order,
            });
        }
        Ok(self.values[&(i, MultiIndex::new(l.to_vec(), m))])
    }

    fn at(&self, i: usize, idx: &MultiIndex) -> f64 {
        self.values[&(i, idx.clone())]
    }

    /// All `(station, index, value)` entries of a given total order.
    pub fn entries_of_order(&self, order: usize) -> Vec<(usize, MultiIndex, f64)> {
        let mut out: Vec<_> = self
            .values
            .iter()
            .filter(|((_, idx), _)| idx.order() == order)
            .map(|((i, idx), v)| (*i, idx.clone(), *v))
            .collect();
        out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        out
    }

    /// Extends the table through total order `target`.
    pub fn extend_to(
        &mut self,
        cfg: &SystemConfig,
        tensors: &CoefficientTensors,
        target: usize,
    ) -> Result<()> {
        while self.order < target {
            let k = self.order + 1;
            let system = OrderSystem::build(cfg, tensors, self, k)?;
            let solution = system.solve(self.control)?;
            for ((i, idx), v) in system.unknowns.iter().zip(&solution.values) {
                self.values.insert((*i, idx.clone()), *v);
            }
            self.reports.push(OrderReport {
                order: k,
                iterations: solution.iterations,
                residual: solution.residual,
            });
            self.order = k;
        }
        Ok(())
    }
}

/// Entries of total order <= 1 from their closed forms.
pub fn phi_first_moments(cfg: &SystemConfig) -> Result<PhiTable> {
    phi_first_moments_with(cfg, IterationControl::default())
}

fn phi_first_moments_with(cfg: &SystemConfig, control: IterationControl) -> Result<PhiTable> {
    let gamma = glue_rates(cfg)?;
    let n = cfg.len();
    let ec = cfg.mean_cycle();
    let mut values = HashMap::new();
    for i in 0..n {
        values.insert((i, MultiIndex::zero(n)), 1.0 / gamma[i]);
    }
    for j in 0..n {
        let sj = cfg.station(j);
        values.insert(
            (j, MultiIndex::new(vec![0; n], 1)),
            sj.lambda / gamma[j] * ec,
        );
        let unit = MultiIndex::new(series::unit(n, j), 0);
        let mut next = sj.lambda / sj.nu * (ec - 1.0 / gamma[j]);
        values.insert((j, unit.clone()), next);
        // Backward around the cycle: i = j-1, j-2, ..., j-N+1.
        for step in 1..n {
            let i = cfg.wrap(j as isize - step as isize);
            let after = cfg.wrap(i as isize + 1);
            let si = cfg.station(i);
            let kron = if step == 1 { 1.0 } else { 0.0 };
            let value = gamma[after] / gamma[i] * next
                + sj.lambda / gamma[i]
                    * ((kron - si.rho()) * ec - 1.0 / gamma[after] - si.switchover.mean());
            values.insert((i, unit.clone()), value);
            next = value;
        }
    }
    Ok(PhiTable {
        stations: n,
        order: 1,
        values,
        control,
        reports: Vec::new(),
    })
}

/// Complete table through total order `order` with default controls.
pub fn phi_table(cfg: &SystemConfig, order: usize) -> Result<PhiTable> {
    phi_table_with(cfg, order, IterationControl::default())
}

pub fn phi_table_with(
    cfg: &SystemConfig,
    order: usize,
    control: IterationControl,
) -> Result<PhiTable> {
    let mut table = phi_first_moments_with(cfg, control)?;
    phi_higher_moments(cfg, &mut table, order)?;
    Ok(table)
}

/// Runs the fixed-point iteration for every total order from the table's
/// current order + 1 up to `order`.
pub fn phi_higher_moments(cfg: &SystemConfig, table: &mut PhiTable, order: usize) -> Result<()> {
    if order <= table.order {
        return Ok(());
    }
    let tensors = CoefficientTensors::new(cfg, order)?;
    table.extend_to(cfg, &tensors, order)
}

/// The linear fixed-point system `x = c + A x` for one total order.
#[derive(Debug, Clone)]
pub struct OrderSystem {
    pub order: usize,
    pub unknowns: Vec<(usize, MultiIndex)>,
    pub constant: Vec<f64>,
    /// Sparse rows of `A`: `(column, coefficient)`.
    pub coupling: Vec<Vec<(usize, f64)>>,
}

/// Result of [`OrderSystem::solve`].
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl OrderSystem {
    /// Assembles the system for total order `k` from a table complete
    /// through order `k - 1`. Works for `k = 1` as well, which gives an
    /// independent route to the closed forms.
    pub fn build(
        cfg: &SystemConfig,
        tensors: &CoefficientTensors,
        lower: &PhiTable,
        k: usize,
    ) -> Result<Self> {
        if lower.order + 1 < k {
            return Err(Error::PhiOrder {
                needed: k - 1,
                available: lower.order,
            });
        }
        if tensors.order() < k {
            return Err(Error::InvalidConfig(format!(
                "coefficient tensors of order {} cannot build order {k}",
                tensors.order()
            )));
        }
        let gamma = glue_rates(cfg)?;
        let n = cfg.len();
        let per_station = MultiIndex::all_of_order(n, k);
        let mut unknowns = Vec::with_capacity(n * per_station.len());
        for i in 0..n {
            for idx in &per_station {
                unknowns.push((i, idx.clone()));
            }
        }
        let position: HashMap<(usize, MultiIndex), usize> = unknowns
            .iter()
            .enumerate()
            .map(|(p, key)| (key.clone(), p))
            .collect();

        let mut constant = Vec::with_capacity(unknowns.len());
        let mut coupling = Vec::with_capacity(unknowns.len());
        for (i, idx) in &unknowns {
            let i = *i;
            let st = cfg.station(i);
            let l = &idx.l;
            let m = idx.m;
            let denom = gamma[i] + f64::from(l[i]) * st.nu;
            let mut c = 0.0;
            let mut row = Vec::new();

            if m >= 1 {
                c += st.lambda * lower.at(i, &MultiIndex::new(l.clone(), m - 1));
                let mut up = l.clone();
                up[i] += 1;
                let col = position[&(i, MultiIndex::new(up, m - 1))];
                row.push((col, f64::from(l[i] + 1) * st.nu / denom));
            }
            for j in (0..n).filter(|&j| j != i && l[j] >= 1) {
                let mut down = l.clone();
                down[j] -= 1;
                c += cfg.station(j).lambda * lower.at(i, &MultiIndex::new(down, m));
            }
            if m == 0 {
                let p = cfg.prev(i);
                for lp in series::sub_indices(l) {
                    let rest: Vec<u32> = l.iter().zip(&lp).map(|(a, b)| a - b).collect();
                    let gap = series::total(&rest);
                    for kk in 0..gap {
                        let g = tensors.gamma(p, kk, &rest);
                        if g != 0.0 {
                            c += gamma[p] * lower.at(p, &MultiIndex::new(lp.clone(), kk as u32)) * g;
                        }
                    }
                    let g = tensors.gamma(p, gap, &rest);
                    if g != 0.0 {
                        let col = position[&(p, MultiIndex::new(lp.clone(), gap as u32))];
                        row.push((col, gamma[p] * g / denom));
                    }
                }
            }
            constant.push(c / denom);
            coupling.push(row);
        }
        Ok(Self {
            order: k,
            unknowns,
            constant,
            coupling,
        })
    }

    /// One application of the update map.
    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        self.constant
            .iter()
            .zip(&self.coupling)
            .map(|(c, row)| c + row.iter().map(|&(col, a)| a * x[col]).sum::<f64>())
            .collect()
    }

    /// Iterates from zero until the largest change drops below the tolerance.
    pub fn solve(&self, control: IterationControl) -> Result<FixedPoint> {
        let mut x = vec![0.0; self.constant.len()];
        let mut residual = f64::INFINITY;
        for iteration in 1..=control.max_iterations {
            let next = self.step(&x);
            residual = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                .fold(0.0, f64::max);
            x = next;
            if residual <= control.tolerance {
                return Ok(FixedPoint {
                    values: x,
                    iterations: iteration,
                    residual,
                });
            }
        }
        Err(Error::NotConverged {
            order: self.order,
            iterations: control.max_iterations,
            residual,
        })
    }
}
