//! Allocation of a total glue budget `L` across stations.
//!
//! The approximate weighted waiting cost `Σ c_i U_i` only depends on the
//! glue distributions through their means and, in the retrial term, through
//! `E[e^{-ν_i G_i}]`; for fixed means it is smallest when every glue period
//! is deterministic. The remaining problem over deterministic lengths `g`
//! with `Σ g_i = L` is solved through its Lagrange condition `f_i(g_i) = κ`:
//! each `f_i` is strictly increasing, so an inner bisection inverts it and
//! an outer bisection finds the `κ` at which the lengths add up to `L`.

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::pcl;

/// Relative precision at which the inner bisection stops.
const INNER_RELATIVE_WIDTH: f64 = 4.0 * f64::EPSILON;
const INNER_MAX_ITERATIONS: usize = 2_000;
/// Absolute tolerance on `Σ h_j(κ) - L`.
pub const BUDGET_TOLERANCE: f64 = 1e-11;
const OUTER_MAX_ITERATIONS: usize = 2_000;
const MAX_DOUBLINGS: usize = 200;

/// Minimize `Σ c_i U_i` over glue lengths summing to `budget`. The glue
/// specifications in `base` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    base: SystemConfig,
    budget: f64,
}

impl OptimizationProblem {
    pub fn new(base: SystemConfig, budget: f64) -> Result<Self> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "glue budget must be positive, got {budget}"
            )));
        }
        Ok(Self { base, budget })
    }

    pub fn base(&self) -> &SystemConfig {
        &self.base
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// `(Σ E[S_j] + L) / (1 - ρ)`: the mean cycle length under the budget.
    fn cycle(&self) -> f64 {
        (self.switchover_mean() + self.budget) / (1.0 - self.base.rho())
    }

    fn switchover_mean(&self) -> f64 {
        self.base.stations().iter().map(|s| s.switchover.mean()).sum()
    }

    /// The base configuration with deterministic glue lengths `g`.
    pub fn config_with(&self, g: &[f64]) -> Result<SystemConfig> {
        let glue: Vec<DistributionSpec> = g.iter().map(|&v| DistributionSpec::deterministic(v)).collect();
        self.base.with_glue(&glue)
    }

    fn check_lengths(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} glue lengths, got {}",
                self.len(),
                g.len()
            )));
        }
        if let Some(v) = g.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::OutOfDomain(format!("glue length {v} is not positive")));
        }
        let total: f64 = g.iter().sum();
        if (total - self.budget).abs() > 1e-9 * self.budget {
            return Err(Error::BudgetMismatch {
                budget: self.budget,
                actual: total,
            });
        }
        Ok(())
    }
}

/// Solution of [`optimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub g_star: Vec<f64>,
    pub kappa_star: f64,
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub outer_iterations: usize,
    /// Inner bisection steps summed over all inversions.
    pub inner_iterations: usize,
    pub lower_bracket_doublings: usize,
    /// Width of the final `κ` bracket.
    pub kappa_bracket_width: f64,
    /// `Σ g*_i - L`.
    pub budget_residual: f64,
}

/// `Σ c_i U_i` with `U_i` the approximate mean waiting time, for arbitrary
/// glue distributions whose means add up to `budget`.
pub fn objective_general(cfg: &SystemConfig, budget: f64) -> Result<f64> {
    let total: f64 = cfg.stations().iter().map(|s| s.glue.mean()).sum();
    if (total - budget).abs() > 1e-9 * budget.abs().max(1.0) {
        return Err(Error::BudgetMismatch {
            budget,
            actual: total,
        });
    }
    let approx = pcl::approx_mean_waiting(cfg)?;
    Ok(cfg
        .stations()
        .iter()
        .zip(&approx.mean_wait)
        .map(|(s, w)| s.weight * w)
        .sum())
}

/// Per-station `U_i` for deterministic glue lengths `g`.
pub fn deterministic_waits(problem: &OptimizationProblem, g: &[f64]) -> Result<Vec<f64>> {
    problem.check_lengths(g)?;
    let cfg = &problem.base;
    let (rho_i, rho) = cfg.utilizations();
    let sum_sq: f64 = rho_i.iter().map(|r| r * r).sum();
    let l = problem.budget;
    let es = problem.switchover_mean();
    let es_var: f64 = cfg.stations().iter().map(|s| s.switchover.variance()).sum();
    let es2 = es_var + es * es;
    let idle = es + l;
    let bracket = rho
        * (cfg.service_second_moment_rate() / (2.0 * (1.0 - rho))
            + (es2 + 2.0 * l * es + l * l) / (2.0 * idle))
        + idle / (2.0 * (1.0 - rho)) * (rho * rho + sum_sq);
    let cycle = problem.cycle();
    Ok(cfg
        .stations()
        .iter()
        .zip(g)
        .map(|(s, &gi)| {
            let retrial = 1.0 / (-(-s.nu * gi).exp_m1()) - 1.0;
            (1.0 + s.rho()) / (rho + sum_sq) * bracket + retrial * (cycle - gi)
        })
        .collect())
}

/// `U(g) = Σ c_i U_i` for deterministic glue lengths `g` with `Σ g_i = L`.
pub fn objective_deterministic(problem: &OptimizationProblem, g: &[f64]) -> Result<f64> {
    let waits = deterministic_waits(problem, g)?;
    Ok(problem
        .base
        .stations()
        .iter()
        .zip(waits)
        .map(|(s, w)| s.weight * w)
        .sum())
}

fn f_value(problem: &OptimizationProblem, i: usize, g: f64) -> f64 {
    let s = problem.base.station(i);
    let c = s.weight;
    let e = (-s.nu * g).exp();
    let one_minus = -(-s.nu * g).exp_m1();
    c - c / one_minus - c * s.nu * e / (one_minus * one_minus) * (problem.cycle() - g)
}

/// `f_i(g) = ∂(c_i U_i)/∂g_i`, defined on `(0, L]`.
pub fn lagrange_f(problem: &OptimizationProblem, i: usize, g: f64) -> Result<f64> {
    if i >= problem.len() {
        return Err(Error::OutOfDomain(format!("no station {i}")));
    }
    if !(g > 0.0 && g <= problem.budget) {
        return Err(Error::OutOfDomain(format!(
            "glue length {g} outside (0, {}]",
            problem.budget
        )));
    }
    Ok(f_value(problem, i, g))
}

struct Inverse {
    g: f64,
    iterations: usize,
}

fn invert(problem: &OptimizationProblem, i: usize, kappa: f64) -> Inverse {
    let (mut lo, mut hi) = (0.0, problem.budget);
    let mut iterations = 0;
    while iterations < INNER_MAX_ITERATIONS && hi - lo > INNER_RELATIVE_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_value(problem, i, mid) < kappa {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Inverse {
        g: 0.5 * (lo + hi),
        iterations,
    }
}

/// `h_i(κ)`: the glue length in `(0, L)` with `f_i(h_i(κ)) = κ`.
pub fn invert_f(problem: &OptimizationProblem, i: usize, kappa: f64) -> Result<f64> {
    let upper = lagrange_f(problem, i, problem.budget)?;
    if !(kappa < upper) {
        return Err(Error::OutOfDomain(format!(
            "multiplier {kappa} not below f({}) = {upper}",
            problem.budget
        )));
    }
    Ok(invert(problem, i, kappa).g)
}

/// Optimal deterministic glue lengths.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    let n = problem.len();
    let l = problem.budget;
    let mut inner = 0;
    let lengths = |kappa: f64, inner: &mut usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let inv = invert(problem, i, kappa);
                *inner += inv.iterations;
                inv.g
            })
            .collect()
    };

    let upper_limit = (0..n)
        .map(|i| f_value(problem, i, l))
        .fold(f64::INFINITY, f64::min);
    let mut hi = upper_limit - 1e-12 * upper_limit.abs().max(1.0);
    let small = l * 1e-6 / n as f64;
    let mut lo = (0..n)
        .map(|i| f_value(problem, i, small))
        .fold(f64::INFINITY, f64::min);
    let mut doublings = 0;
    while lengths(lo, &mut inner).iter().sum::<f64>() >= l {
        if doublings == MAX_DOUBLINGS || !lo.is_finite() {
            return Err(Error::Bracket(format!(
                "no lower multiplier found after {doublings} doublings (last {lo})"
            )));
        }
        lo = hi - 2.0 * (hi - lo);
        doublings += 1;
    }
    let top: f64 = lengths(hi, &mut inner).iter().sum();
    if top <= l {
        return Err(Error::Bracket(format!(
            "lengths at the upper multiplier {hi} add up to {top}, not above {l}"
        )));
    }

    let mut outer = 0;
    let (mut kappa, mut g) = (hi, Vec::new());
    while outer < OUTER_MAX_ITERATIONS {
        outer += 1;
        kappa = 0.5 * (lo + hi);
        g = lengths(kappa, &mut inner);
        let excess = g.iter().sum::<f64>() - l;
        if excess.abs() <= BUDGET_TOLERANCE || kappa <= lo || kappa >= hi {
            break;
        }
        if excess < 0.0 {
            lo = kappa;
        } else {
            hi = kappa;
        }
    }
    let residual = g.iter().sum::<f64>() - l;
    if residual.abs() > 1e-9 * l {
        return Err(Error::Bracket(format!(
            "multiplier bisection stalled at {kappa} with budget residual {residual}"
        )));
    }
    let objective = objective_deterministic(problem, &g)?;
    Ok(OptimizationResult {
        g_star: g,
        kappa_star: kappa,
        objective,
        diagnostics: Diagnostics {
            outer_iterations: outer,
            inner_iterations: inner,
            lower_bracket_doublings: doublings,
            kappa_bracket_width: hi - lo,
            budget_residual: residual,
        },
    })
}
