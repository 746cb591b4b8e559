//! One table per engine.

use glue_polling::exact::station_size_stats;
use glue_polling::optimize::{deterministic_waits, optimize, OptimizationProblem};
use glue_polling::pcl::{approx_mean_waiting, pcl_rhs};
use glue_polling::sim::{simulate, verify_pcl, SimConfig, SimResult};
use glue_polling::SystemConfig;

use crate::error::Result;
use crate::output::{num, opt, Table};

/// Station parameters with utilizations, and the system totals on a last
/// row labelled `total`.
pub fn validate(system: &SystemConfig) -> Table {
    let mut t = Table::new([
        "station", "lambda", "nu", "weight", "rho", "service_mean", "switchover_mean", "glue_mean",
    ]);
    for (i, s) in system.stations().iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(s.lambda),
            num(s.nu),
            num(s.weight),
            num(s.rho()),
            num(s.service.mean()),
            num(s.switchover.mean()),
            num(s.glue.mean()),
        ]);
    }
    let mut total = vec![String::new(); t.headers.len()];
    total[0] = "total".into();
    total[4] = num(system.rho());
    t.push(total);
    t
}

/// Columns: station, mean_orbit, mean_orbit_queue, mean_size, variance,
/// scv, mean_wait, then `cor_j` for every station `j`.
pub fn exact(system: &SystemConfig) -> Result<Table> {
    let stats = station_size_stats(system)?;
    let n = system.len();
    let mut headers: Vec<String> = [
        "station", "mean_orbit", "mean_orbit_queue", "mean_size", "variance", "scv", "mean_wait",
    ]
    .map(String::from)
    .to_vec();
    headers.extend((0..n).map(|j| format!("cor_{j}")));
    let mut t = Table::new(headers);
    for i in 0..n {
        let mut row = vec![
            i.to_string(),
            num(stats.means.orbit[i]),
            num(stats.means.orbit_queue[i]),
            num(stats.means.total[i]),
            num(stats.variance[i]),
            num(stats.scv[i]),
            opt(stats.mean_wait[i]),
        ];
        row.extend(stats.correlation[i].iter().map(|&c| num(c)));
        t.push(row);
    }
    Ok(t)
}

pub fn approx(system: &SystemConfig) -> Result<Table> {
    let r = approx_mean_waiting(system)?;
    let mut t = Table::new(["station", "rho", "retrial_multiplier", "residual_cycle", "mean_wait"]);
    for (i, s) in system.stations().iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(s.rho()),
            num(r.retrial_multiplier[i]),
            num(r.residual_cycle),
            num(r.mean_wait[i]),
        ]);
    }
    Ok(t)
}

/// The law's right-hand side term by term, then the leftover work per
/// station. Columns: term, station, value.
pub fn pcl(system: &SystemConfig) -> Result<Table> {
    let r = pcl_rhs(system)?;
    let mut t = Table::new(["term", "station", "value"]);
    for (name, v) in [
        ("service", r.service_term),
        ("idle", r.idle_term),
        ("cross", r.cross_term),
        ("retrial", r.retrial_term),
        ("weighted_wait", r.weighted_wait),
    ] {
        t.push(vec![name.into(), String::new(), num(v)]);
    }
    for (i, w) in r.leftover_work.iter().enumerate() {
        t.push(vec!["leftover_work".into(), i.to_string(), num(*w)]);
    }
    Ok(t)
}

/// Per-station estimates with 95% bounds, then a `total` row with the
/// weighted wait, the conservation law's value and whether it lies inside
/// the interval.
pub fn simulation(cfg: &SimConfig) -> Result<(SimResult, Table)> {
    let r = simulate(cfg)?;
    let check = verify_pcl(&r, &cfg.system)?;
    let mut t = Table::new([
        "station", "served", "mean_wait", "wait_lower", "wait_upper", "mean_size", "size_lower",
        "size_upper", "mean_size_squared", "pcl_rhs", "pcl_pass",
    ]);
    for (i, s) in r.stations.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            s.served.to_string(),
            opt(s.wait.map(|e| e.mean)),
            opt(s.wait.map(|e| e.lower)),
            opt(s.wait.map(|e| e.upper)),
            num(s.size.mean),
            num(s.size.lower),
            num(s.size.upper),
            num(s.size_squared.mean),
            String::new(),
            String::new(),
        ]);
    }
    let w = r.weighted_wait;
    t.push(vec![
        "total".into(),
        r.stations.iter().map(|s| s.served).sum::<u64>().to_string(),
        opt(w.map(|e| e.mean)),
        opt(w.map(|e| e.lower)),
        opt(w.map(|e| e.upper)),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        num(check.rhs),
        check.pass.to_string(),
    ]);
    Ok((r, t))
}

/// Raw batch means, one row per batch and station.
pub fn batches(r: &SimResult) -> Table {
    let mut t = Table::new([
        "batch", "station", "mean_wait", "served", "mean_size", "mean_size_squared",
        "mean_orbit_queue", "weighted_wait", "workload", "cycle_length", "duration",
    ]);
    for (b, m) in r.batches.iter().enumerate() {
        for i in 0..m.size.len() {
            t.push(vec![
                b.to_string(),
                i.to_string(),
                num(m.mean_wait[i]),
                m.served[i].to_string(),
                num(m.size[i]),
                num(m.size_squared[i]),
                num(m.orbit_queue[i]),
                num(m.weighted_wait),
                num(m.workload),
                num(m.cycle_length),
                num(m.duration),
            ]);
        }
    }
    t
}

/// Optimal deterministic glue lengths. Columns: station, g_star, mean_wait,
/// weight, kappa, objective; the last two repeat on every row.
pub fn optimization(problem: &OptimizationProblem) -> Result<Table> {
    let r = optimize(problem)?;
    let waits = deterministic_waits(problem, &r.g_star)?;
    let mut t = Table::new(["station", "g_star", "mean_wait", "weight", "kappa", "objective"]);
    for (i, s) in problem.base().stations().iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(r.g_star[i]),
            num(waits[i]),
            num(s.weight),
            num(r.kappa_star),
            num(r.objective),
        ]);
    }
    Ok(t)
}
