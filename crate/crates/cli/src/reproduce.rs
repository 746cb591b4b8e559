//! Published tables as versioned fixtures, recomputed and compared.
//!
//! A fixture lists, per row, the full station set and the expected values of
//! one or more quantities; the tolerance of each quantity is declared once
//! per fixture. Built-in fixtures ship with the binary; any other file in the
//! same format can be passed instead.

use std::path::Path;

use glue_polling::exact::exact_mean_waiting;
use glue_polling::optimize::{deterministic_waits, optimize, OptimizationProblem};
use glue_polling::pcl::approx_mean_waiting;
use glue_polling::sim::{simulate, SimConfig};
use glue_polling::SystemConfig;
use serde::Deserialize;

use crate::config::RawStation;
use crate::error::{CliError, Result};
use crate::output::{num, Table};

/// Fixture format understood by this build.
pub const FIXTURE_VERSION: u32 = 1;

pub const TABLES: [&str; 7] = ["table1", "table2", "table4", "table5", "table6", "table7", "table8"];

pub fn builtin(table: &str) -> Option<&'static str> {
    Some(match table {
        "table1" => include_str!("../fixtures/table1.toml"),
        "table2" => include_str!("../fixtures/table2.toml"),
        "table4" => include_str!("../fixtures/table4.toml"),
        "table5" => include_str!("../fixtures/table5.toml"),
        "table6" => include_str!("../fixtures/table6.toml"),
        "table7" => include_str!("../fixtures/table7.toml"),
        "table8" => include_str!("../fixtures/table8.toml"),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Approximate mean waiting times.
    ApproxWait,
    /// Exact mean waiting times (exponential glue).
    ExactWait,
    /// Simulated mean waiting times against published confidence bounds.
    SimWait,
    /// Optimal glue lengths.
    GStar,
    /// Optimal objective value.
    Objective,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Self::ApproxWait => "approx_wait",
            Self::ExactWait => "exact_wait",
            Self::SimWait => "sim_wait",
            Self::GStar => "g_star",
            Self::Objective => "objective",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Absolute,
    Relative,
    /// `value` times the published half-widths on either side of the
    /// published mean.
    Interval,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub quantity: Quantity,
    pub mode: Mode,
    pub value: f64,
    /// Interval multiplier for runs shorter than the fixture's cycle count.
    pub reduced_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    pub cycles: u64,
    pub batches: u32,
    pub warmup: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub approx_wait: Option<Vec<f64>>,
    pub exact_wait: Option<Vec<f64>>,
    pub sim_wait: Option<Vec<f64>>,
    pub sim_lower: Option<Vec<f64>>,
    pub sim_upper: Option<Vec<f64>>,
    pub g_star: Option<Vec<f64>>,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    label: String,
    printed_decimals: Option<u32>,
    budget: Option<f64>,
    objective_weights: Option<Vec<f64>>,
    expected: Expected,
    stations: Vec<RawStation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixture {
    version: u32,
    table: String,
    description: String,
    note: Option<String>,
    simulation: Option<Simulation>,
    tolerances: Vec<Tolerance>,
    rows: Vec<RawRow>,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub label: String,
    /// Decimals shown in the published row when fewer than the tolerance
    /// resolves; absolute tolerances widen to half a unit in the last place.
    pub printed_decimals: Option<u32>,
    pub system: SystemConfig,
    pub budget: Option<f64>,
    /// Weights for the reported objective when they differ from the
    /// station weights that drive the allocation.
    pub objective_weights: Option<Vec<f64>>,
    pub expected: Expected,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub table: String,
    pub description: String,
    pub note: Option<String>,
    pub simulation: Option<Simulation>,
    pub tolerances: Vec<Tolerance>,
    pub rows: Vec<Row>,
}

impl Fixture {
    pub fn tolerance(&self, q: Quantity) -> Option<&Tolerance> {
        self.tolerances.iter().find(|t| t.quantity == q)
    }
}

pub fn parse_fixture(text: &str, origin: &Path) -> Result<Fixture> {
    let raw: RawFixture = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    if raw.version != FIXTURE_VERSION {
        return Err(CliError::Validation(format!(
            "{}: fixture version {} is not supported (expected {FIXTURE_VERSION})",
            origin.display(),
            raw.version
        )));
    }
    let rows = raw
        .rows
        .into_iter()
        .map(|r| {
            let stations = r
                .stations
                .iter()
                .enumerate()
                .map(|(i, s)| s.build(i))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| CliError::Validation(format!("row {}: {e}", r.label)))?;
            let system = SystemConfig::new(stations)
                .map_err(|e| CliError::Validation(format!("row {}: {e}", r.label)))?;
            Ok(Row {
                label: r.label,
                printed_decimals: r.printed_decimals,
                system,
                budget: r.budget,
                objective_weights: r.objective_weights,
                expected: r.expected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fixture {
        table: raw.table,
        description: raw.description,
        note: raw.note,
        simulation: raw.simulation,
        tolerances: raw.tolerances,
        rows,
    })
}

pub fn load_builtin(table: &str) -> Result<Fixture> {
    let text = builtin(table).ok_or_else(|| {
        CliError::Validation(format!("unknown table `{table}`; expected one of {}", TABLES.join(", ")))
    })?;
    parse_fixture(text, Path::new(&format!("fixtures/{table}.toml")))
}

/// Overrides for the simulation part of a fixture.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimOverrides {
    pub cycles: Option<u64>,
    pub seed: Option<u64>,
}

/// One published cell next to the recomputed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub row: String,
    pub quantity: Quantity,
    pub station: Option<usize>,
    pub published: f64,
    pub computed: f64,
    /// Largest admissible `|computed - published|` on the side the deviation
    /// falls.
    pub allowed: f64,
}

impl Comparison {
    pub fn deviation(&self) -> f64 {
        self.computed - self.published
    }

    pub fn pass(&self) -> bool {
        self.deviation().abs() <= self.allowed
    }
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub table: String,
    pub comparisons: Vec<Comparison>,
}

impl Reproduction {
    pub fn pass(&self) -> bool {
        self.comparisons.iter().all(Comparison::pass)
    }

    pub fn failures(&self) -> Vec<&Comparison> {
        self.comparisons.iter().filter(|c| !c.pass()).collect()
    }

    /// Largest `|deviation|` per quantity, in first-seen order.
    pub fn max_deviations(&self) -> Vec<(Quantity, f64)> {
        let mut out: Vec<(Quantity, f64)> = Vec::new();
        for c in &self.comparisons {
            let d = c.deviation().abs();
            match out.iter_mut().find(|(q, _)| *q == c.quantity) {
                Some((_, m)) => *m = m.max(d),
                None => out.push((c.quantity, d)),
            }
        }
        out
    }

    /// Columns: table, row, quantity, station, published, computed, deviation,
    /// allowed, pass.
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "table", "row", "quantity", "station", "published", "computed", "deviation", "allowed", "pass",
        ]);
        for c in &self.comparisons {
            t.push(vec![
                self.table.clone(),
                c.row.clone(),
                c.quantity.name().into(),
                c.station.map(|s| s.to_string()).unwrap_or_default(),
                num(c.published),
                num(c.computed),
                num(c.deviation()),
                num(c.allowed),
                c.pass().to_string(),
            ]);
        }
        t
    }
}

fn mismatch(label: &str, what: &str, expected: usize, got: usize) -> CliError {
    CliError::Validation(format!("row {label}: {what} has {got} entries for {expected} stations"))
}

fn per_station(
    out: &mut Vec<Comparison>,
    row: &Row,
    q: Quantity,
    tol: &Tolerance,
    published: &[f64],
    computed: &[f64],
) -> Result<()> {
    if published.len() != computed.len() {
        return Err(mismatch(&row.label, q.name(), computed.len(), published.len()));
    }
    for (i, (&p, &c)) in published.iter().zip(computed).enumerate() {
        let allowed = match tol.mode {
            Mode::Absolute => match row.printed_decimals {
                Some(d) => tol.value.max(0.5 * 10f64.powi(-(d as i32))),
                None => tol.value,
            },
            Mode::Relative => tol.value * p.abs(),
            Mode::Interval => unreachable!("interval tolerances only apply to simulations"),
        };
        out.push(Comparison {
            row: row.label.clone(),
            quantity: q,
            station: Some(i),
            published: p,
            computed: c,
            allowed,
        });
    }
    Ok(())
}

fn require(fixture: &Fixture, q: Quantity) -> Result<&Tolerance> {
    let tol = fixture.tolerance(q).ok_or_else(|| {
        CliError::Validation(format!("{}: no tolerance declared for {}", fixture.table, q.name()))
    })?;
    let interval = tol.mode == Mode::Interval;
    if interval != (q == Quantity::SimWait) {
        return Err(CliError::Validation(format!(
            "{}: tolerance mode for {} is not applicable",
            fixture.table,
            q.name()
        )));
    }
    Ok(tol)
}

fn simulate_row(
    fixture: &Fixture,
    row: &Row,
    index: usize,
    overrides: SimOverrides,
    out: &mut Vec<Comparison>,
) -> Result<()> {
    let e = &row.expected;
    let Some(published) = &e.sim_wait else {
        return Ok(());
    };
    let tol = require(fixture, Quantity::SimWait)?;
    let sim = fixture.simulation.as_ref().ok_or_else(|| {
        CliError::Validation(format!("{}: simulated values but no [simulation] table", fixture.table))
    })?;
    let (lower, upper) = match (&e.sim_lower, &e.sim_upper) {
        (Some(l), Some(u)) => (l, u),
        _ => return Err(CliError::Validation(format!("row {}: sim_wait needs sim_lower and sim_upper", row.label))),
    };
    let n = row.system.len();
    for (what, v) in [("sim_wait", published), ("sim_lower", lower), ("sim_upper", upper)] {
        if v.len() != n {
            return Err(mismatch(&row.label, what, n, v.len()));
        }
    }
    let cycles = overrides.cycles.unwrap_or(sim.cycles);
    let factor = if cycles >= sim.cycles {
        tol.value
    } else {
        tol.reduced_value.unwrap_or(tol.value)
    };
    let mut cfg = SimConfig::new(row.system.clone(), overrides.seed.unwrap_or(sim.seed))
        .with_cycles(cycles, sim.batches);
    cfg.warmup_cycles = sim.warmup;
    cfg.replication = index as u32;
    let r = simulate(&cfg)?;
    for i in 0..n {
        let computed = r.stations[i].wait.map(|w| w.mean).unwrap_or(f64::NAN);
        let side = if computed >= published[i] { upper[i] - published[i] } else { published[i] - lower[i] };
        out.push(Comparison {
            row: row.label.clone(),
            quantity: Quantity::SimWait,
            station: Some(i),
            published: published[i],
            computed,
            allowed: factor * side,
        });
    }
    Ok(())
}

/// Recomputes every published cell of the fixture.
pub fn reproduce(fixture: &Fixture, overrides: SimOverrides) -> Result<Reproduction> {
    let mut out = Vec::new();
    for (index, row) in fixture.rows.iter().enumerate() {
        let e = &row.expected;
        if let Some(published) = &e.approx_wait {
            let tol = require(fixture, Quantity::ApproxWait)?;
            let computed = approx_mean_waiting(&row.system)?.mean_wait;
            per_station(&mut out, row, Quantity::ApproxWait, tol, published, &computed)?;
        }
        if let Some(published) = &e.exact_wait {
            let tol = require(fixture, Quantity::ExactWait)?;
            let computed = exact_mean_waiting(&row.system)?;
            per_station(&mut out, row, Quantity::ExactWait, tol, published, &computed)?;
        }
        simulate_row(fixture, row, index, overrides, &mut out)?;
        if e.g_star.is_some() || e.objective.is_some() {
            let budget = row.budget.ok_or_else(|| {
                CliError::Validation(format!("row {}: optimizer rows need a budget", row.label))
            })?;
            let problem = OptimizationProblem::new(row.system.clone(), budget)?;
            let r = optimize(&problem)?;
            if let Some(published) = &e.g_star {
                let tol = require(fixture, Quantity::GStar)?;
                per_station(&mut out, row, Quantity::GStar, tol, published, &r.g_star)?;
            }
            if let Some(published) = e.objective {
                let tol = require(fixture, Quantity::Objective)?;
                let computed = match &row.objective_weights {
                    None => r.objective,
                    Some(w) if w.len() == row.system.len() => deterministic_waits(&problem, &r.g_star)?
                        .iter()
                        .zip(w)
                        .map(|(u, c)| u * c)
                        .sum(),
                    Some(w) => return Err(mismatch(&row.label, "objective_weights", row.system.len(), w.len())),
                };
                let mut cell = Vec::new();
                per_station(&mut cell, row, Quantity::Objective, tol, &[published], &[computed])?;
                out.extend(cell.into_iter().map(|c| Comparison { station: None, ..c }));
            }
        }
    }
    Ok(Reproduction {
        table: fixture.table.clone(),
        comparisons: out,
    })
}
