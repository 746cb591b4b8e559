//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glue_polling::exact::{station_means, MEAN_ORDER, SECOND_MOMENT_ORDER};
use glue_polling::optimize::OptimizationProblem;
use glue_polling::sim::{ServiceOrder, SimConfig};
use glue_polling::{StationParams, SystemConfig};

use crate::config::load_document;
use crate::error::{CliError, Result};
use crate::output::{num, opt, Sink, Table};
use crate::reproduce::{load_builtin, parse_fixture, reproduce, SimOverrides};
use crate::{report, sweep};

/// Environment variable holding the default simulation seed.
pub const SEED_ENV: &str = "GPOLL_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "gpoll", version, about = "Gated polling systems with retrials and glue periods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config document (TOML)
    pub config: PathBuf,
    /// Output file; stdout if omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Order {
    GlueEpoch,
    ArrivalTime,
    Random,
}

impl From<Order> for ServiceOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::GlueEpoch => ServiceOrder::GlueEpoch,
            Order::ArrivalTime => ServiceOrder::ArrivalTime,
            Order::Random => ServiceOrder::Random,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config document and list utilizations
    Validate(Common),
    /// Exact station-size moments and mean waits (exponential glue only)
    Exact {
        #[command(flatten)]
        common: Common,
        /// Moment order K: 2 gives means only, 3 adds variances and correlations
        #[arg(short = 'K', long = "order", default_value_t = 3)]
        order: usize,
    },
    /// Approximate mean waiting times
    Approx(Common),
    /// Conservation-law right-hand side, term by term
    Pcl(Common),
    /// Discrete-event simulation with batch-means confidence intervals
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Cycles after warmup
        #[arg(long)]
        cycles: Option<u64>,
        #[arg(long)]
        batches: Option<u32>,
        /// Warmup cycles
        #[arg(long)]
        warmup: Option<u64>,
        #[arg(long, default_value_t = 0)]
        replication: u32,
        /// Service order within a visit
        #[arg(long, value_enum, default_value_t = Order::GlueEpoch)]
        order: Order,
        /// Also write the raw batch means here
        #[arg(long)]
        batches_out: Option<PathBuf>,
    },
    /// Optimal deterministic glue lengths under a total budget
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Total glue budget; defaults to the document's, then to the sum of glue means
        #[arg(long)]
        budget: Option<f64>,
        /// Comma-separated station weights
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Exact statistics over a log grid of exponential glue means
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.01)]
        from: f64,
        #[arg(long, default_value_t = 1000.0)]
        to: f64,
        #[arg(long, default_value_t = 10)]
        per_decade: u32,
        #[arg(long)]
        threads: Option<usize>,
        /// Fail unless every station has an interior minimum and a linear tail
        #[arg(long)]
        check: bool,
        /// Largest relative slope change over the last decade for --check
        #[arg(long, default_value_t = 0.02)]
        tail_tolerance: f64,
    },
    /// Recompute a published table and compare cell by cell
    Reproduce {
        /// table1, table2, table4, table5, table6, table7 or table8
        table: String,
        /// Fixture file to use instead of the built-in one
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long)]
        cycles: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Flag, then document, then the environment, then [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>, doc: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(doc) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{SEED_ENV}={v} is not a nonnegative integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn with_weights(system: &SystemConfig, weights: &[f64]) -> Result<SystemConfig> {
    if weights.len() != system.len() {
        return Err(CliError::Validation(format!(
            "{} weights given for {} stations",
            weights.len(),
            system.len()
        )));
    }
    Ok(system.map_stations(|i, s| StationParams {
        weight: weights[i],
        ..*s
    })?)
}

fn means_only(system: &SystemConfig) -> Result<Table> {
    let m = station_means(system)?;
    let mut t = Table::new(["station", "mean_orbit", "mean_orbit_queue", "mean_size", "mean_wait"]);
    for (i, s) in system.stations().iter().enumerate() {
        let wait = (s.lambda > 0.0).then(|| m.orbit_queue[i] / s.lambda);
        t.push(vec![
            i.to_string(),
            num(m.orbit[i]),
            num(m.orbit_queue[i]),
            num(m.total[i]),
            opt(wait),
        ]);
    }
    Ok(t)
}

/// Writes every table, or none: files already written are removed when a
/// later one fails.
fn emit(outputs: &[(Sink, &Table)]) -> Result<()> {
    for (k, (sink, table)) in outputs.iter().enumerate() {
        if let Err(e) = sink.write(table) {
            for (earlier, _) in &outputs[..k] {
                if let Sink::File(p) = earlier {
                    let _ = std::fs::remove_file(p);
                }
            }
            return Err(e);
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(c) => {
            let doc = load_document(&c.config)?;
            emit(&[(Sink::new(c.output.as_deref()), &report::validate(&doc.system))])
        }
        Command::Exact { common, order } => {
            let doc = load_document(&common.config)?;
            let table = match order {
                MEAN_ORDER => means_only(&doc.system)?,
                SECOND_MOMENT_ORDER => report::exact(&doc.system)?,
                k => {
                    return Err(CliError::Validation(format!(
                        "moment order K must be {MEAN_ORDER} or {SECOND_MOMENT_ORDER}, got {k}"
                    )))
                }
            };
            emit(&[(Sink::new(common.output.as_deref()), &table)])
        }
        Command::Approx(c) => {
            let doc = load_document(&c.config)?;
            emit(&[(Sink::new(c.output.as_deref()), &report::approx(&doc.system)?)])
        }
        Command::Pcl(c) => {
            let doc = load_document(&c.config)?;
            emit(&[(Sink::new(c.output.as_deref()), &report::pcl(&doc.system)?)])
        }
        Command::Simulate {
            common,
            seed,
            cycles,
            batches,
            warmup,
            replication,
            order,
            batches_out,
        } => {
            let doc = load_document(&common.config)?;
            let seed = resolve_seed(seed, doc.run.seed)?;
            let mut cfg = SimConfig::new(doc.system, seed).with_cycles(
                cycles.or(doc.run.cycles).unwrap_or(SimConfig::DEFAULT_CYCLES),
                batches.or(doc.run.batches).unwrap_or(SimConfig::DEFAULT_BATCHES),
            );
            cfg.warmup_cycles = warmup.or(doc.run.warmup).unwrap_or(SimConfig::DEFAULT_WARMUP);
            cfg.replication = replication;
            cfg.order = order.into();
            let (result, table) = report::simulation(&cfg)?;
            let raw = report::batches(&result);
            let mut outputs = vec![(Sink::new(common.output.as_deref()), &table)];
            if let Some(p) = batches_out.as_deref() {
                outputs.push((Sink::new(Some(p)), &raw));
            }
            emit(&outputs)
        }
        Command::Optimize {
            common,
            budget,
            weights,
        } => {
            let doc = load_document(&common.config)?;
            let system = match weights {
                Some(w) => with_weights(&doc.system, &w)?,
                None => doc.system,
            };
            let budget = budget
                .or(doc.run.budget)
                .unwrap_or_else(|| system.stations().iter().map(|s| s.glue.mean()).sum());
            let problem = OptimizationProblem::new(system, budget)?;
            emit(&[(Sink::new(common.output.as_deref()), &report::optimization(&problem)?)])
        }
        Command::Sweep {
            common,
            from,
            to,
            per_decade,
            threads,
            check,
            tail_tolerance,
        } => {
            let doc = load_document(&common.config)?;
            let grid = sweep::log_grid(from, to, per_decade)?;
            let threads = threads.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            });
            let points = sweep::sweep(&doc.system, &grid, threads)?;
            emit(&[(Sink::new(common.output.as_deref()), &sweep::table(&points, doc.system.len()))])?;
            if !check {
                return Ok(());
            }
            let mut failed = Vec::new();
            for s in sweep::curve_shapes(&points) {
                eprintln!(
                    "station {}: minimum at glue mean {}, last-decade slope {} -> {} (change {:.3e})",
                    s.station, grid[s.argmin], s.slope_start, s.slope_end, s.slope_change
                );
                if !s.interior_minimum || !(s.slope_change < tail_tolerance) {
                    failed.push(s.station);
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!("sweep check failed for stations {failed:?}")))
            }
        }
        Command::Reproduce {
            table,
            fixture,
            cycles,
            seed,
            output,
        } => {
            let fixture = match fixture {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
                    parse_fixture(&text, &p)?
                }
                None => load_builtin(&table)?,
            };
            if fixture.table != table {
                return Err(CliError::Validation(format!(
                    "fixture describes {} but {table} was requested",
                    fixture.table
                )));
            }
            let seed = match seed {
                Some(s) => Some(s),
                None if std::env::var_os(SEED_ENV).is_some() => Some(resolve_seed(None, None)?),
                None => None,
            };
            let rep = reproduce(&fixture, SimOverrides { cycles, seed })?;
            emit(&[(Sink::new(output.as_deref()), &rep.table())])?;
            for (q, d) in rep.max_deviations() {
                eprintln!("{}: max deviation {} for {q:?}", rep.table, d);
            }
            let failures = rep.failures();
            if failures.is_empty() {
                return Ok(());
            }
            for c in &failures {
                eprintln!(
                    "{} row {} {:?} station {}: published {} computed {} (allowed ±{})",
                    rep.table,
                    c.row,
                    c.quantity,
                    c.station.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
                    c.published,
                    c.computed,
                    c.allowed
                );
            }
            Err(CliError::Tolerance(format!(
                "{}: {} of {} cells outside tolerance",
                rep.table,
                failures.len(),
                rep.comparisons.len()
            )))
        }
    }
}

/// Parses, runs and maps the outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
