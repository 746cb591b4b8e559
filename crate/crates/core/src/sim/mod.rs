//! Discrete-event simulation of the polling system with batch-means output.
//!
//! The run is a sequence of segments with a fixed server activity: the glue
//! period of a station, one service, or one switchover. Arrivals of every
//! station are generated segment by segment; a type-`i` arrival sticks if it
//! falls in a glue period of station `i` and joins the orbit of `i`
//! otherwise. Orbit customers only matter at the start of a glue period: each
//! one glues iff its exponential retrial clock rings before the glue period
//! ends, at the ringing time.
//!
//! Station sizes and the workload are piecewise linear between events and
//! are integrated exactly. Batches are consecutive groups of cycles, a cycle
//! starting with the glue period of the first station.

mod rng;
mod stats;

pub use rng::{rng_streams, stream, stream_id, Purpose, RngStreams};
pub use stats::{t_quantile, Estimate};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::pcl;

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.95;

/// Order in which the glued customers are served during a visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServiceOrder {
    /// By the moment each customer glued: the retrial epoch for orbit
    /// customers, the arrival epoch for arrivals during the glue period.
    #[default]
    GlueEpoch,
    /// By original arrival time.
    ArrivalTime,
    /// Uniformly random.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub system: SystemConfig,
    /// Cycles after warmup; must be a multiple of `batches`.
    pub total_cycles: u64,
    pub batches: u32,
    pub warmup_cycles: u64,
    pub seed: u64,
    pub replication: u32,
    pub order: ServiceOrder,
    /// Record up to this many served customers and glue periods.
    pub trace_limit: usize,
}

impl SimConfig {
    pub const DEFAULT_CYCLES: u64 = 1_000_000;
    pub const DEFAULT_BATCHES: u32 = 10;
    pub const DEFAULT_WARMUP: u64 = 10_000;

    pub fn new(system: SystemConfig, seed: u64) -> Self {
        Self {
            system,
            total_cycles: Self::DEFAULT_CYCLES,
            batches: Self::DEFAULT_BATCHES,
            warmup_cycles: Self::DEFAULT_WARMUP,
            seed,
            replication: 0,
            order: ServiceOrder::default(),
            trace_limit: 0,
        }
    }

    pub fn with_cycles(mut self, total_cycles: u64, batches: u32) -> Self {
        self.total_cycles = total_cycles;
        self.batches = batches;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches < 2 {
            return Err(Error::InvalidConfig(format!(
                "at least 2 batches are needed, got {}",
                self.batches
            )));
        }
        if self.total_cycles == 0 || !self.total_cycles.is_multiple_of(u64::from(self.batches)) {
            return Err(Error::InvalidConfig(format!(
                "{} cycles cannot be split into {} equal batches",
                self.total_cycles, self.batches
            )));
        }
        Ok(())
    }

    fn cycles_per_batch(&self) -> u64 {
        self.total_cycles / u64::from(self.batches)
    }
}

/// Raw means of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeans {
    /// Mean wait of customers whose service started in the batch (NaN if
    /// none did).
    pub mean_wait: Vec<f64>,
    pub served: Vec<u64>,
    /// Time-average `M_i`.
    pub size: Vec<f64>,
    /// Time-average `M_i^2`.
    pub size_squared: Vec<f64>,
    /// Time-average of `M_i` minus the customer in service.
    pub orbit_queue: Vec<f64>,
    /// `Σ ρ_i W_i` over stations with `ρ_i > 0`.
    pub weighted_wait: f64,
    pub workload: f64,
    pub cycle_length: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationEstimates {
    /// `None` when some batch served nobody at this station.
    pub wait: Option<Estimate>,
    pub size: Estimate,
    pub size_squared: Estimate,
    pub orbit_queue: Estimate,
    pub served: u64,
}

/// A served customer, recorded when tracing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerRecord {
    pub station: usize,
    pub arrival: f64,
    pub service_start: f64,
    pub service_time: f64,
    /// Arrived during a glue period of its own station.
    pub arrived_in_glue: bool,
    /// Number of glue periods of its station started before the arrival.
    pub visit_at_arrival: u64,
    /// Index of the visit that served it.
    pub served_visit: u64,
}

/// Outcome of one glue period for the customers already in orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueObservation {
    pub station: usize,
    pub length: f64,
    pub orbit_size: usize,
    pub glued: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub customers: Vec<CustomerRecord>,
    pub glue: Vec<GlueObservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub stations: Vec<StationEstimates>,
    /// `Σ ρ_i E[W_i]`.
    pub weighted_wait: Option<Estimate>,
    /// Time-average total workload.
    pub workload: Estimate,
    pub mean_cycle: Estimate,
    /// Cycles simulated after warmup.
    pub cycles: u64,
    pub batches: Vec<BatchMeans>,
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone, Copy)]
enum Sampler {
    Fixed(f64),
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
}

impl Sampler {
    fn new(d: &DistributionSpec) -> Self {
        match *d {
            DistributionSpec::Deterministic { value } => Sampler::Fixed(value),
            DistributionSpec::Exponential { mean } => {
                Sampler::Exp(Exp::new(1.0 / mean).expect("validated mean"))
            }
            DistributionSpec::Gamma { shape, scale } => {
                Sampler::Gamma(Gamma::new(shape, scale).expect("validated gamma"))
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Fixed(v) => *v,
            Sampler::Exp(e) => e.sample(rng),
            Sampler::Gamma(g) => g.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Customer {
    arrival: f64,
    service: f64,
    visit_at_arrival: u64,
    arrived_in_glue: bool,
}

#[derive(Debug, Clone, Copy)]
struct Glued {
    epoch: f64,
    customer: Customer,
}

#[derive(Debug, Clone, Copy, Default)]
struct SizeTrack {
    count: u64,
    last: f64,
    area: f64,
    area_squared: f64,
}

impl SizeTrack {
    fn advance(&mut self, t: f64) {
        let dt = t - self.last;
        let m = self.count as f64;
        self.area += m * dt;
        self.area_squared += m * m * dt;
        self.last = t;
    }
}

#[derive(Debug, Clone, Default)]
struct BatchAccumulator {
    start: f64,
    wait_sum: Vec<f64>,
    served: Vec<u64>,
    busy: Vec<f64>,
    workload_area: f64,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    n: usize,
    arrival: Vec<Option<Exp<f64>>>,
    service: Vec<Sampler>,
    switchover: Vec<Sampler>,
    glue: Vec<Sampler>,
    retrial: Vec<Exp<f64>>,
    rng: RngStreams,
    now: f64,
    next_arrival: Vec<f64>,
    orbit: Vec<Vec<Customer>>,
    queue: Vec<Glued>,
    sizes: Vec<SizeTrack>,
    workload: f64,
    visits: Vec<u64>,
    collecting: bool,
    acc: BatchAccumulator,
    trace: Option<Trace>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        let stations = cfg.system.stations();
        let n = stations.len();
        let mut rng = rng_streams(cfg.seed, cfg.replication, n);
        let arrival: Vec<Option<Exp<f64>>> = stations
            .iter()
            .map(|s| (s.lambda > 0.0).then(|| Exp::new(s.lambda).expect("positive rate")))
            .collect();
        let next_arrival = arrival
            .iter()
            .zip(rng.arrivals.iter_mut())
            .map(|(a, r)| a.map_or(f64::INFINITY, |e| e.sample(r)))
            .collect();
        Self {
            cfg,
            n,
            arrival,
            service: stations.iter().map(|s| Sampler::new(&s.service)).collect(),
            switchover: stations.iter().map(|s| Sampler::new(&s.switchover)).collect(),
            glue: stations.iter().map(|s| Sampler::new(&s.glue)).collect(),
            retrial: stations
                .iter()
                .map(|s| Exp::new(s.nu).expect("positive retrial rate"))
                .collect(),
            rng,
            now: 0.0,
            next_arrival,
            orbit: vec![Vec::new(); n],
            queue: Vec::new(),
            sizes: vec![SizeTrack::default(); n],
            workload: 0.0,
            visits: vec![0; n],
            collecting: false,
            acc: BatchAccumulator::default(),
            trace: (cfg.trace_limit > 0).then(Trace::default),
        }
    }

    fn reset_batch(&mut self) {
        for s in &mut self.sizes {
            s.advance(self.now);
            s.area = 0.0;
            s.area_squared = 0.0;
        }
        self.acc = BatchAccumulator {
            start: self.now,
            wait_sum: vec![0.0; self.n],
            served: vec![0; self.n],
            busy: vec![0.0; self.n],
            workload_area: 0.0,
        };
    }

    fn close_batch(&mut self, cycles: u64) -> BatchMeans {
        for s in &mut self.sizes {
            s.advance(self.now);
        }
        let duration = self.now - self.acc.start;
        let mean_wait: Vec<f64> = (0..self.n)
            .map(|i| {
                if self.acc.served[i] > 0 {
                    self.acc.wait_sum[i] / self.acc.served[i] as f64
                } else {
                    f64::NAN
                }
            })
            .collect();
        let weighted_wait = self
            .cfg
            .system
            .stations()
            .iter()
            .zip(&mean_wait)
            .filter(|(s, _)| s.rho() > 0.0)
            .map(|(s, w)| s.rho() * w)
            .sum();
        BatchMeans {
            served: self.acc.served.clone(),
            size: self.sizes.iter().map(|s| s.area / duration).collect(),
            size_squared: self.sizes.iter().map(|s| s.area_squared / duration).collect(),
            orbit_queue: self
                .sizes
                .iter()
                .zip(&self.acc.busy)
                .map(|(s, b)| (s.area - b) / duration)
                .collect(),
            mean_wait,
            weighted_wait,
            workload: self.acc.workload_area / duration,
            cycle_length: duration / cycles as f64,
            duration,
        }
    }

    /// Advances through `[now, end)`: generates arrivals, integrates the
    /// workload, and routes type-`gluing` arrivals to the glue queue.
    fn segment(&mut self, end: f64, gluing: Option<usize>, serving: bool) {
        let start = self.now;
        let dt = end - start;
        let mut area = self.workload * dt;
        if serving {
            area -= 0.5 * dt * dt;
        }
        for j in 0..self.n {
            let Some(exp) = self.arrival[j] else { continue };
            while self.next_arrival[j] < end {
                let t = self.next_arrival[j];
                let service = self.service[j].sample(&mut self.rng.services[j]);
                self.sizes[j].advance(t);
                self.sizes[j].count += 1;
                area += service * (end - t);
                self.workload += service;
                let in_glue = gluing == Some(j);
                let customer = Customer {
                    arrival: t,
                    service,
                    visit_at_arrival: self.visits[j],
                    arrived_in_glue: in_glue,
                };
                if in_glue {
                    self.queue.push(Glued { epoch: t, customer });
                } else {
                    self.orbit[j].push(customer);
                }
                self.next_arrival[j] = t + exp.sample(&mut self.rng.arrivals[j]);
            }
        }
        if serving {
            self.workload = (self.workload - dt).max(0.0);
        }
        if self.collecting {
            self.acc.workload_area += area;
        }
        self.now = end;
    }

    fn glue_period(&mut self, i: usize) {
        self.visits[i] += 1;
        let length = self.glue[i].sample(&mut self.rng.glue[i]);
        let start = self.now;
        self.queue.clear();
        let orbit_size = self.orbit[i].len();
        let retrial = self.retrial[i];
        let rng = &mut self.rng.retrial[i];
        let queue = &mut self.queue;
        self.orbit[i].retain(|c| {
            let ring = retrial.sample(rng);
            if ring < length {
                queue.push(Glued {
                    epoch: start + ring,
                    customer: *c,
                });
                false
            } else {
                true
            }
        });
        let glued = self.queue.len();
        if self.collecting {
            if let Some(trace) = &mut self.trace {
                if trace.glue.len() < self.cfg.trace_limit {
                    trace.glue.push(GlueObservation {
                        station: i,
                        length,
                        orbit_size,
                        glued,
                    });
                }
            }
        }
        self.segment(start + length, Some(i), false);
    }

    fn visit(&mut self, i: usize) {
        let mut queue = std::mem::take(&mut self.queue);
        match self.cfg.order {
            ServiceOrder::GlueEpoch => queue.sort_unstable_by(|a, b| a.epoch.total_cmp(&b.epoch)),
            ServiceOrder::ArrivalTime => {
                queue.sort_unstable_by(|a, b| a.customer.arrival.total_cmp(&b.customer.arrival))
            }
            ServiceOrder::Random => queue.shuffle(&mut self.rng.order[i]),
        }
        for g in queue.drain(..) {
            let c = g.customer;
            let start = self.now;
            if self.collecting {
                self.acc.wait_sum[i] += start - c.arrival;
                self.acc.served[i] += 1;
                self.acc.busy[i] += c.service;
                if let Some(trace) = &mut self.trace {
                    if trace.customers.len() < self.cfg.trace_limit {
                        trace.customers.push(CustomerRecord {
                            station: i,
                            arrival: c.arrival,
                            service_start: start,
                            service_time: c.service,
                            arrived_in_glue: c.arrived_in_glue,
                            visit_at_arrival: c.visit_at_arrival,
                            served_visit: self.visits[i],
                        });
                    }
                }
            }
            self.segment(start + c.service, None, true);
            self.sizes[i].advance(self.now);
            self.sizes[i].count -= 1;
        }
        self.queue = queue;
    }

    fn cycle(&mut self) {
        for i in 0..self.n {
            self.glue_period(i);
            self.visit(i);
            let s = self.switchover[i].sample(&mut self.rng.switchover[i]);
            self.segment(self.now + s, None, false);
        }
    }
}

/// Runs one replication.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg);
    for _ in 0..cfg.warmup_cycles {
        engine.cycle();
    }
    engine.collecting = true;
    let per_batch = cfg.cycles_per_batch();
    let mut batches = Vec::with_capacity(cfg.batches as usize);
    for _ in 0..cfg.batches {
        engine.reset_batch();
        for _ in 0..per_batch {
            engine.cycle();
        }
        batches.push(engine.close_batch(per_batch));
    }
    Ok(summarize(cfg, batches, engine.trace))
}

fn column(batches: &[BatchMeans], f: impl Fn(&BatchMeans) -> f64) -> Vec<f64> {
    batches.iter().map(f).collect()
}

fn estimate(values: &[f64]) -> Estimate {
    Estimate::from_batches(values, CONFIDENCE).expect("finite batch means")
}

fn summarize(cfg: &SimConfig, batches: Vec<BatchMeans>, trace: Option<Trace>) -> SimResult {
    let n = cfg.system.len();
    let stations = (0..n)
        .map(|i| StationEstimates {
            wait: Estimate::from_batches(&column(&batches, |b| b.mean_wait[i]), CONFIDENCE),
            size: estimate(&column(&batches, |b| b.size[i])),
            size_squared: estimate(&column(&batches, |b| b.size_squared[i])),
            orbit_queue: estimate(&column(&batches, |b| b.orbit_queue[i])),
            served: batches.iter().map(|b| b.served[i]).sum(),
        })
        .collect();
    SimResult {
        stations,
        weighted_wait: Estimate::from_batches(&column(&batches, |b| b.weighted_wait), CONFIDENCE),
        workload: estimate(&column(&batches, |b| b.workload)),
        mean_cycle: estimate(&column(&batches, |b| b.cycle_length)),
        cycles: cfg.total_cycles,
        batches,
        trace,
    }
}

/// Comparison of the conservation law with a simulated weighted wait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PclCheck {
    pub rhs: f64,
    pub estimate: Option<Estimate>,
    pub pass: bool,
}

/// Passes iff the law's right-hand side for `cfg` lies inside the simulated
/// confidence interval of `Σ ρ_i E[W_i]`.
pub fn verify_pcl(result: &SimResult, cfg: &SystemConfig) -> Result<PclCheck> {
    let rhs = pcl::pcl_rhs(cfg)?.weighted_wait;
    let estimate = result.weighted_wait;
    Ok(PclCheck {
        rhs,
        estimate,
        pass: estimate.is_some_and(|e| e.contains(rhs)),
    })
}

/// Runs `replications` independent replications on scoped threads; results
/// come back in replication order.
pub fn simulate_replications(cfg: &SimConfig, replications: u32) -> Result<Vec<SimResult>> {
    cfg.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..replications)
            .map(|r| {
                let mut c = cfg.clone();
                c.replication = cfg.replication + r;
                scope.spawn(move || simulate(&c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}
