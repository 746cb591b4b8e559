use glue_polling::exact::{station_means, station_size_stats};
use glue_polling::sim::{simulate, verify_pcl, Estimate, ServiceOrder, SimConfig};
use glue_polling::{DistributionSpec as D, Error, StationParams, SystemConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn table1_row5() -> SystemConfig {
    SystemConfig::new(vec![
        StationParams::new(1.0, 1.0, D::exponential(0.45), D::exponential(1.0), D::deterministic(0.5)),
        StationParams::new(0.5, 1.0, D::exponential(0.2), D::exponential(2.0), D::deterministic(1.0)),
    ])
    .unwrap()
}

fn exp_glue_config() -> SystemConfig {
    let st = |l: f64, b: f64, g: f64| {
        StationParams::new(l, 1.0, D::exponential(b), D::deterministic(1.0), D::exponential(g))
    };
    SystemConfig::new(vec![st(1.0, 0.3, 0.5), st(2.0, 0.15, 2.0), st(0.5, 0.1, 1.0)]).unwrap()
}

fn run(system: SystemConfig, cycles: u64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(system, seed).with_cycles(cycles, 10);
    cfg.warmup_cycles = 1_000;
    cfg
}

/// Two independent estimates agree if their difference lies within the
/// combined half-width.
fn agree(a: &Estimate, b: &Estimate) -> bool {
    (a.mean - b.mean).abs() <= (a.half_width.powi(2) + b.half_width.powi(2)).sqrt()
}

#[test]
fn rejects_bad_batching() {
    let cfg = run(table1_row5(), 1_000, 1);
    assert!(matches!(simulate(&cfg.clone().with_cycles(1_000, 1)), Err(Error::InvalidConfig(_))));
    assert!(matches!(simulate(&cfg.with_cycles(1_001, 10)), Err(Error::InvalidConfig(_))));
}

#[test]
fn gated_and_glue_rules_hold_per_customer() {
    let mut cfg = run(table1_row5(), 2_000, 3);
    cfg.trace_limit = usize::MAX;
    let r = simulate(&cfg).unwrap();
    let trace = r.trace.unwrap();
    assert!(trace.customers.len() > 10_000);
    let mut glued_arrivals = 0;
    for c in &trace.customers {
        assert!(c.service_start >= c.arrival);
        if c.arrived_in_glue {
            glued_arrivals += 1;
            assert_eq!(c.served_visit, c.visit_at_arrival);
        } else {
            assert!(c.served_visit > c.visit_at_arrival);
        }
    }
    assert!(glued_arrivals > 100);
}

#[test]
fn orbit_customers_glue_with_the_exponential_race_probability() {
    let system = SystemConfig::new(vec![
        StationParams::new(0.3, 0.8, D::exponential(0.5), D::exponential(1.0), D::gamma(2.0, 0.7)),
        StationParams::new(0.4, 2.0, D::exponential(0.4), D::exponential(1.0), D::exponential(0.6)),
    ])
    .unwrap();
    let mut cfg = run(system.clone(), 20_000, 5);
    cfg.trace_limit = usize::MAX;
    let trace = simulate(&cfg).unwrap().trace.unwrap();
    for station in 0..2 {
        let nu = system.station(station).nu;
        let mut obs: Vec<_> = trace
            .glue
            .iter()
            .filter(|o| o.station == station && o.orbit_size > 0)
            .collect();
        obs.sort_by(|a, b| a.length.total_cmp(&b.length));
        let bins = 10;
        let per_bin = obs.len() / bins;
        let mut stat = 0.0;
        for chunk in obs.chunks(per_bin).take(bins) {
            let (mut o, mut e, mut v) = (0.0, 0.0, 0.0);
            for x in chunk {
                let p = -(-nu * x.length).exp_m1();
                o += x.glued as f64;
                e += x.orbit_size as f64 * p;
                v += x.orbit_size as f64 * p * (1.0 - p);
            }
            stat += (o - e).powi(2) / v;
        }
        let critical = ChiSquared::new(bins as f64).unwrap().inverse_cdf(0.95);
        assert!(stat < critical, "station {station}: {stat} >= {critical}");
    }
}

#[test]
fn same_seed_same_result() {
    let cfg = run(table1_row5(), 2_000, 11);
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a.batches, b.batches);
    let mut other = cfg.clone();
    other.replication = 1;
    assert_ne!(simulate(&other).unwrap().batches, a.batches);
}

#[test]
fn replications_are_independent_samples() {
    // Two replications of the same system estimate the same mean.
    let cfg = run(table1_row5(), 20_000, 13);
    let mut other = cfg.clone();
    other.replication = 7;
    let (a, b) = (simulate(&cfg).unwrap(), simulate(&other).unwrap());
    assert_ne!(a.batches, b.batches);
    for i in 0..2 {
        assert!(agree(&a.stations[i].size, &b.stations[i].size));
    }
}

#[test]
fn service_sampling_does_not_move_arrivals() {
    let arrivals = |system: SystemConfig| {
        let mut cfg = run(system, 200, 17);
        cfg.warmup_cycles = 0;
        cfg.trace_limit = usize::MAX;
        let trace = simulate(&cfg).unwrap().trace.unwrap();
        let mut t: Vec<(usize, f64)> = trace
            .customers
            .iter()
            .filter(|c| c.arrival < 1_000.0)
            .map(|c| (c.station, c.arrival))
            .collect();
        t.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        t
    };
    let base = table1_row5();
    let slower = base
        .map_stations(|_, s| StationParams {
            service: D::gamma(2.0, s.service.mean() / 2.0),
            ..*s
        })
        .unwrap();
    let a = arrivals(base);
    assert!(a.len() > 500);
    assert_eq!(a, arrivals(slower));
}

#[test]
fn empty_system() {
    let system = table1_row5()
        .map_stations(|_, s| StationParams { lambda: 0.0, ..*s })
        .unwrap();
    let r = simulate(&run(system.clone(), 1_000, 1)).unwrap();
    assert!(r.stations.iter().all(|s| s.served == 0 && s.wait.is_none()));
    assert_eq!(r.workload.mean, 0.0);
    assert!(r.stations.iter().all(|s| s.size.mean == 0.0));
    // Only switchover and glue time remain.
    assert!(agree(&r.mean_cycle, &Estimate { mean: 4.5, half_width: 0.0, lower: 4.5, upper: 4.5 }));
    assert!((system.mean_cycle() - 4.5).abs() < 1e-12);
}

#[test]
fn conservation_law_inside_interval() {
    let system = exp_glue_config();
    let r = simulate(&run(system.clone(), 100_000, 19)).unwrap();
    let check = verify_pcl(&r, &system).unwrap();
    assert!(check.pass, "{check:?}");
    // Negative control: a different retrial rate on the analytic side.
    let wrong = system
        .map_stations(|i, s| StationParams {
            nu: if i == 1 { 5.0 } else { s.nu },
            ..*s
        })
        .unwrap();
    assert!(!verify_pcl(&r, &wrong).unwrap().pass);
}

#[test]
fn little_law_and_cycle_length() {
    let system = table1_row5();
    let r = simulate(&run(system.clone(), 50_000, 23)).unwrap();
    assert!(r.mean_cycle.contains(system.mean_cycle()), "{:?}", r.mean_cycle);
    for (i, st) in r.stations.iter().enumerate() {
        let lambda = system.station(i).lambda;
        let diffs: Vec<f64> = r
            .batches
            .iter()
            .map(|b| b.orbit_queue[i] - lambda * b.mean_wait[i])
            .collect();
        let e = Estimate::from_batches(&diffs, 0.95).unwrap();
        assert!(e.contains(0.0), "station {i}: {e:?}");
        assert!(st.wait.unwrap().lower <= st.wait.unwrap().mean);
    }
}

#[test]
fn service_order_leaves_means_unchanged() {
    let base = run(table1_row5(), 50_000, 29);
    let results: Vec<_> = [ServiceOrder::GlueEpoch, ServiceOrder::ArrivalTime, ServiceOrder::Random]
        .into_iter()
        .map(|order| {
            let mut cfg = base.clone();
            cfg.order = order;
            cfg.replication = order as u32;
            simulate(&cfg).unwrap()
        })
        .collect();
    for r in &results[1..] {
        for i in 0..2 {
            assert!(agree(&results[0].stations[i].wait.unwrap(), &r.stations[i].wait.unwrap()));
        }
    }
}

#[test]
fn matches_exact_first_and_second_moments() {
    let system = exp_glue_config();
    let exact = station_size_stats(&system).unwrap();
    let r = simulate(&run(system.clone(), 200_000, 31)).unwrap();
    // Three stations, two moments each: 99% intervals per comparison.
    for i in 0..3 {
        let m = r.batches.iter().map(|b| b.size[i]).collect::<Vec<_>>();
        let m2 = r.batches.iter().map(|b| b.size_squared[i]).collect::<Vec<_>>();
        let em = Estimate::from_batches(&m, 0.99).unwrap();
        let em2 = Estimate::from_batches(&m2, 0.99).unwrap();
        assert!(em.contains(exact.means.total[i]), "mean {i}: {em:?} vs {}", exact.means.total[i]);
        assert!(em2.contains(exact.second_moment[i][i]), "second {i}: {em2:?} vs {}", exact.second_moment[i][i]);
    }
    let means = station_means(&system).unwrap();
    assert_eq!(means.total, exact.means.total);
}
