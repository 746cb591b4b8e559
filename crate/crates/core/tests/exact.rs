use glue_polling::exact::{
    exact_mean_waiting, phi_first_moments, phi_table, psi_moments, station_means,
    station_size_stats, IterationControl, OrderSystem, MEAN_ORDER,
};
use glue_polling::pcl::{pcl_rhs, weighted_sum};
use glue_polling::series::{CoefficientTensors, MultiIndex};
use glue_polling::{DistributionSpec as D, Error, StationParams, SystemConfig};
use proptest::prelude::*;

fn table2(row: usize) -> SystemConfig {
    let rows = [
        (1.0, 0.3, 0.5, 1.0, 0.3, 0.5),
        (1.0, 0.3, 0.5, 0.5, 0.3, 0.5),
        (1.0, 0.3, 0.5, 0.5, 0.1, 0.5),
        (2.0, 0.3, 0.5, 0.5, 0.1, 0.5),
        (2.0, 0.15, 0.5, 0.5, 0.1, 0.5),
        (2.0, 0.15, 2.0, 0.5, 0.1, 0.5),
        (2.0, 0.15, 2.0, 0.5, 0.1, 1.0),
    ];
    let (l2, b2, g2, l3, b3, g3) = rows[row];
    let st = |l: f64, b: f64, g: f64| {
        StationParams::new(l, 1.0, D::exponential(b), D::deterministic(1.0), D::exponential(g))
    };
    SystemConfig::new(vec![st(1.0, 0.3, 0.5), st(l2, b2, g2), st(l3, b3, g3)]).unwrap()
}

#[test]
fn table2_exact_column() {
    let expected = [
        [121.0, 121.0, 121.0],
        [47.59, 47.58, 46.74],
        [33.65, 33.64, 32.54],
        [33.52, 33.51, 32.42],
        [44.88, 19.71, 43.64],
        [48.66, 21.42, 28.75],
    ];
    for (row, exp) in [0, 1, 2, 4, 5, 6].into_iter().zip(expected) {
        let w = exact_mean_waiting(&table2(row)).unwrap();
        for (got, want) in w.iter().zip(exp) {
            assert!((got - want).abs() <= 0.005 * want, "row {row}: {got} vs {want}");
        }
    }
}

#[test]
fn heavy_load_row_obeys_conservation_law() {
    // Station 1 and 3 agree with the published exact values; the law
    // pins the weighted sum and so station 2.
    let cfg = table2(3);
    let w = exact_mean_waiting(&cfg).unwrap();
    assert!((w[0] - 246.8).abs() <= 0.005 * 246.8);
    assert!((w[2] - 242.3).abs() <= 0.005 * 242.3);
    let rhs = pcl_rhs(&cfg).unwrap().weighted_wait;
    let rest = rhs - 0.3 * w[0] - 0.05 * w[2];
    assert!((rest / 0.6 - w[1]).abs() < 1e-6 * w[1]);
}

#[test]
fn conservation_law_on_all_rows() {
    for row in 0..7 {
        let cfg = table2(row);
        let w = exact_mean_waiting(&cfg).unwrap();
        let rhs = pcl_rhs(&cfg).unwrap().weighted_wait;
        assert!((weighted_sum(&cfg, &w) - rhs).abs() <= 1e-8 * rhs, "row {row}");
    }
}

#[test]
fn closed_form_first_order_matches_iteration() {
    for row in [1, 3, 6] {
        let cfg = table2(row);
        let closed = phi_first_moments(&cfg).unwrap();
        let tensors = CoefficientTensors::new(&cfg, 1).unwrap();
        let system = OrderSystem::build(&cfg, &tensors, &closed, 1).unwrap();
        let control = IterationControl {
            tolerance: 1e-15,
            ..Default::default()
        };
        let solved = system.solve(control).unwrap();
        for ((i, idx), v) in system.unknowns.iter().zip(&solved.values) {
            let c = closed.get(*i, &idx.l, idx.m).unwrap();
            assert!((c - v).abs() <= 1e-10 * c.abs().max(1.0), "{i} {idx:?}: {c} vs {v}");
        }
    }
}

#[test]
fn iterates_are_monotone_and_converge() {
    for row in [0, 3, 5] {
        let cfg = table2(row);
        for k in 2..=3 {
            let lower = phi_table(&cfg, k - 1).unwrap();
            let tensors = CoefficientTensors::new(&cfg, k).unwrap();
            let system = OrderSystem::build(&cfg, &tensors, &lower, k).unwrap();
            assert!(system.constant.iter().all(|&c| c >= 0.0));
            assert!(system.coupling.iter().flatten().all(|&(_, a)| a >= 0.0));
            let mut x = vec![0.0; system.constant.len()];
            let mut steps = 0;
            loop {
                let next = system.step(&x);
                assert!(next.iter().zip(&x).all(|(a, b)| a >= b), "row {row} order {k}");
                let residual = next
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                    .fold(0.0, f64::max);
                x = next;
                steps += 1;
                if residual < 1e-12 {
                    break;
                }
                assert!(steps < 1_000_000);
            }
            let table = phi_table(&cfg, k).unwrap();
            let report = table.reports().last().unwrap();
            assert!(report.residual < 1e-12);
            assert_eq!(report.iterations, steps);
        }
    }
}

#[test]
fn glue_scaled_moment_balances_arrivals() {
    for row in 0..7 {
        let cfg = table2(row);
        let phi = phi_table(&cfg, MEAN_ORDER).unwrap();
        let ec = cfg.mean_cycle();
        for (i, s) in cfg.stations().iter().enumerate() {
            let gamma = 1.0 / s.glue.mean();
            let v = gamma * phi.get(i, &[0, 0, 0], 1).unwrap();
            assert!((v - s.lambda * ec).abs() <= 1e-9 * v);
        }
    }
}

#[test]
fn mean_sizes_decompose() {
    let cfg = table2(5);
    let m = station_means(&cfg).unwrap();
    for i in 0..3 {
        assert!(m.orbit[i] > 0.0);
        assert!(m.orbit_queue[i] > m.orbit[i]);
        assert!((m.total[i] - m.orbit_queue[i] - cfg.station(i).rho()).abs() < 1e-12);
    }
}

#[test]
fn symmetric_system_is_symmetric() {
    let s = station_size_stats(&table2(0)).unwrap();
    for i in 1..3 {
        assert!((s.means.total[i] - s.means.total[0]).abs() < 1e-9);
        assert!((s.variance[i] - s.variance[0]).abs() < 1e-6);
    }
    assert!((s.correlation[0][1] - s.correlation[1][2]).abs() < 1e-9);
    assert!(s.variance.iter().all(|&v| v > 0.0));
    assert!(s.correlation.iter().flatten().all(|c| c.abs() <= 1.0));
}

#[test]
fn second_moments_exceed_squared_means() {
    let s = station_size_stats(&table2(6)).unwrap();
    for i in 0..3 {
        let m = s.means.total[i];
        assert!(s.second_moment[i][i] >= m * m);
        assert!((s.scv[i] - s.variance[i] / (m * m)).abs() < 1e-12);
        assert_eq!(s.mean_wait[i], Some(s.means.orbit_queue[i] / cfg_lambda(i)));
    }
}

fn cfg_lambda(i: usize) -> f64 {
    table2(6).station(i).lambda
}

#[test]
fn single_station_is_fixed_by_the_law() {
    let st = StationParams::new(0.5, 2.0, D::gamma(2.0, 0.5), D::exponential(1.5), D::exponential(0.7));
    let cfg = SystemConfig::new(vec![st]).unwrap();
    let w = exact_mean_waiting(&cfg).unwrap()[0];
    let rhs = pcl_rhs(&cfg).unwrap().weighted_wait;
    assert!((0.5 * w - rhs).abs() < 1e-9 * rhs);
}

#[test]
fn idle_station_is_supported() {
    let cfg = table2(1)
        .map_stations(|i, s| StationParams {
            lambda: if i == 2 { 0.0 } else { s.lambda },
            ..s.clone()
        })
        .unwrap();
    let m = station_means(&cfg).unwrap();
    assert!(m.total[2].abs() < 1e-12);
    assert!(matches!(exact_mean_waiting(&cfg), Err(Error::ZeroArrivalRate { station: 2 })));
    let stats = station_size_stats(&cfg).unwrap();
    assert_eq!(stats.mean_wait[2], None);
    let phi = phi_table(&cfg, 3).unwrap();
    let psi = psi_moments(&cfg, &phi).unwrap();
    assert!(matches!(psi.visit(2, &[0, 0, 0], 0), Err(Error::ZeroUtilization { station: 2 })));
}

#[test]
fn rejects_non_exponential_glue() {
    let cfg = table2(0)
        .map_stations(|i, s| StationParams {
            glue: if i == 1 { D::deterministic(0.5) } else { s.glue.clone() },
            ..s.clone()
        })
        .unwrap();
    assert!(matches!(
        exact_mean_waiting(&cfg),
        Err(Error::NonExponentialGlue { station: 1 })
    ));
}

#[test]
fn order_too_low_is_reported() {
    let cfg = table2(0);
    let phi = phi_table(&cfg, 2).unwrap();
    assert!(matches!(phi.get(0, &[1, 1, 0], 1), Err(Error::PhiOrder { needed: 3, available: 2 })));
    assert_eq!(MultiIndex::new(vec![1, 1, 0], 1).order(), 3);
}

fn arb_config() -> impl Strategy<Value = SystemConfig> {
    (1usize..=3)
        .prop_flat_map(|n| {
            prop::collection::vec(
                (0.05f64..1.0, 0.2f64..3.0, 0.05f64..0.5, 0.1f64..2.0, 0.1f64..2.0, 0usize..3),
                n,
            )
        })
        .prop_filter_map("stable", |rows| {
            let stations: Vec<_> = rows
                .into_iter()
                .map(|(lambda, nu, b, s, g, kind)| {
                    let service = match kind {
                        0 => D::exponential(b),
                        1 => D::deterministic(b),
                        _ => D::gamma(2.0, b / 2.0),
                    };
                    StationParams::new(lambda, nu, service, D::exponential(s), D::exponential(g))
                })
                .collect();
            let cfg = SystemConfig::new(stations).ok()?;
            (cfg.rho() < 0.85).then_some(cfg)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_means_obey_conservation_law(cfg in arb_config()) {
        let w = exact_mean_waiting(&cfg).unwrap();
        let rhs = pcl_rhs(&cfg).unwrap().weighted_wait;
        prop_assert!((weighted_sum(&cfg, &w) - rhs).abs() <= 1e-8 * rhs);
    }

    #[test]
    fn variances_are_positive(cfg in arb_config()) {
        let s = station_size_stats(&cfg).unwrap();
        for i in 0..cfg.len() {
            prop_assert!(s.variance[i] > 0.0);
            prop_assert!(s.correlation[i].iter().all(|c| c.abs() <= 1.0 + 1e-9));
        }
    }
}
