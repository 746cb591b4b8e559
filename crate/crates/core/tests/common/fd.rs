//! Finite-difference oracle for the coefficient tensors: central stencils
//! applied to the underlying transforms evaluated at `u(z) = Σ λ_j (1 - z_j)`.
#![allow(dead_code)]

use glue_polling::series::{compositions, CoefficientTensors};
use glue_polling::{DistributionSpec as D, StationParams, SystemConfig};

const H: f64 = 1e-2;

/// Central-difference weights for the k-th derivative at offsets -2..=2.
fn stencil(k: u32) -> [f64; 5] {
    match k {
        0 => [0.0, 0.0, 1.0, 0.0, 0.0],
        1 => [0.0, -0.5, 0.0, 0.5, 0.0],
        2 => [0.0, 1.0, -2.0, 1.0, 0.0],
        3 => [-0.5, 1.0, 0.0, -1.0, 0.5],
        _ => unreachable!(),
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(1/l!) ∂^l f(u(z))` at `z = 1`: tensor-product stencils at steps `H`
/// and `H/2`, combined by one Richardson step.
pub fn scaled_derivative(f: &dyn Fn(f64) -> f64, lambdas: &[f64], l: &[u32]) -> f64 {
    let coarse = stencil_derivative(f, lambdas, l, H);
    let fine = stencil_derivative(f, lambdas, l, H / 2.0);
    (4.0 * fine - coarse) / 3.0
}

fn stencil_derivative(f: &dyn Fn(f64) -> f64, lambdas: &[f64], l: &[u32], h: f64) -> f64 {
    let n = l.len();
    let mut offsets = vec![-2i32; n];
    let mut total = 0.0;
    'outer: loop {
        let weight: f64 = offsets
            .iter()
            .zip(l)
            .map(|(&o, &k)| stencil(k)[(o + 2) as usize])
            .product();
        if weight != 0.0 {
            let u: f64 = offsets
                .iter()
                .zip(lambdas)
                .map(|(&o, lam)| -lam * f64::from(o) * h)
                .sum();
            total += weight * f(u);
        }
        for o in offsets.iter_mut() {
            *o += 1;
            if *o <= 2 {
                continue 'outer;
            }
            *o = -2;
        }
        break;
    }
    let order: i32 = l.iter().map(|&k| k as i32).sum();
    let lf: f64 = l.iter().map(|&k| factorial(k)).product();
    total / h.powi(order) / lf
}

/// `E[e^{-uX}] - 1` without cancellation near `u = 0`.
pub fn lst_minus_one(d: &D, u: f64) -> f64 {
    match *d {
        D::Deterministic { value } => (-u * value).exp_m1(),
        D::Exponential { mean } => -mean * u / (1.0 + mean * u),
        D::Gamma { shape, scale } => (-shape * (scale * u).ln_1p()).exp_m1(),
    }
}

pub fn configs() -> Vec<SystemConfig> {
    let lambdas = [0.7, 0.45, 0.3];
    let services = [D::exponential(0.3), D::gamma(2.0, 0.2), D::deterministic(0.4)];
    let switchovers = [D::deterministic(1.0), D::exponential(0.8), D::gamma(3.0, 0.5)];
    (1..=3)
        .map(|n| {
            let stations = (0..n)
                .map(|i| {
                    StationParams::new(
                        lambdas[i],
                        1.0,
                        services[i],
                        switchovers[(i + n - 1) % 3],
                        D::exponential(0.5),
                    )
                })
                .collect();
            SystemConfig::new(stations).unwrap()
        })
        .collect()
}

/// Relative 1e-4, or absolute 1e-6 for entries near zero.
pub fn within(exact: f64, fd: f64) -> bool {
    let err = (exact - fd).abs();
    err <= 1e-4 * exact.abs() || err <= 1e-6
}

/// One tensor entry next to its finite-difference value.
pub struct Comparison {
    pub name: &'static str,
    pub station: usize,
    pub l: Vec<u32>,
    pub m: usize,
    pub tensor: f64,
    pub oracle: f64,
}

/// Every gamma, delta, eta and zeta entry with `|l| + m <= 3`.
pub fn compare_tensors(cfg: &SystemConfig) -> Vec<Comparison> {
    let n = cfg.len();
    let lambdas = cfg.lambdas();
    let tensors = CoefficientTensors::new(cfg, 3).unwrap();
    let mut out = Vec::new();
    for i in 0..n {
        let st = *cfg.station(i);
        let (b, s) = (st.service, st.switchover);
        let (eb, es) = (b.mean(), s.mean());
        for order in 0..=3usize {
            for l in compositions(n, order) {
                let mut push = |name, m, tensor, oracle| {
                    out.push(Comparison { name, station: i, l: l.clone(), m, tensor, oracle })
                };
                for m in 0..=(3 - order) {
                    let mi = m as i32;
                    let gamma = |u: f64| lst_minus_one(&b, u).powi(mi) * (1.0 + lst_minus_one(&s, u));
                    push("gamma", m, tensors.gamma(i, m, &l), scaled_derivative(&gamma, &lambdas, &l));
                    let delta = |u: f64| lst_minus_one(&b, u).powi(mi);
                    push("delta", m, tensors.delta(i, m, &l), scaled_derivative(&delta, &lambdas, &l));
                    let eta = |u: f64| {
                        if u.abs() < 1e-9 {
                            if mi == 0 { eb } else { 0.0 }
                        } else {
                            -lst_minus_one(&b, u).powi(mi + 1) / u
                        }
                    };
                    push("eta", m, tensors.eta(i, m, &l), scaled_derivative(&eta, &lambdas, &l));
                }
                let zeta = |u: f64| if u.abs() < 1e-9 { es } else { -lst_minus_one(&s, u) / u };
                push("zeta", 0, tensors.zeta(i, &l), scaled_derivative(&zeta, &lambdas, &l));
            }
        }
    }
    out
}
