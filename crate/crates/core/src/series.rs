//! Taylor coefficients of generating functions at `z = 1`.
//!
//! Every generating function the moment engine differentiates is a function
//! of `z` only through `u(z) = Σ λ_j (1 - z_j)`: the service and switchover
//! transforms `β_i(z) = B_i~(u)`, `σ_i(z) = S_i~(u)` and their products,
//! powers and quotients by `u`. So all multivariate derivatives reduce to a
//! univariate truncated power series `F(u) = Σ a_n u^n` plus one mapping
//! lemma ([`multi_coeff`]):
//!
//! ```text
//! (1/l!) ∂^l F(u(z)) |_{z=1} = (-1)^{|l|} (|l|! / l!) Π λ_j^{l_j} a_{|l|}
//! ```

use std::ops::{Add, Mul, Neg, Sub};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::model::SystemConfig;

/// Default truncation order for the coefficient tensors.
pub const DEFAULT_ORDER: usize = 4;

/// Constant terms below this (relative to the largest coefficient) are
/// treated as exact zeros when dividing by `u`.
const DIVISION_SLACK: f64 = 1e-12;

/// Truncated power series `Σ_{n<=K} a_n u^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct USeries {
    coeffs: Vec<f64>,
}

impl USeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a constant term");
        Self { coeffs }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// The transform of `d` as a series in `u`: `a_n = (-1)^n E[X^n] / n!`.
    pub fn from_lst(d: &DistributionSpec, order: usize) -> Result<Self> {
        Ok(Self::new(d.lst_taylor(order)?))
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `u^n`; panics above the truncation order.
    pub fn coeff(&self, n: usize) -> f64 {
        assert!(
            n <= self.order(),
            "coefficient {n} requested from a series truncated at {}",
            self.order()
        );
        self.coeffs[n]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn powi(&self, m: usize) -> Self {
        let mut out = Self::constant(1.0, self.order());
        for _ in 0..m {
            out = &out * self;
        }
        out
    }

    /// `F(u) / u`, defined when `F(0) = 0`. The truncation order drops by one.
    pub fn div_u(&self) -> Result<Self> {
        let scale = self.coeffs.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        let residual = self.coeffs[0];
        if residual.abs() > DIVISION_SLACK * scale {
            return Err(Error::SeriesDivision { residual });
        }
        if self.coeffs.len() == 1 {
            return Ok(Self::constant(0.0, 0));
        }
        Ok(Self::new(self.coeffs[1..].to_vec()))
    }
}

impl Add for &USeries {
    type Output = USeries;
    fn add(self, rhs: &USeries) -> USeries {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        USeries::new((0..n).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect())
    }
}

impl Sub for &USeries {
    type Output = USeries;
    fn sub(self, rhs: &USeries) -> USeries {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        USeries::new((0..n).map(|i| self.coeffs[i] - rhs.coeffs[i]).collect())
    }
}

impl Neg for &USeries {
    type Output = USeries;
    fn neg(self) -> USeries {
        self.scale(-1.0)
    }
}

impl Mul for &USeries {
    type Output = USeries;
    /// Cauchy product truncated to the smaller order.
    fn mul(self, rhs: &USeries) -> USeries {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum())
            .collect();
        USeries::new(coeffs)
    }
}

/// `|l|`.
pub fn total(l: &[u32]) -> usize {
    l.iter().map(|&x| x as usize).sum()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `l! = Π l_j!`.
pub fn multi_factorial(l: &[u32]) -> f64 {
    l.iter().map(|&x| factorial(x)).product()
}

/// The unit vector `1_j` of length `n`.
pub fn unit(n: usize, j: usize) -> Vec<u32> {
    let mut l = vec![0; n];
    l[j] = 1;
    l
}

/// Multi-index `(l, m)` over `N` arrival-count variables and one glue-queue
/// variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    pub l: Vec<u32>,
    pub m: u32,
}

impl MultiIndex {
    pub fn new(l: Vec<u32>, m: u32) -> Self {
        Self { l, m }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0; n], 0)
    }

    pub fn order(&self) -> usize {
        total(&self.l) + self.m as usize
    }

    /// All `(l, m)` over `n` stations with `|l| + m = order`.
    pub fn all_of_order(n: usize, order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for m in 0..=order {
            for l in compositions(n, order - m) {
                out.push(MultiIndex::new(l, m as u32));
            }
        }
        out
    }
}

/// Every `l` of length `n` with `|l| = total`.
pub fn compositions(n: usize, total: usize) -> Vec<Vec<u32>> {
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![0; n];
    rec(0, total as u32, &mut cur, &mut out);
    out
}

/// Every `l'` with `l' <= l` componentwise, including `0` and `l`.
pub fn sub_indices(l: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(l.len())];
    for &lj in l {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=lj).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Maps the univariate coefficient `a = a_{|l|}` of `F` to the scaled
/// multivariate derivative `(1/l!) ∂^l F(u(z))` at `z = 1`.
pub fn multi_coeff(a: f64, l: &[u32], lambdas: &[f64]) -> f64 {
    let n = total(l) as u32;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let rates: f64 = l
        .iter()
        .zip(lambdas)
        .map(|(&lj, &lam)| lam.powi(lj as i32))
        .product();
    sign * factorial(n) / multi_factorial(l) * rates * a
}

/// Univariate series behind the coefficient tensors of one station.
#[derive(Debug, Clone)]
struct StationSeries {
    /// `(β - 1)^m σ` for `m = 0..=K`.
    gamma: Vec<USeries>,
    /// `-(β - 1)^{m+1} / u` for `m = 0..=K`.
    eta: Vec<USeries>,
    /// `(1 - σ) / u`.
    zeta: USeries,
    /// `(β - 1)^m` for `m = 0..=K`.
    delta: Vec<USeries>,
    /// `σ` alone.
    sigma: USeries,
}

impl StationSeries {
    fn new(service: &DistributionSpec, switchover: &DistributionSpec, order: usize) -> Result<Self> {
        let beta = USeries::from_lst(service, order + 1)?;
        let sigma = USeries::from_lst(switchover, order + 1)?;
        let one = USeries::constant(1.0, order + 1);
        let bm1 = &beta - &one;
        let powers: Vec<USeries> = (0..=order + 1).map(|m| bm1.powi(m)).collect();
        let gamma = powers[..=order].iter().map(|p| p * &sigma).collect();
        let delta = powers[..=order].to_vec();
        let eta = powers[1..]
            .iter()
            .map(|p| (-p).div_u())
            .collect::<Result<Vec<_>>>()?;
        let zeta = (&one - &sigma).div_u()?;
        Ok(Self {
            gamma,
            eta,
            zeta,
            delta,
            sigma,
        })
    }
}

/// Precomputed coefficient tensors Γ, η, ζ, Δ for every station of a
/// configuration, valid for `|l| <= order`.
#[derive(Debug, Clone)]
pub struct CoefficientTensors {
    lambdas: Vec<f64>,
    order: usize,
    stations: Vec<StationSeries>,
}

impl CoefficientTensors {
    pub fn new(cfg: &SystemConfig, order: usize) -> Result<Self> {
        let stations = cfg
            .stations()
            .iter()
            .map(|s| StationSeries::new(&s.service, &s.switchover, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambdas: cfg.lambdas(),
            order,
            stations,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn check(&self, l: &[u32]) -> usize {
        let n = total(l);
        assert!(
            n <= self.order,
            "coefficient of order {n} requested from tensors built to order {}",
            self.order
        );
        n
    }

    /// `Γ_{i,m}^{(l)}`: coefficient of `(β_i - 1)^m σ_i`.
    pub fn gamma(&self, i: usize, m: usize, l: &[u32]) -> f64 {
        let n = self.check(l);
        if m > n {
            return 0.0;
        }
        multi_coeff(self.stations[i].gamma[m].coeff(n), l, &self.lambdas)
    }

    /// `η_{i,m}^{(l)}`: coefficient of `-(β_i - 1)^{m+1} / u`.
    pub fn eta(&self, i: usize, m: usize, l: &[u32]) -> f64 {
        let n = self.check(l);
        if m > n {
            return 0.0;
        }
        multi_coeff(self.stations[i].eta[m].coeff(n), l, &self.lambdas)
    }

    /// `ζ_i^{(l)}`: coefficient of `(1 - σ_i) / u`.
    pub fn zeta(&self, i: usize, l: &[u32]) -> f64 {
        let n = self.check(l);
        multi_coeff(self.stations[i].zeta.coeff(n), l, &self.lambdas)
    }

    /// `Δ_{i,m}^{(l)}`: coefficient of `(β_i - 1)^m`.
    pub fn delta(&self, i: usize, m: usize, l: &[u32]) -> f64 {
        let n = self.check(l);
        if m > n {
            return 0.0;
        }
        multi_coeff(self.stations[i].delta[m].coeff(n), l, &self.lambdas)
    }

    /// Coefficient of `σ_i` alone.
    pub fn sigma(&self, i: usize, l: &[u32]) -> f64 {
        let n = self.check(l);
        multi_coeff(self.stations[i].sigma.coeff(n), l, &self.lambdas)
    }
}

/// `Γ_{i,m}^{(l)}` computed on the fly.
pub fn gamma_coeff(cfg: &SystemConfig, i: usize, m: usize, l: &[u32]) -> Result<f64> {
    Ok(CoefficientTensors::new(cfg, total(l).max(m))?.gamma(i, m, l))
}

/// `η_{i,m}^{(l)}` computed on the fly.
pub fn eta_coeff(cfg: &SystemConfig, i: usize, m: usize, l: &[u32]) -> Result<f64> {
    Ok(CoefficientTensors::new(cfg, total(l).max(m))?.eta(i, m, l))
}

/// `ζ_i^{(l)}` computed on the fly.
pub fn zeta_coeff(cfg: &SystemConfig, i: usize, l: &[u32]) -> Result<f64> {
    Ok(CoefficientTensors::new(cfg, total(l))?.zeta(i, l))
}

/// `Δ_{i,m}^{(l)}` computed on the fly.
pub fn delta_coeff(cfg: &SystemConfig, i: usize, m: usize, l: &[u32]) -> Result<f64> {
    Ok(CoefficientTensors::new(cfg, total(l).max(m))?.delta(i, m, l))
}
