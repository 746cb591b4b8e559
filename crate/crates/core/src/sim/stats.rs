//! Batch-means confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Point estimate with a two-sided Student-t confidence interval over
/// batch means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided Student-t quantile `t_{df, (1 + level)/2}`.
pub fn t_quantile(df: usize, level: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0)
}

impl Estimate {
    /// Interval `mean ± t · sd / √n` over the batch values; `None` with
    /// fewer than two batches or any non-finite value.
    pub fn from_batches(values: &[f64], level: f64) -> Option<Self> {
        let n = values.len();
        if n < 2 || values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let half_width = t_quantile(n - 1, level) * (var / n as f64).sqrt();
        Some(Self {
            mean,
            half_width,
            lower: mean - half_width,
            upper: mean + half_width,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}
