//! Exact station statistics over a grid of glue lengths.
//!
//! Every station gets an exponential glue period with the same mean; each
//! grid point is an independent exact computation.

use glue_polling::exact::{station_size_stats, StationStats};
use glue_polling::{DistributionSpec, SystemConfig};

use crate::error::{CliError, Result};
use crate::output::{num, Table};

/// `per_decade` log-spaced points per factor of ten from `from` to `to`,
/// both included.
pub fn log_grid(from: f64, to: f64, per_decade: u32) -> Result<Vec<f64>> {
    if !(from > 0.0 && to > from && per_decade > 0) {
        return Err(CliError::Validation(format!(
            "grid needs 0 < from < to and at least one point per decade, got {from}..{to} with {per_decade}"
        )));
    }
    let (a, b) = (from.log10(), to.log10());
    let steps = ((b - a) * f64::from(per_decade)).round().max(1.0) as usize;
    Ok((0..=steps)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / steps as f64))
        .collect())
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub glue_mean: f64,
    pub stats: StationStats,
}

fn point(base: &SystemConfig, glue_mean: f64) -> Result<SweepPoint> {
    let glue = vec![DistributionSpec::exponential(glue_mean); base.len()];
    let stats = station_size_stats(&base.with_glue(&glue)?)?;
    Ok(SweepPoint { glue_mean, stats })
}

/// Evaluates the grid on up to `threads` threads; points come back in grid
/// order.
pub fn sweep(base: &SystemConfig, grid: &[f64], threads: usize) -> Result<Vec<SweepPoint>> {
    let chunk = grid.len().div_ceil(threads.max(1)).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&g| point(base, g)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep thread panicked"))
            .collect()
    })
}

/// Columns: glue_mean, `mean_i`, `scv_i` for each station, then `cor_i_j`
/// for each pair `i < j`.
pub fn table(points: &[SweepPoint], n: usize) -> Table {
    let mut headers = vec!["glue_mean".to_string()];
    headers.extend((0..n).map(|i| format!("mean_{i}")));
    headers.extend((0..n).map(|i| format!("scv_{i}")));
    for i in 0..n {
        headers.extend((i + 1..n).map(|j| format!("cor_{i}_{j}")));
    }
    let mut t = Table::new(headers);
    for p in points {
        let s = &p.stats;
        let mut row = vec![num(p.glue_mean)];
        row.extend(s.means.total.iter().map(|&x| num(x)));
        row.extend(s.scv.iter().map(|&x| num(x)));
        for i in 0..n {
            row.extend((i + 1..n).map(|j| num(s.correlation[i][j])));
        }
        t.push(row);
    }
    t
}

/// Shape of one station's mean-size curve over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveShape {
    pub station: usize,
    /// Grid index of the smallest mean.
    pub argmin: usize,
    pub interior_minimum: bool,
    /// Secant slopes at the start and the end of the last decade.
    pub slope_start: f64,
    pub slope_end: f64,
    /// `|slope_end - slope_start| / |slope_end|`.
    pub slope_change: f64,
}

/// Per-station minimum location and tail slopes. The last decade is the
/// part of the grid at or above a tenth of its largest value.
pub fn curve_shapes(points: &[SweepPoint]) -> Vec<CurveShape> {
    let Some(last) = points.last() else {
        return Vec::new();
    };
    let n = last.stats.means.total.len();
    let tail: Vec<&SweepPoint> = points
        .iter()
        .filter(|p| p.glue_mean >= last.glue_mean / 10.0 * (1.0 - 1e-9))
        .collect();
    let slope = |a: &SweepPoint, b: &SweepPoint, i: usize| {
        (b.stats.means.total[i] - a.stats.means.total[i]) / (b.glue_mean - a.glue_mean)
    };
    (0..n)
        .map(|i| {
            let argmin = points
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.stats.means.total[i].total_cmp(&b.1.stats.means.total[i]))
                .map(|(k, _)| k)
                .unwrap_or(0);
            let (slope_start, slope_end) = if tail.len() >= 3 {
                let k = tail.len();
                (slope(tail[0], tail[1], i), slope(tail[k - 2], tail[k - 1], i))
            } else {
                (f64::NAN, f64::NAN)
            };
            CurveShape {
                station: i,
                argmin,
                interior_minimum: argmin > 0 && argmin + 1 < points.len(),
                slope_start,
                slope_end,
                slope_change: (slope_end - slope_start).abs() / slope_end.abs(),
            }
        })
        .collect()
}
