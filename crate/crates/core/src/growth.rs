//! Critical-exponent estimates from count sequences.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};

/// Ordinary least squares `y = slope * x + intercept`; `r2` is 1 for exact fits.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, my - slope * mx, r2)
}

/// Growth rate of `log(count)` in `n` at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalExponentEstimate {
    pub epsilon: f64,
    /// Non-negative slope of `log(count)` against `n`.
    pub s_value: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// `(n, count)` for every `n` in the range.
    pub per_n_counts: Vec<(usize, usize)>,
    /// First `n` of the suffix window that produced `s_value`.
    pub window_start: usize,
    pub regression_r2: f64,
    /// Points in the sample the counts were taken over.
    pub sample_size: usize,
}

/// Minimum number of points in a regression window.
pub const MIN_WINDOW: usize = 3;

/// Points a window needs at scale `ε`: at least [`MIN_WINDOW`] and one full
/// period `⌈1/ε⌉ + 1` of the FK count sawtooth (counts drop whenever `εn`
/// crosses an integer and one more unmatched index becomes affordable).
pub fn min_window(epsilon: f64) -> usize {
    let period = if epsilon > 0.0 && epsilon.is_finite() {
        (1.0 / epsilon).ceil().min(1e6) as usize + 1
    } else {
        0
    };
    period.max(MIN_WINDOW)
}

/// Fits `log(count)` against `n` on every suffix window `[n_k, n_max]` of at
/// least [`min_window`] points (or the whole range when shorter) and keeps the
/// steepest one (the upper envelope stands in for the `limsup` over `N`).
/// Negative slopes clamp to zero.
pub fn growth_rate(
    epsilon: f64,
    per_n_counts: Vec<(usize, usize)>,
    sample_size: usize,
) -> CriticalExponentEstimate {
    let n_min = per_n_counts.first().map_or(0, |p| p.0);
    let n_max = per_n_counts.last().map_or(0, |p| p.0);
    let xs: Vec<f64> = per_n_counts.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = per_n_counts
        .iter()
        .map(|&(_, c)| (c.max(1) as f64).ln())
        .collect();
    let len = xs.len();
    let last_start = len.saturating_sub(min_window(epsilon).min(len));
    let mut best = (f64::NEG_INFINITY, 1.0, n_min);
    for start in 0..=last_start {
        if len - start < 2 && len >= 2 {
            continue;
        }
        let (slope, _, r2) = least_squares(&xs[start..], &ys[start..]);
        if slope > best.0 {
            best = (slope, r2, per_n_counts[start].0);
        }
    }
    let (slope, r2, window_start) = if best.0.is_finite() {
        best
    } else {
        (0.0, 1.0, n_min)
    };
    CriticalExponentEstimate {
        epsilon,
        s_value: slope.max(0.0),
        n_min,
        n_max,
        per_n_counts,
        window_start,
        regression_r2: r2,
        sample_size,
    }
}

/// One row of a metric-mean-dimension sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdimRow {
    pub epsilon: f64,
    pub s_value: f64,
    /// `s_value / log(1/ε)`.
    pub ratio: f64,
    pub estimate: CriticalExponentEstimate,
}

/// Ratios over an `ε` grid; `proxy` is the largest ratio among the two smallest `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdimEstimate {
    pub rows: Vec<MdimRow>,
    pub proxy: f64,
}

impl MdimEstimate {
    pub fn from_estimates(estimates: Vec<CriticalExponentEstimate>) -> Self {
        let rows: Vec<MdimRow> = estimates
            .into_iter()
            .map(|e| MdimRow {
                epsilon: e.epsilon,
                s_value: e.s_value,
                ratio: e.s_value / (1.0 / e.epsilon).ln(),
                estimate: e,
            })
            .collect();
        let mut by_eps: Vec<&MdimRow> = rows.iter().collect();
        by_eps.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        let proxy = by_eps
            .iter()
            .take(2)
            .map(|r| r.ratio)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            rows,
            proxy: if proxy.is_finite() { proxy } else { 0.0 },
        }
    }
}

pub(crate) fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::param("eps", "empty ε list"));
    }
    if let Some(&bad) = epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::param("eps", format!("{bad} is outside (0,1)")));
    }
    Ok(())
}

pub(crate) fn check_range(range: &RangeInclusive<usize>, budget: usize) -> Result<()> {
    if *range.start() == 0 || range.start() > range.end() {
        return Err(Error::InvalidRange(format!(
            "n range {}..={} is empty or starts at 0",
            range.start(),
            range.end()
        )));
    }
    if *range.end() > budget {
        return Err(Error::Truncation {
            requested: *range.end(),
            max: budget,
        });
    }
    Ok(())
}
