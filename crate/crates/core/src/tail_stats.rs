//! Empirical and analytic tail diagnostics: Hill tail-index estimation,
//! regular-variation ratio tests and dominated-variation checks.
//!
//! Verdicts are deterministic functions of the input grid and tolerance;
//! there is no hidden randomness anywhere in this module.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default absolute tolerance for ratio-convergence verdicts.
pub const RATIO_TOL: f64 = 0.01;

/// Allowed decade-over-decade growth of the ratio sup before a tail is
/// declared outside the dominated-variation class.
pub const DV_GROWTH_TOL: f64 = 0.1;

/// Hill estimate of the tail index from the k largest observations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailIndexEstimate {
    pub alpha_hat: f64,
    pub k: usize,
    /// Asymptotic standard error alpha_hat / sqrt(k).
    pub std_error: f64,
    pub sample_size: usize,
}

/// Hill estimator alpha_hat = k / sum_{i=1}^{k} ln(X_(n-i+1) / X_(n-k))
/// over descending order statistics.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<TailIndexEstimate> {
    let n = samples.len();
    if samples.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(
            "Hill estimation requires strictly positive finite samples".into(),
        ));
    }
    if k < 10 || k > n / 2 {
        return Err(Error::Domain(format!(
            "need 10 <= k <= n/2, got k = {k}, n = {n}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let pivot = sorted[k]; // the (k+1)-th largest, X_(n-k)
    let sum: f64 = sorted[..k].iter().map(|&x| (x / pivot).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::Degenerate(
            "tied upper order statistics: log-spacing sum is zero".into(),
        ));
    }
    let alpha_hat = k as f64 / sum;
    Ok(TailIndexEstimate {
        alpha_hat,
        k,
        std_error: alpha_hat / (k as f64).sqrt(),
        sample_size: n,
    })
}

/// Hill plot: one estimate per k in the sweep. k selection is left to the
/// caller; this emits the raw curve.
pub fn hill_plot(samples: &[f64], ks: &[usize]) -> Result<Vec<TailIndexEstimate>> {
    ks.iter().map(|&k| hill_estimator(samples, k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum RatioVerdict {
    /// Last-decade oscillation below tolerance with a nonzero limit.
    Convergent { limit: f64 },
    /// Ratio collapses to zero: rapid variation, flagged as non-RV.
    ConvergentToZero,
    /// Last-decade oscillation above tolerance.
    Oscillating { amplitude: f64 },
}

/// Ratio curve r(x) = tail(x * scale)/tail(x) with its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct RatioCurve {
    pub scale: f64,
    pub xs: Vec<f64>,
    pub ratios: Vec<f64>,
    /// max - min of the ratio over the last decade of the grid.
    pub last_decade_amplitude: f64,
    /// max - min of the ratio over the whole grid.
    pub full_amplitude: f64,
    pub verdict: RatioVerdict,
    /// Set when an empirical tail hit zero somewhere on the grid; those
    /// points were dropped.
    pub truncated_grid: bool,
}

fn ratio_curve_from_points(
    scale: f64,
    xs: Vec<f64>,
    ratios: Vec<f64>,
    tol: f64,
    truncated_grid: bool,
) -> Result<RatioCurve> {
    if xs.len() < 2 {
        return Err(Error::Domain(
            "ratio diagnostic needs at least two usable grid points".into(),
        ));
    }
    let x_max = *xs.last().unwrap();
    let decade_lo = x_max / 10.0;
    let mut last_min = f64::INFINITY;
    let mut last_max = f64::NEG_INFINITY;
    for (x, r) in xs.iter().zip(&ratios) {
        if *x >= decade_lo {
            last_min = last_min.min(*r);
            last_max = last_max.max(*r);
        }
    }
    let last_decade_amplitude = last_max - last_min;
    let full_amplitude = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let verdict = if last_decade_amplitude <= tol {
        let limit = 0.5 * (last_min + last_max);
        if limit.abs() <= tol {
            RatioVerdict::ConvergentToZero
        } else {
            RatioVerdict::Convergent { limit }
        }
    } else {
        RatioVerdict::Oscillating {
            amplitude: last_decade_amplitude,
        }
    };
    Ok(RatioCurve {
        scale,
        xs,
        ratios,
        last_decade_amplitude,
        full_amplitude,
        verdict,
        truncated_grid,
    })
}

/// Ratio diagnostic r(x) = tail(scale * x)/tail(x) for an analytic tail.
pub fn tail_ratio_diagnostic<T: Fn(f64) -> f64>(
    tail: T,
    scale: f64,
    grid: &[f64],
    tol: f64,
) -> Result<RatioCurve> {
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("scale must be > 0, got {scale}")));
    }
    let mut xs = Vec::with_capacity(grid.len());
    let mut ratios = Vec::with_capacity(grid.len());
    let mut truncated = false;
    for &x in grid {
        let denom = tail(x);
        if denom <= 0.0 {
            truncated = true;
            continue;
        }
        xs.push(x);
        ratios.push(tail(scale * x) / denom);
    }
    ratio_curve_from_points(scale, xs, ratios, tol, truncated)
}

/// Empirical survival function of a sample, usable as a tail closure.
pub fn empirical_tail(samples: &[f64]) -> impl Fn(f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    move |x: f64| {
        let above = sorted.partition_point(|&s| s <= x);
        (sorted.len() - above) as f64 / n
    }
}

/// Ratio diagnostic against an empirical tail; grid points where the
/// empirical tail is zero are dropped and flagged.
pub fn tail_ratio_from_samples(
    samples: &[f64],
    scale: f64,
    grid: &[f64],
    tol: f64,
) -> Result<RatioCurve> {
    if samples.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let tail = empirical_tail(samples);
    let mut xs = Vec::new();
    let mut ratios = Vec::new();
    let mut truncated = false;
    for &x in grid {
        let denom = tail(x);
        let num = tail(scale * x);
        if denom <= 0.0 || num <= 0.0 {
            truncated = true;
            continue;
        }
        xs.push(x);
        ratios.push(num / denom);
    }
    ratio_curve_from_points(scale, xs, ratios, tol, truncated)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DvVerdict {
    InD,
    NotInD,
}

/// Dominated-variation check report.
#[derive(Debug, Clone, Serialize)]
pub struct DominatedVariationReport {
    pub scale: f64,
    /// Max of tail(x*scale)/tail(x) over the tail segment (last two decades).
    pub sup: f64,
    pub last_decade_max: f64,
    pub prev_decade_max: f64,
    pub verdict: DvVerdict,
}

/// Check membership in the dominated-variation class: the ratio
/// tail(x y)/tail(x), y in (0,1), must stay bounded along the grid.
///
/// The verdict compares the ratio maxima of the last two decades: growth
/// beyond [`DV_GROWTH_TOL`] marks the tail as outside the class.
pub fn dominated_variation_check<T: Fn(f64) -> f64>(
    tail: T,
    y: f64,
    grid: &[f64],
) -> Result<DominatedVariationReport> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain(format!("need y in (0,1), got {y}")));
    }
    let x_max = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(x_max > 0.0) {
        return Err(Error::Domain("grid must contain positive points".into()));
    }
    let last_lo = x_max / 10.0;
    let prev_lo = x_max / 100.0;
    let mut last_max = 0.0f64;
    let mut prev_max = 0.0f64;
    for &x in grid {
        if x < prev_lo {
            continue;
        }
        let denom = tail(x);
        if denom <= 0.0 {
            continue;
        }
        let r = tail(x * y) / denom;
        if x >= last_lo {
            last_max = last_max.max(r);
        } else {
            prev_max = prev_max.max(r);
        }
    }
    let sup = last_max.max(prev_max);
    let verdict = if last_max <= prev_max * (1.0 + DV_GROWTH_TOL) {
        DvVerdict::InD
    } else {
        DvVerdict::NotInD
    };
    Ok(DominatedVariationReport {
        scale: y,
        sup,
        last_decade_max: last_max,
        prev_decade_max: prev_max,
        verdict,
    })
}
