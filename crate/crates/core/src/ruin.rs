//! Discounted-loss simulation and ruin-probability estimation.
//!
//! The loss process is `S_n = sum_{i<=n} X_i * prod_{j<=i} Y_j` over i.i.d.
//! Sarmanov pairs. Finite-horizon estimates are plain Monte Carlo with
//! binomial standard errors; the infinite horizon is truncated at a depth
//! solved from an explicit moment bound whose slack is reported alongside
//! the estimate. The closed-form asymptotic constants for the product,
//! finite-sum and infinite-sum tails live here too.

use num_complex::Complex64;
use serde::Serialize;

use crate::dist::Law;
use crate::error::{Error, Result};
use crate::mc::{self, BinomialEstimate, McConfig};
use crate::sarmanov::{kernel_moment, SarmanovModel};
use crate::Z99;

/// One step of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathState {
    pub step: u32,
    /// Discount product prod_{j<=step} Y_j.
    pub discount: f64,
    /// Partial sum S_step.
    pub partial_sum: f64,
    /// Running maximum max_{k<=step} S_k.
    pub running_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Finite(u32),
    Infinite,
}

/// How the infinite-horizon truncation depth was justified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum TruncationRule {
    /// `E[remainder]/x` with the exact first moment `E[XY]` of a pair.
    FirstMomentMarkov,
    /// Fractional-moment bound at exponent gamma < 1; used when `E[Y] >= 1`
    /// but E[Y^gamma] < 1 (heavy discounting with tail index below 1).
    FractionalMomentMarkov { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationInfo {
    pub depth: u32,
    /// Value of the bound at the chosen depth (below eps_trunc).
    pub bound: f64,
    #[serde(flatten)]
    pub rule: TruncationRule,
}

/// Monte Carlo ruin estimate with standard error and 99% CI.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RuinEstimate {
    pub threshold: f64,
    pub horizon: Horizon,
    pub p_hat: f64,
    pub std_error: f64,
    pub ci99: (f64, f64),
    pub samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationInfo>,
}

impl RuinEstimate {
    fn from_counts(
        threshold: f64,
        horizon: Horizon,
        successes: u64,
        samples: u64,
        truncation: Option<TruncationInfo>,
    ) -> Self {
        let b = BinomialEstimate::from_counts(successes, samples);
        Self {
            threshold,
            horizon,
            p_hat: b.p_hat,
            std_error: b.std_error,
            ci99: (b.p_hat - Z99 * b.std_error, b.p_hat + Z99 * b.std_error),
            samples,
            truncation,
        }
    }
}

/// Simulate one path of length n, returning every step.
pub fn simulate_path(
    model: &SarmanovModel,
    n: u32,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<PathState>> {
    if n < 1 {
        return Err(Error::Domain("horizon must be >= 1".into()));
    }
    if !model.is_valid() {
        return Err(Error::Construction(
            "model failed validation; see validate() report".into(),
        ));
    }
    let mut states = Vec::with_capacity(n as usize);
    let mut discount = 1.0;
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    for step in 1..=n {
        let (x, y) = model.sample_pair_unchecked(rng);
        discount *= y;
        sum += x * discount;
        max = max.max(sum);
        states.push(PathState {
            step,
            discount,
            partial_sum: sum,
            running_max: max,
        });
    }
    Ok(states)
}

fn check_model_and_samples(model: &SarmanovModel, samples: u64) -> Result<()> {
    if !model.is_valid() {
        return Err(Error::Construction(
            "model failed validation; see validate() report".into(),
        ));
    }
    if samples < 1_000 {
        return Err(Error::Domain(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    Ok(())
}

/// Finite-horizon ruin probabilities for a grid of thresholds, sharing one
/// set of simulated paths.
///
/// For nonnegative insurance risks the running maximum equals S_n; this is
/// asserted sample-by-sample.
pub fn estimate_finite_ruin_grid(
    model: &SarmanovModel,
    thresholds: &[f64],
    n: u32,
    samples: u64,
    seed: u64,
) -> Result<Vec<RuinEstimate>> {
    check_model_and_samples(model, samples)?;
    if n < 1 {
        return Err(Error::Domain("horizon must be >= 1".into()));
    }
    if thresholds.is_empty() || thresholds.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Domain(
            "thresholds must be a non-empty list of finite values >= 0".into(),
        ));
    }
    let k = thresholds.len();
    let nonneg_x = model.f().support().0 >= 0.0;
    // Final slot counts violations of the monotone-path identity.
    let counts = mc::mc_tally(&McConfig::new(samples, seed), k + 1, |rng, slots| {
        let mut discount = 1.0;
        let mut sum = 0.0;
        let mut max = f64::NEG_INFINITY;
        for _ in 0..n {
            let (x, y) = model.sample_pair_unchecked(rng);
            discount *= y;
            sum += x * discount;
            max = max.max(sum);
        }
        for (j, &x) in thresholds.iter().enumerate() {
            if max > x {
                slots[j] += 1;
            }
        }
        if nonneg_x && max != sum {
            slots[k] += 1;
        }
    });
    assert_eq!(
        counts[k], 0,
        "monotone-path identity violated for nonnegative X"
    );
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(j, &x)| RuinEstimate::from_counts(x, Horizon::Finite(n), counts[j], samples, None))
        .collect())
}

/// Finite-horizon ruin probability Psi(x, n).
pub fn estimate_finite_ruin(
    model: &SarmanovModel,
    threshold: f64,
    n: u32,
    samples: u64,
    seed: u64,
) -> Result<RuinEstimate> {
    Ok(estimate_finite_ruin_grid(model, &[threshold], n, samples, seed)?.remove(0))
}

/// Solve the truncation depth for the infinite horizon.
///
/// With `m1 = E[Y] < 1` the expected remainder beyond depth m is
/// `E[XY] m1^m / (1 - m1)`, and Markov's inequality gives the reported
/// bound after division by x. When `E[Y] >= 1` (possible only for tail index
/// below 1) the first moment is useless; the plan falls back to a
/// fractional-moment bound at an exponent gamma < 1 with E[Y^gamma] < 1,
/// where subadditivity of t -> t^gamma gives
/// `P[remainder > x] <= E[(XY)^gamma] E[Y^gamma]^m / ((1-E[Y^gamma]) x^gamma)`.
pub fn truncation_plan(
    model: &SarmanovModel,
    threshold: f64,
    eps_trunc: f64,
) -> Result<TruncationInfo> {
    if !(threshold > 0.0) || !(eps_trunc > 0.0 && eps_trunc < 1.0) {
        return Err(Error::Domain(format!(
            "need threshold > 0 and eps_trunc in (0,1), got ({threshold}, {eps_trunc})"
        )));
    }
    let g = model.g();
    let m1 = g.real_moment(1.0)?;

    let pair_moment = |s: f64| -> Result<f64> {
        let ex = model.f().real_moment(s)?;
        let ey = g.real_moment(s)?;
        if model.theta() == 0.0 {
            return Ok(ex * ey);
        }
        let kx = kernel_moment(model.f(), model.kernel1(), Complex64::new(s, 0.0))?;
        let ky = kernel_moment(g, model.kernel2(), Complex64::new(s, 0.0))?;
        Ok(ex * ey + model.theta() * kx.value.re * ky.value.re)
    };

    if m1 < 1.0 - 1e-12 && model.f().moment_strip().1 > 1.0 {
        let e_xy = pair_moment(1.0)?;
        let solve = |m: u32| e_xy * m1.powi(m as i32) / ((1.0 - m1) * threshold);
        let mut depth = 1u32;
        while solve(depth) >= eps_trunc {
            depth += 1;
            if depth > 100_000 {
                return Err(Error::TruncationUnjustified(
                    "first-moment bound needs more than 1e5 steps".into(),
                ));
            }
        }
        return Ok(TruncationInfo {
            depth,
            bound: solve(depth),
            rule: TruncationRule::FirstMomentMarkov,
        });
    }

    // Fractional fallback: smallest-effort search over a fixed gamma menu.
    let strip_top = model.f().moment_strip().1.min(g.moment_strip().1).min(1.0);
    for frac in [0.95, 0.8, 0.6, 0.4, 0.2] {
        let gamma = frac * strip_top;
        if gamma <= 0.0 {
            break;
        }
        let m_gamma = g.real_moment(gamma)?;
        if m_gamma >= 1.0 - 1e-9 {
            continue;
        }
        let e_pair = pair_moment(gamma)?;
        let xg = threshold.powf(gamma);
        let solve = |m: u32| e_pair * m_gamma.powi(m as i32) / ((1.0 - m_gamma) * xg);
        let mut depth = 1u32;
        let mut ok = true;
        while solve(depth) >= eps_trunc {
            depth += 1;
            if depth > 100_000 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(TruncationInfo {
                depth,
                bound: solve(depth),
                rule: TruncationRule::FractionalMomentMarkov { gamma },
            });
        }
    }
    Err(Error::TruncationUnjustified(format!(
        "E[Y] = {m1} >= 1 and no workable fractional exponent found"
    )))
}

/// Infinite-horizon ruin probability Psi(x), truncated at the depth from
/// [`truncation_plan`]; the plan (depth, bound, rule) is reported in the
/// estimate.
pub fn estimate_infinite_ruin(
    model: &SarmanovModel,
    threshold: f64,
    samples: u64,
    eps_trunc: f64,
    seed: u64,
) -> Result<RuinEstimate> {
    check_model_and_samples(model, samples)?;
    let plan = truncation_plan(model, threshold, eps_trunc)?;
    let depth = plan.depth;
    let counts = mc::mc_tally(&McConfig::new(samples, seed), 1, |rng, slots| {
        let mut discount = 1.0;
        let mut sum = 0.0;
        for _ in 0..depth {
            let (x, y) = model.sample_pair_unchecked(rng);
            discount *= y;
            sum += x * discount;
            if sum > threshold {
                slots[0] += 1;
                return;
            }
        }
    });
    Ok(RuinEstimate::from_counts(
        threshold,
        Horizon::Infinite,
        counts[0],
        samples,
        Some(plan),
    ))
}

/// The product-tail constant `E[Y^alpha] + theta d1 E[k2(Y) Y^alpha]`.
pub fn asymptotic_constant_product(model: &SarmanovModel, alpha: f64) -> Result<f64> {
    let ey = model.g().real_moment(alpha)?;
    let td1 = model.theta() * model.d1();
    if td1 == 0.0 {
        return Ok(ey);
    }
    let ky = kernel_moment(model.g(), model.kernel2(), Complex64::new(alpha, 0.0))?;
    Ok(ey + td1 * ky.value.re)
}

/// Finite-horizon constant `(1 - m^n)/(1 - m) * C` with m = E[Y^alpha].
///
/// m = 1 is rejected rather than patched by the limiting value n*C.
pub fn asymptotic_constant_finite(model: &SarmanovModel, alpha: f64, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("horizon must be >= 1".into()));
    }
    let m = model.g().real_moment(alpha)?;
    if (m - 1.0).abs() <= 1e-12 {
        return Err(Error::SingularRatio);
    }
    let c = asymptotic_constant_product(model, alpha)?;
    Ok((1.0 - m.powi(n as i32)) / (1.0 - m) * c)
}

/// Infinite-horizon constant `C / (1 - m)`, requiring m = E[Y^alpha] < 1.
pub fn asymptotic_constant_infinite(model: &SarmanovModel, alpha: f64) -> Result<f64> {
    let m = model.g().real_moment(alpha)?;
    if m >= 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "E[Y^alpha] = {m} >= 1: the infinite-horizon constant does not exist"
        )));
    }
    let c = asymptotic_constant_product(model, alpha)?;
    Ok(c / (1.0 - m))
}

/// One row of the joint-tail negligibility table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JointTailRow {
    pub x: f64,
    pub single_successes: u64,
    pub joint_successes: u64,
    pub p_single: f64,
    pub p_joint: f64,
    /// Conditional ratio `P[joint]/P[single]` with its binomial SE.
    pub ratio: f64,
    pub ratio_se: f64,
    pub ratio_ci99: (f64, f64),
}

/// Monte Carlo estimates of
/// `P[X1 Y1 > x, X2 Y2 Y1 > x] / P[X1 Y1 > x]` on a threshold grid.
///
/// Every joint success is a single success, so the ratio is a conditional
/// proportion and carries the binomial standard error
/// `sqrt(r (1-r) / n_single)`.
pub fn joint_tail_negligibility(
    model: &SarmanovModel,
    thresholds: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<JointTailRow>> {
    check_model_and_samples(model, samples)?;
    if thresholds.is_empty() {
        return Err(Error::Domain("threshold grid must be non-empty".into()));
    }
    let k = thresholds.len();
    let counts = mc::mc_tally(&McConfig::new(samples, seed), 2 * k, |rng, slots| {
        let (x1, y1) = model.sample_pair_unchecked(rng);
        let (x2, y2) = model.sample_pair_unchecked(rng);
        let s1 = x1 * y1;
        let t2 = x2 * y2 * y1;
        for (j, &x) in thresholds.iter().enumerate() {
            if s1 > x {
                slots[2 * j] += 1;
                if t2 > x {
                    slots[2 * j + 1] += 1;
                }
            }
        }
    });
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let n_single = counts[2 * j];
            let n_joint = counts[2 * j + 1];
            let nf = samples as f64;
            let ratio = if n_single > 0 {
                n_joint as f64 / n_single as f64
            } else {
                f64::NAN
            };
            let ratio_se = if n_single > 0 {
                (ratio * (1.0 - ratio) / n_single as f64).sqrt()
            } else {
                f64::NAN
            };
            JointTailRow {
                x,
                single_successes: n_single,
                joint_successes: n_joint,
                p_single: n_single as f64 / nf,
                p_joint: n_joint as f64 / nf,
                ratio,
                ratio_se,
                ratio_ci99: (ratio - Z99 * ratio_se, ratio + Z99 * ratio_se),
            }
        })
        .collect())
}

/// Report of the sup-ratio integrability check.
#[derive(Debug, Clone, Serialize)]
pub struct HtildeReport {
    /// (v, H~(v)) on the requested v grid.
    pub rows: Vec<(f64, f64)>,
    /// Numerical value of the integral of H~ against G.
    pub integral: f64,
    pub integral_abs_error: f64,
    /// False when the sup blew up anywhere on the grid.
    pub finite: bool,
}

/// H~(v) = sup over the x grid of tail(x/v)/tail(x).
pub fn htilde_from_tail<T: Fn(f64) -> f64>(tail: T, v: f64, x_grid: &[f64]) -> f64 {
    let mut sup = 0.0f64;
    for &x in x_grid {
        let denom = tail(x);
        if denom <= 0.0 {
            continue;
        }
        sup = sup.max(tail(x / v) / denom);
    }
    sup
}

/// Numerical check of the integrability condition: the sup-ratio H~ of the
/// exact product tail, integrated against G.
pub fn htilde_integrability_check(
    model: &SarmanovModel,
    v_grid: &[f64],
    x_grid: &[f64],
) -> Result<HtildeReport> {
    if v_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::Domain("v and x grids must be non-empty".into()));
    }
    // Cache the denominators; the numerators depend on v.
    let denom: Vec<f64> = x_grid
        .iter()
        .map(|&x| model.product_tail_exact(x))
        .collect::<Result<Vec<_>>>()?;
    let htilde = |v: f64| -> f64 {
        let mut sup = 0.0f64;
        for (i, &x) in x_grid.iter().enumerate() {
            if denom[i] <= 0.0 {
                continue;
            }
            let num = model.product_tail_exact(x / v).unwrap_or(f64::INFINITY);
            sup = sup.max(num / denom[i]);
        }
        sup
    };
    let rows: Vec<(f64, f64)> = v_grid.iter().map(|&v| (v, htilde(v))).collect();
    let finite = rows.iter().all(|(_, h)| h.is_finite());
    let (integral, err) = crate::dist::integrate_against(
        model.g(),
        |v| Complex64::new(htilde(v), 0.0),
        f64::NEG_INFINITY,
        &[],
        1e-8,
    )?;
    Ok(HtildeReport {
        rows,
        integral: integral.re,
        integral_abs_error: err,
        finite: finite && integral.re.is_finite(),
    })
}
