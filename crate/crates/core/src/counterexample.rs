//! End-to-end construction showing the non-vanishing Mellin hypothesis is
//! necessary: a financial-risk law G whose (twisted) Mellin transform has a
//! zero on the critical line, and an insurance-risk law F without a
//! regularly varying tail whose product convolution with G is nevertheless
//! regularly varying.
//!
//! The pipeline has four stages:
//! 1. a two-atom G with atoms at 1 and exp(pi/beta0) whose weights force
//!    the transform to vanish at alpha + i*beta0;
//! 2. the oscillating law F~ (Pareto modulated by a log-periodic factor);
//! 3. F^(1), which flattens F~'s tail on (1, c] and parks the missing mass
//!    as an atom at 1;
//! 4. F, a tweak of F^(1) making the first kernel integrate to zero: either
//!    conditioning above a root of the partial kernel integral, or mixing
//!    in one atom placed where the kernel has the opposite sign.

use num_complex::Complex64;
use serde::Serialize;

use crate::dist::{FlattenedLaw, AtomMixtureLaw, Law, UnivariateLaw};
use crate::error::{Error, Result};
use crate::mellin::{mult_convolution_tail, ProductMeasure};
use crate::numeric;
use crate::sarmanov::{kernel_tail_integral, Kernel};

/// Modulus below which the constructed transform zero must sit.
pub const MELLIN_ZERO_TOL: f64 = 1e-10;

/// Tolerance for the final centering invariant |int k1 dF|.
pub const CENTERING_TOL: f64 = 1e-9;

/// Two-atom financial-risk law with a plain Mellin zero at alpha + i*beta0.
///
/// Atoms at 1 and y2 = exp(pi/beta0) with P[Y = 1] = y2^alpha/(1 + y2^alpha)
/// give `E[Y^(alpha+i beta0)] = p1 - (1-p1) y2^alpha = 0`.
pub fn build_vanishing_mellin_law(alpha: f64, beta0: f64) -> Result<UnivariateLaw> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be > 0, got {alpha}")));
    }
    if beta0 == 0.0 || !beta0.is_finite() {
        return Err(Error::Domain(format!("beta0 must be nonzero, got {beta0}")));
    }
    let y2 = (std::f64::consts::PI / beta0).exp();
    let (lo, hi) = if y2 > 1.0 { (1.0, y2) } else { (y2, 1.0) };
    // Weight on the *smaller* atom follows from the same zero identity
    // whichever side of 1 the second atom lands on (beta0 may be negative).
    let w_hi = 1.0 / (1.0 + hi.powf(alpha) / lo.powf(alpha));
    UnivariateLaw::two_atom(lo, 1.0 - w_hi, hi)
}

/// Theta-aware variant: the two-atom weights are adjusted so the *twisted*
/// transform `E[Y^s] + theta d1 E[k2(Y) Y^s]` (FGM kernel, d1 = -1)
/// vanishes at s = alpha + i*beta0. Solved by bisection in the weight.
pub fn build_vanishing_mellin_law_fgm(alpha: f64, beta0: f64, theta: f64) -> Result<UnivariateLaw> {
    if theta == 0.0 {
        return build_vanishing_mellin_law(alpha, beta0);
    }
    if !(theta.abs() <= 1.0) {
        return Err(Error::Domain(format!(
            "FGM requires |theta| <= 1, got {theta}"
        )));
    }
    if !(alpha > 0.0) || beta0 == 0.0 || !beta0.is_finite() {
        return Err(Error::Domain("need alpha > 0 and beta0 != 0".into()));
    }
    if beta0 < 0.0 {
        // Conjugate symmetry: a zero at -beta0 is a zero at beta0.
        return build_vanishing_mellin_law_fgm(alpha, -beta0, theta);
    }
    let y2 = (std::f64::consts::PI / beta0).exp();
    let y2a = y2.powf(alpha);
    // Twisted atom weights: A(p) = p (1 - theta (1-p)) at 1 and
    // B(p) = (1-p)(1 + theta p) at y2; the zero needs A = B * y2^alpha.
    let imbalance = |p: f64| p * (1.0 - theta * (1.0 - p)) - (1.0 - p) * (1.0 + theta * p) * y2a;
    let p1 = numeric::bisect_root(imbalance, 1e-12, 1.0 - 1e-12, 1e-15, 0.0)?;
    UnivariateLaw::two_atom(1.0, p1, y2)
}

/// The oscillating stage: Pareto(alpha, 1) modulated by
/// `1 + a cos(beta0 ln x) + b sin(beta0 ln x)`, normalized to unit mass.
pub fn build_oscillating_law(alpha: f64, beta0: f64, a: f64, b: f64) -> Result<UnivariateLaw> {
    UnivariateLaw::oscillating_pareto(alpha, beta0, a, b)
}

/// Flattening stage: tail held at F~tail(c) on (1, c], missing mass parked
/// as an atom at 1, unchanged above c. Requires `c > 1` (so the flat value
/// is strictly below one).
pub fn flatten_below(f_tilde: &UnivariateLaw, c: f64) -> Result<UnivariateLaw> {
    let params = match f_tilde {
        UnivariateLaw::OscillatingPareto(p) => *p,
        other => {
            return Err(Error::Unsupported(format!(
                "flatten_below expects the oscillating stage, got {other:?}"
            )))
        }
    };
    let tail_c = f_tilde.tail(c)?;
    if !(c > 1.0) || tail_c >= 1.0 {
        return Err(Error::Domain(format!(
            "need c > 1 with tail(c) < 1, got c = {c}, tail = {tail_c}"
        )));
    }
    let law = UnivariateLaw::Flattened(FlattenedLaw {
        base: params,
        bottom: 1.0,
        cut: c,
        scale: 1.0,
    });
    law.validate()?;
    Ok(law)
}

/// Which of the three centering constructions produced the final law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum CenteringCase {
    /// The partial kernel integral changes sign: condition above its root.
    RootFound { x0: f64 },
    /// The integral stays positive: add an atom where the kernel is negative.
    PositiveAtom { x: f64, weight: f64 },
    /// The integral stays negative: add an atom where the kernel is positive.
    NegativeAtom { x: f64, weight: f64 },
}

/// Centering stage: adjust F^(1) so the fixed kernel `k1`, evaluated
/// through F^(1)'s mid-CDF, integrates to zero against the result.
///
/// `phi_hat(x) = int_(x,inf) k1 dF^(1)` is computed in closed form; a sign
/// change yields the conditional law above the bisection root, otherwise
/// one atom of weight |phi_hat(1)| / |k1(x_atom)| is mixed in at a point
/// where the kernel takes the opposite sign.
pub fn center_kernel(
    f1: &UnivariateLaw,
    kernel: &Kernel,
) -> Result<(UnivariateLaw, CenteringCase)> {
    let flat = match f1 {
        UnivariateLaw::Flattened(f) => *f,
        other => {
            return Err(Error::Unsupported(format!(
                "center_kernel expects the flattened stage, got {other:?}"
            )))
        }
    };
    if flat.bottom != 1.0 {
        return Err(Error::Domain(
            "center_kernel expects the flattened law with bottom = 1".into(),
        ));
    }
    let k1 = |x: f64| kernel.eval(f1, x);

    // Hypothesis: the kernel itself takes both signs somewhere on (0, inf).
    let deep = f1.quantile(1.0 - 1e-12)?;
    let search_grid = numeric::log_grid(1e-3, deep, 4096);
    let (k_min, k_min_at, k_max, k_max_at) = search_grid.iter().fold(
        (f64::INFINITY, 0.0, f64::NEG_INFINITY, 0.0),
        |(mn, mn_at, mx, mx_at), &x| {
            let v = k1(x);
            let (mn, mn_at) = if v < mn { (v, x) } else { (mn, mn_at) };
            let (mx, mx_at) = if v > mx { (v, x) } else { (mx, mx_at) };
            (mn, mn_at, mx, mx_at)
        },
    );
    if !(k_min < -1e-9 && k_max > 1e-9) {
        return Err(Error::Construction(format!(
            "kernel is single-signed on the support (min {k_min}, max {k_max}); \
             the centering hypotheses fail"
        )));
    }

    let phi_hat = |x: f64| kernel_tail_integral(f1, kernel, x).unwrap_or(f64::NAN);
    let grid = numeric::log_grid(1.0, deep, 2048);
    let values: Vec<f64> = grid.iter().map(|&x| phi_hat(x)).collect();

    let has_pos = values.iter().any(|&v| v > 1e-10);
    let has_neg = values.iter().any(|&v| v < -1e-10);

    let conditional_above = |x0: f64| -> Result<UnivariateLaw> {
        let law = UnivariateLaw::Flattened(FlattenedLaw {
            base: flat.base,
            bottom: x0,
            cut: flat.cut.max(x0),
            scale: flat.scale / f1.tail(x0)?,
        });
        law.validate()?;
        Ok(law)
    };

    // The kernel integral may vanish at the bottom already (or everywhere
    // on the grid): the root sits at the support bottom and conditioning
    // only sheds the atom at 1.
    if values[0].abs() < 1e-10 || (!has_pos && !has_neg) {
        return Ok((conditional_above(1.0)?, CenteringCase::RootFound { x0: 1.0 }));
    }

    if has_pos && has_neg {
        // Case 1: a root exists by the intermediate value theorem. The
        // bisection runs on the integral value down to 1e-10, well inside
        // the 1e-8 bracket tolerance.
        let mut root = None;
        for w in grid.windows(2).zip(values.windows(2)) {
            let ((lo, hi), (vlo, vhi)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
            if vlo.signum() != vhi.signum() {
                root = Some(numeric::bisect_root(phi_hat, lo, hi, 0.0, 5e-11)?);
                break;
            }
        }
        let x0 = root.ok_or_else(|| {
            Error::Numerical("sign change seen on grid but no bracketing pair found".into())
        })?;
        return Ok((conditional_above(x0)?, CenteringCase::RootFound { x0 }));
    }

    // The integral is single-signed: mix in one atom. phi_hat(1) uses the
    // open-interval integral, which matches the mixture formula's
    // restriction of F^(1) to (1, inf).
    let c0 = phi_hat(1.0);

    if has_pos {
        // Case 2: phi_hat > 0 everywhere; the atom sits where k1 < 0.
        let weight = c0 / (-k_min);
        let law = UnivariateLaw::AtomMixture(AtomMixtureLaw {
            base: flat,
            atom_x: k_min_at,
            atom_weight: weight,
        });
        law.validate()?;
        Ok((
            law,
            CenteringCase::PositiveAtom {
                x: k_min_at,
                weight,
            },
        ))
    } else {
        // Case 3: phi_hat < 0 everywhere; the atom sits where k1 > 0.
        let weight = -c0 / k_max;
        let law = UnivariateLaw::AtomMixture(AtomMixtureLaw {
            base: flat,
            atom_x: k_max_at,
            atom_weight: weight,
        });
        law.validate()?;
        Ok((
            law,
            CenteringCase::NegativeAtom {
                x: k_max_at,
                weight,
            },
        ))
    }
}

/// Parameters of the full construction.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleParams {
    pub alpha: f64,
    pub beta0: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    /// Flattening cut; `None` picks the smallest grid point with tail <= 0.9.
    pub c: Option<f64>,
    /// Kernel k1 coefficients (polynomial in the mid-CDF); `None` = FGM.
    pub kernel1: Option<Vec<f64>>,
}

impl CounterexampleParams {
    pub fn defaults() -> Self {
        Self {
            alpha: 2.0,
            beta0: std::f64::consts::PI,
            a: 0.5,
            b: 0.3,
            theta: 0.0,
            c: None,
            kernel1: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleDiagnostics {
    /// |twisted Mellin of G at (alpha, beta0)|; below [`MELLIN_ZERO_TOL`].
    pub mellin_zero_modulus: f64,
    /// |int k1 dF| for the final F; below [`CENTERING_TOL`].
    pub centering_integral: f64,
    /// Total masses of the three stage laws (all 1 within tolerance).
    pub mass_f_tilde: f64,
    pub mass_f1: f64,
    pub mass_f: f64,
    /// Coefficient kappa of the leading x^-alpha factor of F's tail.
    pub pareto_coefficient: f64,
    /// kappa * E[Y_theta^alpha]: the limit of x^alpha * conv tail.
    pub limit_constant: f64,
}

/// The assembled construction with its stage laws and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleBundle {
    pub params: CounterexampleParams,
    /// Flattening cut actually used.
    pub c: f64,
    pub g: UnivariateLaw,
    /// Twisted marginal G_theta (equals `g` when theta = 0).
    pub g_twisted: UnivariateLaw,
    pub f_tilde: UnivariateLaw,
    pub f1: UnivariateLaw,
    pub f: UnivariateLaw,
    #[serde(flatten)]
    pub case: CenteringCase,
    pub diagnostics: CounterexampleDiagnostics,
}

/// Cross-law integral int k1 dLaw where k1 is bound to the mid-CDF of a
/// *different* law (the flattened stage). Quadrature plus exact atom sums.
fn kernel_integral_against(
    target: &UnivariateLaw,
    kernel_base: &UnivariateLaw,
    kernel: &Kernel,
) -> Result<f64> {
    let (v, _err) = crate::dist::integrate_against(
        target,
        |x| Complex64::new(kernel.eval(kernel_base, x), 0.0),
        f64::NEG_INFINITY,
        &[],
        1e-12,
    )?;
    Ok(v.re)
}

/// Build the full pipeline from parameters.
pub fn build_bundle(params: CounterexampleParams) -> Result<CounterexampleBundle> {
    let CounterexampleParams {
        alpha,
        beta0,
        a,
        b,
        theta,
        c,
        ref kernel1,
    } = params;

    let g = build_vanishing_mellin_law_fgm(alpha, beta0, theta)?;
    let g_twisted = if theta == 0.0 {
        g.clone()
    } else {
        // FGM kernel on the two-atom law, evaluated at the mid-CDF; d1 = -1.
        match &g {
            UnivariateLaw::TwoAtom { y1, p1, y2 } => {
                let mult1 = 1.0 - theta * (1.0 - p1);
                UnivariateLaw::two_atom(*y1, p1 * mult1, *y2)?
            }
            _ => unreachable!("vanishing-Mellin law is two-atom by construction"),
        }
    };

    let f_tilde = build_oscillating_law(alpha, beta0, a, b)?;

    let c = match c {
        Some(c) => c,
        None => {
            // Smallest grid point with tail <= 0.9.
            let mut chosen = None;
            for x in numeric::log_grid(1.0, 100.0, 2048) {
                if x > 1.0 && f_tilde.tail(x)? <= 0.9 {
                    chosen = Some(x);
                    break;
                }
            }
            chosen.ok_or_else(|| Error::Numerical("no flattening cut found".into()))?
        }
    };
    let f1 = flatten_below(&f_tilde, c)?;

    let kernel = match kernel1 {
        Some(coeffs) => Kernel::from_coeffs(coeffs.clone())?,
        None => Kernel::fgm(),
    };
    let (f, case) = center_kernel(&f1, &kernel)?;

    // Diagnostics and invariants.
    let s0 = Complex64::new(alpha, beta0);
    let mellin_zero_modulus = g_twisted.fractional_moment(s0)?.value.norm();
    if mellin_zero_modulus >= MELLIN_ZERO_TOL {
        return Err(Error::Construction(format!(
            "constructed Mellin zero has modulus {mellin_zero_modulus}"
        )));
    }
    let centering_integral = kernel_integral_against(&f, &f1, &kernel)?.abs();
    if centering_integral >= CENTERING_TOL {
        return Err(Error::Construction(format!(
            "centering integral {centering_integral} exceeds {CENTERING_TOL}"
        )));
    }
    let mass = |law: &UnivariateLaw| -> Result<f64> {
        Ok(law.fractional_moment(Complex64::new(0.0, 0.0))?.value.re)
    };
    let kappa = f
        .pareto_coefficient()
        .ok_or_else(|| Error::Numerical("final law has no Pareto coefficient".into()))?;
    let limit_constant = kappa * g_twisted.real_moment(alpha)?;

    let diagnostics = CounterexampleDiagnostics {
        mellin_zero_modulus,
        centering_integral,
        mass_f_tilde: mass(&f_tilde)?,
        mass_f1: mass(&f1)?,
        mass_f: mass(&f)?,
        pareto_coefficient: kappa,
        limit_constant,
    };

    Ok(CounterexampleBundle {
        params,
        c,
        g,
        g_twisted,
        f_tilde,
        f1,
        f,
        case,
        diagnostics,
    })
}

/// One row of the demonstration table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DemoRow {
    pub x: f64,
    /// (F conv G_theta) tail at x.
    pub conv_tail: f64,
    pub f_tail: f64,
    /// conv(2x)/conv(x): converges to 2^-alpha.
    pub conv_ratio2: f64,
    /// F tail ratio at scale 2: keeps oscillating.
    pub f_ratio2: f64,
    /// x^alpha * conv(x): approaches the limit constant.
    pub x_alpha_conv: f64,
}

/// Demonstration report: the product convolution is regularly varying
/// while F itself is not, measured by the same scale-2 ratio statistic.
#[derive(Debug, Clone, Serialize)]
pub struct DemonstrationReport {
    pub rows: Vec<DemoRow>,
    /// conv(2x)/conv(x) at the top of the grid.
    pub product_ratio_at_top: f64,
    /// max - min of the F ratio across the grid.
    pub f_ratio_amplitude: f64,
    /// x^alpha conv(x) at the top of the grid.
    pub limit_constant_at_top: f64,
    /// Target kappa * E[Y_theta^alpha].
    pub target_constant: f64,
}

/// Evaluate the contrast on a threshold grid (convolution against the
/// atomic G_theta is an exact sum, so no quadrature error enters).
pub fn demonstrate(bundle: &CounterexampleBundle, x_grid: &[f64]) -> Result<DemonstrationReport> {
    if x_grid.len() < 2 {
        return Err(Error::Domain("need at least two grid points".into()));
    }
    let alpha = bundle.params.alpha;
    let rho = ProductMeasure::Law(bundle.g_twisted.clone());
    let conv = |x: f64| -> Result<f64> { Ok(mult_convolution_tail(&bundle.f, &rho, x)?.value) };

    let mut rows = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let conv_tail = conv(x)?;
        let conv2 = conv(2.0 * x)?;
        let f_tail = bundle.f.tail(x)?;
        let f_tail2 = bundle.f.tail(2.0 * x)?;
        rows.push(DemoRow {
            x,
            conv_tail,
            f_tail,
            conv_ratio2: conv2 / conv_tail,
            f_ratio2: f_tail2 / f_tail,
            x_alpha_conv: x.powf(alpha) * conv_tail,
        });
    }
    let top = rows.last().unwrap();
    let f_ratio_amplitude = rows
        .iter()
        .map(|r| r.f_ratio2)
        .fold(f64::NEG_INFINITY, f64::max)
        - rows.iter().map(|r| r.f_ratio2).fold(f64::INFINITY, f64::min);
    Ok(DemonstrationReport {
        product_ratio_at_top: top.conv_ratio2,
        f_ratio_amplitude,
        limit_constant_at_top: top.x_alpha_conv,
        target_constant: bundle.diagnostics.limit_constant,
        rows,
    })
}
