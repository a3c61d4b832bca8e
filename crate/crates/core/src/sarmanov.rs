//! The bivariate Sarmanov model: joint laws of the form
//! `(1 + theta * k1(x) * k2(y)) F(dx) G(dy)` with centred, bounded kernels.
//!
//! Kernels come from a parametric menu: polynomials in the marginal
//! mid-CDF, `k(x) = p(u)` with `u = 1 - (tail(x) + tail_left(x))/2`. The
//! FGM kernel is the special case `p(u) = 1 - 2u`; evaluating at the
//! mid-CDF keeps it exactly centred even on atomic marginals. General
//! coefficient vectors are validated numerically.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{ComplexMoment, Law, UnivariateLaw};
use crate::error::{Error, Result};
use crate::numeric;

/// Tolerance for the centred-kernel checks E[k(Z)] = 0.
pub const CENTERING_TOL: f64 = 1e-9;

/// Named kernel menu as it appears in model JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// Farlie-Gumbel-Morgenstern: k_i = 1 - 2 * (marginal mid-CDF).
    Fgm,
    /// Polynomials in the marginal mid-CDF, one coefficient vector per side
    /// (constant term first).
    CdfPoly { p1: Vec<f64>, p2: Vec<f64> },
}

/// A kernel bound to no particular marginal: a polynomial in the mid-CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    coeffs: Vec<f64>,
}

impl Kernel {
    pub fn fgm() -> Self {
        Self {
            coeffs: vec![1.0, -2.0],
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "kernel coefficients must be a non-empty finite vector".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// p(u) by Horner evaluation.
    pub fn eval_u(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    /// P(u) = int_0^u p, the antiderivative with P(0) = 0.
    pub fn antiderivative(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * u + c / (j as f64 + 1.0);
        }
        acc * u
    }

    /// Kernel value at x under the given marginal.
    pub fn eval<L: Law + ?Sized>(&self, law: &L, x: f64) -> f64 {
        let t = law.tail(x).unwrap_or(if x > 0.0 { 0.0 } else { 1.0 });
        let tl = law.tail_left(x).unwrap_or(t);
        self.eval_u(1.0 - 0.5 * (t + tl))
    }

    /// Limit of the kernel at +infinity.
    pub fn limit_d1(&self) -> f64 {
        self.eval_u(1.0)
    }

    /// Tight upper bound for sup |p| on [0, 1].
    pub fn sup_bound(&self) -> f64 {
        let n = 4096;
        let mut best = 0.0f64;
        let mut best_u = 0.0;
        for i in 0..=n {
            let u = i as f64 / n as f64;
            let v = self.eval_u(u).abs();
            if v > best {
                best = v;
                best_u = u;
            }
        }
        let lo = (best_u - 1.0 / n as f64).max(0.0);
        let hi = (best_u + 1.0 / n as f64).min(1.0);
        let (_, neg_max) = numeric::golden_section_min(|u| -self.eval_u(u).abs(), lo, hi, 1e-13);
        best.max(-neg_max)
    }
}

impl KernelSpec {
    pub fn kernels(&self) -> Result<(Kernel, Kernel)> {
        match self {
            Self::Fgm => Ok((Kernel::fgm(), Kernel::fgm())),
            Self::CdfPoly { p1, p2 } => {
                Ok((Kernel::from_coeffs(p1.clone())?, Kernel::from_coeffs(p2.clone())?))
            }
        }
    }
}

/// Exact integral of the kernel over the upper tail: int_(x,inf) k dLaw.
///
/// Uses the CDF substitution on the continuous part (the antiderivative of
/// the polynomial) and exact sums over atoms, so no quadrature is involved.
pub fn kernel_tail_integral<L: Law + ?Sized>(law: &L, kernel: &Kernel, x: f64) -> Result<f64> {
    let fx = law.cdf(x)?;
    let mut total = kernel.antiderivative(1.0) - kernel.antiderivative(fx);
    for (a, m) in law.atoms() {
        if a > x {
            let f_right = law.cdf(a)?;
            let f_left = 1.0 - law.tail_left(a)?;
            // Remove the jump's share of the u-integral, add the atom term.
            total -= kernel.antiderivative(f_right) - kernel.antiderivative(f_left);
            total += m * kernel.eval_u(0.5 * (f_right + f_left));
        }
    }
    Ok(total)
}

/// E[k(Z) Z^s]: quadrature over the continuous part, exact sums over atoms.
pub fn kernel_moment<L: Law + ?Sized>(
    law: &L,
    kernel: &Kernel,
    s: Complex64,
) -> Result<ComplexMoment> {
    let (lo, hi) = law.support();
    let splits = oscillation_splits(lo.max(1e-8), if hi.is_finite() { hi } else { 1e12 }, s.im);
    let (value, abs_error) = crate::dist::integrate_against(
        law,
        |y| Complex64::new(y, 0.0).powc(s) * kernel.eval(law, y),
        f64::NEG_INFINITY,
        &splits,
        1e-12,
    )?;
    Ok(ComplexMoment { value, abs_error })
}

/// Half-period split points exp(k*pi/|beta|) of cos(beta * ln y) in (lo, hi).
pub(crate) fn oscillation_splits(lo: f64, hi: f64, beta: f64) -> Vec<f64> {
    let beta = beta.abs();
    if beta < 1e-9 || lo <= 0.0 || hi <= lo {
        return Vec::new();
    }
    let step = std::f64::consts::PI / beta;
    let mut splits = Vec::new();
    let mut k = (hi.ln() / step).floor();
    while splits.len() < 512 {
        let x = (k * step).exp();
        if x <= lo {
            break;
        }
        if x < hi {
            splits.push(x);
        }
        k -= 1.0;
    }
    splits.reverse();
    splits
}

/// One validated invariant with its measured slack.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub pass: bool,
    pub slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Report listing each model invariant with pass/fail and measured slack.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub model_valid: bool,
}

/// JSON form of a model: {"F": law, "G": law, "kernel": ..., "theta": r}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "F")]
    pub f: UnivariateLaw,
    #[serde(rename = "G")]
    pub g: UnivariateLaw,
    pub kernel: KernelSpec,
    pub theta: f64,
}

impl ModelSpec {
    pub fn build(&self) -> Result<SarmanovModel> {
        SarmanovModel::new(self.f.clone(), self.g.clone(), self.kernel.clone(), self.theta)
    }
}

/// The bivariate Sarmanov model with derived kernel bounds and limit.
#[derive(Debug, Clone)]
pub struct SarmanovModel {
    f: UnivariateLaw,
    g: UnivariateLaw,
    spec: KernelSpec,
    kernel1: Kernel,
    kernel2: Kernel,
    theta: f64,
    b1: f64,
    b2: f64,
    d1: f64,
    valid: bool,
    report: ValidationReport,
}

impl SarmanovModel {
    pub fn new(f: UnivariateLaw, g: UnivariateLaw, spec: KernelSpec, theta: f64) -> Result<Self> {
        f.validate()?;
        g.validate()?;
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be finite, got {theta}")));
        }
        if g.support().0 < 0.0 {
            return Err(Error::InvalidParameter(
                "financial risk marginal G must be supported in (0, inf)".into(),
            ));
        }
        let (kernel1, kernel2) = spec.kernels()?;
        let b1 = kernel1.sup_bound();
        let b2 = kernel2.sup_bound();
        let d1 = kernel1.limit_d1();
        let mut model = Self {
            f,
            g,
            spec,
            kernel1,
            kernel2,
            theta,
            b1,
            b2,
            d1,
            valid: false,
            report: ValidationReport {
                checks: Vec::new(),
                model_valid: false,
            },
        };
        let report = model.run_validation()?;
        model.valid = report.model_valid;
        model.report = report;
        Ok(model)
    }

    pub fn fgm(f: UnivariateLaw, g: UnivariateLaw, theta: f64) -> Result<Self> {
        Self::new(f, g, KernelSpec::Fgm, theta)
    }

    /// FGM kernels and their structural constants for the given marginals.
    pub fn fgm_kernels(_f: &UnivariateLaw, _g: &UnivariateLaw) -> (Kernel, Kernel, f64, f64, f64) {
        let k = Kernel::fgm();
        (k.clone(), k, 1.0, 1.0, -1.0)
    }

    pub fn f(&self) -> &UnivariateLaw {
        &self.f
    }
    pub fn g(&self) -> &UnivariateLaw {
        &self.g
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn kernel1(&self) -> &Kernel {
        &self.kernel1
    }
    pub fn kernel2(&self) -> &Kernel {
        &self.kernel2
    }
    pub fn bounds(&self) -> (f64, f64) {
        (self.b1, self.b2)
    }
    pub fn d1(&self) -> f64 {
        self.d1
    }
    pub fn kernel_spec(&self) -> &KernelSpec {
        &self.spec
    }
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    pub fn spec_json(&self) -> ModelSpec {
        ModelSpec {
            f: self.f.clone(),
            g: self.g.clone(),
            kernel: self.spec.clone(),
            theta: self.theta,
        }
    }

    /// The stored validation report (computed at construction).
    pub fn validate(&self) -> &ValidationReport {
        &self.report
    }

    fn run_validation(&self) -> Result<ValidationReport> {
        let mut checks = Vec::new();
        let inactive = self.theta == 0.0;
        let note = |pass: bool| {
            if inactive && !pass {
                Some("kernel check inactive at theta = 0 (factor is identically 1)".to_string())
            } else {
                None
            }
        };

        let c1 = kernel_moment(&self.f, &self.kernel1, Complex64::new(0.0, 0.0))?;
        let pass1 = c1.value.norm() <= CENTERING_TOL;
        checks.push(ValidationCheck {
            name: "kernel1_centered".into(),
            pass: pass1 || inactive,
            slack: c1.value.norm(),
            note: note(pass1),
        });
        let c2 = kernel_moment(&self.g, &self.kernel2, Complex64::new(0.0, 0.0))?;
        let pass2 = c2.value.norm() <= CENTERING_TOL;
        checks.push(ValidationCheck {
            name: "kernel2_centered".into(),
            pass: pass2 || inactive,
            slack: c2.value.norm(),
            note: note(pass2),
        });

        let (min_factor, sup_k1, sup_k2) = self.grid_extremes()?;
        checks.push(ValidationCheck {
            name: "factor_nonneg".into(),
            pass: min_factor >= -1e-12,
            slack: min_factor,
            note: None,
        });
        checks.push(ValidationCheck {
            name: "kernel1_bounded".into(),
            pass: sup_k1 <= self.b1 + 1e-9,
            slack: self.b1 - sup_k1,
            note: None,
        });
        checks.push(ValidationCheck {
            name: "kernel2_bounded".into(),
            pass: sup_k2 <= self.b2 + 1e-9,
            slack: self.b2 - sup_k2,
            note: None,
        });

        // Evaluate just beyond the deep quantile so a top atom of F does
        // not mask the limiting kernel value.
        let far = self.f.quantile(1.0 - 1e-10)? * (1.0 + 1e-9) + 1e-9;
        let d1_err = (self.kernel1.eval(&self.f, far) - self.d1).abs();
        checks.push(ValidationCheck {
            name: "d1_limit".into(),
            pass: d1_err <= 1e-6,
            slack: d1_err,
            note: None,
        });

        let model_valid = checks.iter().all(|c| c.pass);
        Ok(ValidationReport {
            checks,
            model_valid,
        })
    }

    /// Dense-grid extremes of the density factor and kernel magnitudes.
    fn grid_extremes(&self) -> Result<(f64, f64, f64)> {
        let mut probs: Vec<f64> = Vec::new();
        probs.push(1e-9);
        probs.push(1e-6);
        for i in 1..200 {
            probs.push(i as f64 / 200.0);
        }
        probs.push(1.0 - 1e-6);
        probs.push(1.0 - 1e-9);

        let mut k1_vals = Vec::new();
        for &p in &probs {
            k1_vals.push(self.kernel1.eval(&self.f, self.f.quantile(p)?));
        }
        for (a, _) in self.f.atoms() {
            k1_vals.push(self.kernel1.eval(&self.f, a));
        }
        let mut k2_vals = Vec::new();
        for &p in &probs {
            k2_vals.push(self.kernel2.eval(&self.g, self.g.quantile(p)?));
        }
        for (a, _) in self.g.atoms() {
            k2_vals.push(self.kernel2.eval(&self.g, a));
        }

        let sup1 = k1_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sup2 = k2_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // The factor is bilinear in (k1, k2), so its minimum over the grid
        // is attained at the extremes of each kernel range.
        let (k1_min, k1_max) = k1_vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let (k2_min, k2_max) = k2_vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let mut min_factor = f64::INFINITY;
        for k1 in [k1_min, k1_max] {
            for k2 in [k2_min, k2_max] {
                min_factor = min_factor.min(1.0 + self.theta * k1 * k2);
            }
        }
        Ok((min_factor, sup1, sup2))
    }

    /// The Sarmanov density factor 1 + theta k1(x) k2(y).
    pub fn joint_density_factor(&self, x: f64, y: f64) -> Result<f64> {
        let (flo, fhi) = self.f.support();
        let (glo, ghi) = self.g.support();
        if !(x >= flo && x <= fhi) || !(y >= glo && y <= ghi) {
            return Err(Error::Domain(format!(
                "({x}, {y}) outside the model supports [{flo}, {fhi}] x [{glo}, {ghi}]"
            )));
        }
        Ok(1.0 + self.theta * self.kernel1.eval(&self.f, x) * self.kernel2.eval(&self.g, y))
    }

    /// Draw one dependent pair (X, Y).
    ///
    /// Y comes from G by inversion; X given Y = y is drawn by rejection
    /// against F with envelope constant 1 + |theta| b1 b2, which dominates
    /// the conditional density factor, so the pair is exact in distribution.
    pub fn sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
        if !self.valid {
            return Err(Error::Construction(
                "model failed validation; see validate() report".into(),
            ));
        }
        Ok(self.sample_pair_unchecked(rng))
    }

    /// Sampling core without the validity gate; callers check once up front.
    #[inline]
    pub fn sample_pair_unchecked(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let y = self.g.sample_one(rng);
        if self.theta == 0.0 {
            return (self.f.sample_one(rng), y);
        }
        let k2y = self.kernel2.eval(&self.g, y);
        let envelope = 1.0 + self.theta.abs() * self.b1 * self.b2;
        loop {
            let x = self.f.sample_one(rng);
            let factor = 1.0 + self.theta * self.kernel1.eval(&self.f, x) * k2y;
            let u: f64 = rng.random();
            if u * envelope <= factor {
                return (x, y);
            }
        }
    }

    /// Like [`Self::sample_pair_unchecked`], counting rejection attempts.
    pub fn sample_pair_counted(&self, rng: &mut ChaCha8Rng, attempts: &mut u64) -> (f64, f64) {
        let y = self.g.sample_one(rng);
        if self.theta == 0.0 {
            *attempts += 1;
            return (self.f.sample_one(rng), y);
        }
        let k2y = self.kernel2.eval(&self.g, y);
        let envelope = 1.0 + self.theta.abs() * self.b1 * self.b2;
        loop {
            *attempts += 1;
            let x = self.f.sample_one(rng);
            let factor = 1.0 + self.theta * self.kernel1.eval(&self.f, x) * k2y;
            let u: f64 = rng.random();
            if u * envelope <= factor {
                return (x, y);
            }
        }
    }

    /// The twisted marginal G_theta(dy) = (1 + theta d1 k2(y)) G(dy).
    pub fn twist(&self) -> Result<TwistedLaw> {
        TwistedLaw::new(self.g.clone(), self.kernel2.clone(), self.theta * self.d1, self.b2)
    }

    /// Exact product tail `P[X Y > x]` via one-dimensional integration over G.
    ///
    /// Conditioning on Y = y gives
    /// `P[X > x/y | Y = y] = tail_F(x/y) + theta k2(y) K1(x/y)` with
    /// `K1(z) = int_(z,inf) k1 dF`, so the dependent product tail reduces to
    /// quadrature against G plus exact atom sums.
    pub fn product_tail_exact(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("threshold must be positive, got {x}")));
        }
        let f = &self.f;
        let k1 = &self.kernel1;
        let theta = self.theta;
        let flo = f.support().0;
        let split = if flo > 0.0 { vec![x / flo] } else { Vec::new() };
        let integrand = |y: f64| {
            let z = x / y;
            let base = f.tail(z).unwrap_or(0.0);
            let corr = if theta == 0.0 {
                0.0
            } else {
                theta
                    * self.kernel2.eval(&self.g, y)
                    * kernel_tail_integral(f, k1, z).unwrap_or(0.0)
            };
            Complex64::new(base + corr, 0.0)
        };
        let (v, _err) =
            crate::dist::integrate_against(&self.g, integrand, f64::NEG_INFINITY, &split, 1e-12)?;
        Ok(v.re.clamp(0.0, 1.0))
    }
}

/// The change-of-measure marginal `G_theta(dy) = (1 + theta d1 k2(y)) G(dy)`.
#[derive(Debug, Clone)]
pub struct TwistedLaw {
    base: UnivariateLaw,
    kernel: Kernel,
    theta_d1: f64,
    b2: f64,
}

impl TwistedLaw {
    pub fn new(base: UnivariateLaw, kernel: Kernel, theta_d1: f64, b2: f64) -> Result<Self> {
        if theta_d1.abs() * b2 > 1.0 + 1e-12 {
            return Err(Error::Construction(format!(
                "twist multiplier can go negative: |theta d1| b2 = {} > 1",
                theta_d1.abs() * b2
            )));
        }
        Ok(Self {
            base,
            kernel,
            theta_d1,
            b2,
        })
    }

    pub fn base(&self) -> &UnivariateLaw {
        &self.base
    }

    /// Density multiplier 1 + theta d1 k2(y).
    pub fn multiplier(&self, y: f64) -> f64 {
        1.0 + self.theta_d1 * self.kernel.eval(&self.base, y)
    }

    /// As a plain atomic law, when the base is purely atomic (exact).
    pub fn as_atomic(&self) -> Option<UnivariateLaw> {
        match self.base {
            UnivariateLaw::TwoAtom { y1, p1, y2 } => {
                let m1 = p1 * self.multiplier(y1);
                if p1 >= 1.0 {
                    return Some(UnivariateLaw::TwoAtom { y1, p1: 1.0, y2 });
                }
                Some(UnivariateLaw::TwoAtom { y1, p1: m1, y2 })
            }
            _ => None,
        }
    }
}

impl Law for TwistedLaw {
    fn support(&self) -> (f64, f64) {
        self.base.support()
    }

    fn tail(&self, x: f64) -> Result<f64> {
        let base_tail = self.base.tail(x)?;
        let corr = self.theta_d1 * kernel_tail_integral(&self.base, &self.kernel, x)?;
        Ok((base_tail + corr).clamp(0.0, 1.0))
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("p must lie in (0,1), got {p}")));
        }
        crate::dist::quantile_by_bisection(
            |x| self.tail(x).unwrap_or(0.0),
            self.base.support().0,
            p,
            &self.atoms(),
        )
    }

    fn density(&self, x: f64) -> f64 {
        self.base.density(x) * self.multiplier(x)
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.base
            .atoms()
            .into_iter()
            .map(|(a, m)| (a, m * self.multiplier(a)))
            .collect()
    }

    fn sample_one(&self, rng: &mut ChaCha8Rng) -> f64 {
        let envelope = 1.0 + self.theta_d1.abs() * self.b2;
        loop {
            let y = self.base.sample_one(rng);
            let u: f64 = rng.random();
            if u * envelope <= self.multiplier(y) {
                return y;
            }
        }
    }

    fn moment_strip(&self) -> (f64, f64) {
        self.base.moment_strip()
    }

    fn fractional_moment(&self, s: Complex64) -> Result<ComplexMoment> {
        let strip = self.moment_strip();
        if !(s.re > strip.0 && s.re < strip.1) {
            return Err(Error::DivergentMoment {
                re_s: s.re,
                strip_max: strip.1,
            });
        }
        // Single quadrature of y^s (1 + theta d1 k2(y)) against the base law.
        let (lo, hi) = self.base.support();
        let splits = oscillation_splits(lo.max(1e-8), if hi.is_finite() { hi } else { 1e12 }, s.im);
        let (value, abs_error) = crate::dist::integrate_against(
            &self.base,
            |y| Complex64::new(y, 0.0).powc(s) * self.multiplier(y),
            f64::NEG_INFINITY,
            &splits,
            1e-12,
        )?;
        Ok(ComplexMoment { value, abs_error })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc;

    fn fgm_model(theta: f64) -> SarmanovModel {
        SarmanovModel::fgm(
            UnivariateLaw::pareto(2.0, 1.0).unwrap(),
            UnivariateLaw::uniform01(),
            theta,
        )
        .unwrap()
    }

    #[test]
    fn fgm_kernels_structural_constants() {
        let f = UnivariateLaw::pareto(2.0, 1.0).unwrap();
        let g = UnivariateLaw::uniform01();
        let (k1, _k2, b1, b2, d1) = SarmanovModel::fgm_kernels(&f, &g);
        assert_eq!((b1, b2, d1), (1.0, 1.0, -1.0));
        // kernel2(y) = 1 - 2y for the uniform marginal
        assert!((k1.eval(&g, 0.25) - 0.5).abs() < 1e-15);
        assert!((k1.eval(&g, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn validate_passes_for_fgm_half() {
        let m = fgm_model(0.5);
        let report = m.validate();
        assert!(report.model_valid, "{report:?}");
        assert_eq!(report.checks.len(), 6);
    }

    #[test]
    fn validate_flags_nonnegativity_for_large_theta() {
        let m = SarmanovModel::fgm(
            UnivariateLaw::pareto(2.0, 1.0).unwrap(),
            UnivariateLaw::uniform01(),
            1.5,
        )
        .unwrap();
        let report = m.validate();
        assert!(!report.model_valid);
        let nn = report
            .checks
            .iter()
            .find(|c| c.name == "factor_nonneg")
            .unwrap();
        assert!(!nn.pass);
        // Corner value 1 - 1.5 * 1 * 1 = -0.5 up to grid resolution.
        assert!((nn.slack + 0.5).abs() < 1e-4, "min factor = {}", nn.slack);
        assert!(m.sample_pair(&mut mc::base_rng(0)).is_err());
    }

    #[test]
    fn theta_zero_passes_for_any_kernels() {
        // Degenerate F makes the FGM kernel uncentered, but theta = 0 keeps
        // the model a valid independence model.
        let m = SarmanovModel::fgm(
            UnivariateLaw::point_mass(1.0).unwrap(),
            UnivariateLaw::uniform01(),
            0.0,
        )
        .unwrap();
        assert!(m.validate().model_valid);
    }

    #[test]
    fn joint_density_factor_examples() {
        let m0 = fgm_model(0.0);
        assert_eq!(m0.joint_density_factor(3.0, 0.25).unwrap(), 1.0);
        let m = fgm_model(0.5);
        // Deep in both upper tails the kernels approach -1, so the factor
        // approaches 1 + 0.5 = 1.5.
        let x = m.f().quantile(1.0 - 1e-12).unwrap();
        let fac = m.joint_density_factor(x, 1.0 - 1e-12).unwrap();
        assert!((fac - 1.5).abs() < 1e-6, "factor = {fac}");
        // Kernels vanish at the medians.
        let x_med = m.f().quantile(0.5).unwrap();
        assert!((m.joint_density_factor(x_med, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(m.joint_density_factor(0.5, 0.5).is_err());
    }

    #[test]
    fn centred_kernel_integrals_vanish() {
        let m = fgm_model(0.5);
        let c1 = kernel_moment(m.f(), m.kernel1(), Complex64::new(0.0, 0.0)).unwrap();
        let c2 = kernel_moment(m.g(), m.kernel2(), Complex64::new(0.0, 0.0)).unwrap();
        assert!(c1.value.norm() < 1e-10);
        assert!(c2.value.norm() < 1e-10);
    }

    #[test]
    fn kernel_tail_integral_closed_form_for_fgm() {
        // For FGM on a continuous law, int_(z,inf) (1-2F) dF = -(1-F(z)) F(z).
        let f = UnivariateLaw::pareto(2.0, 1.0).unwrap();
        let k = Kernel::fgm();
        for z in [1.0, 1.5, 3.0, 10.0] {
            let got = kernel_tail_integral(&f, &k, z).unwrap();
            let tail = f.tail(z).unwrap();
            let expect = -tail * (1.0 - tail);
            assert!((got - expect).abs() < 1e-14, "z = {z}");
        }
    }

    #[test]
    fn twist_identity_at_theta_zero() {
        let m = fgm_model(0.0);
        let t = m.twist().unwrap();
        for x in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_eq!(
                t.tail(x).unwrap().to_bits(),
                m.g().tail(x).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn twist_density_and_mass_for_fgm_uniform() {
        // Multiplier 1 + 0.5*(-1)*(1-2y) = 0.5 + y on (0,1).
        let m = fgm_model(0.5);
        let t = m.twist().unwrap();
        for y in [0.1, 0.4, 0.9] {
            assert!((t.multiplier(y) - (0.5 + y)).abs() < 1e-14);
            assert!((t.density(y) - (0.5 + y)).abs() < 1e-14);
        }
        let mass = t.fractional_moment(Complex64::new(0.0, 0.0)).unwrap();
        assert!((mass.value.re - 1.0).abs() < 1e-11);
        // Twisted second moment: int_0^1 y^2 (0.5 + y) dy = 5/12.
        let m2 = t.fractional_moment(Complex64::new(2.0, 0.0)).unwrap();
        assert!((m2.value.re - 5.0 / 12.0).abs() < 1e-11);
    }

    #[test]
    fn twist_rejected_when_multiplier_negative() {
        // |theta d1| b2 = 1.4 > 1 for FGM with theta = 1.4 (invalid model,
        // and also an invalid twist).
        let m = SarmanovModel::fgm(
            UnivariateLaw::pareto(2.0, 1.0).unwrap(),
            UnivariateLaw::uniform01(),
            1.4,
        )
        .unwrap();
        assert!(m.twist().is_err());
    }

    #[test]
    fn independent_pairs_have_near_zero_grade_correlation() {
        let m = fgm_model(0.0);
        let n = 1_000_000u64;
        let sums = mc::mc_sums(&mc::McConfig::new(n, 31), |rng, out: &mut [f64; 3]| {
            let (x, y) = m.sample_pair_unchecked(rng);
            let u = 1.0 - m.f().tail(x).unwrap();
            let v = 1.0 - m.g().tail(y).unwrap();
            out[0] = u * v;
            out[1] = u;
            out[2] = v;
        });
        let nf = n as f64;
        let cov = sums[0] / nf - (sums[1] / nf) * (sums[2] / nf);
        let corr = cov * 12.0;
        let se = 1.0 / nf.sqrt();
        assert!(corr.abs() < 3.0 * se, "corr = {corr}");
    }

    #[test]
    fn fgm_grade_correlation_matches_double_integral_oracle() {
        // Oracle: E[UV] = int int uv (1 + theta (1-2u)(1-2v)) du dv by
        // midpoint double sum, giving cov = theta/36 and corr = theta/3.
        let theta = 0.5;
        let n_grid = 2000;
        let mut euv = 0.0;
        for i in 0..n_grid {
            let u = (i as f64 + 0.5) / n_grid as f64;
            for j in 0..n_grid {
                let v = (j as f64 + 0.5) / n_grid as f64;
                euv += u * v * (1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v));
            }
        }
        euv /= (n_grid * n_grid) as f64;
        let cov_oracle = euv - 0.25;
        let corr_oracle = cov_oracle * 12.0;
        assert!((corr_oracle - theta / 3.0).abs() < 1e-6);

        let m = fgm_model(theta);
        let n = 1_000_000u64;
        let sums = mc::mc_sums(&mc::McConfig::new(n, 37), |rng, out: &mut [f64; 3]| {
            let (x, y) = m.sample_pair_unchecked(rng);
            let u = 1.0 - m.f().tail(x).unwrap();
            let v = 1.0 - m.g().tail(y).unwrap();
            out[0] = u * v;
            out[1] = u;
            out[2] = v;
        });
        let nf = n as f64;
        let cov = sums[0] / nf - (sums[1] / nf) * (sums[2] / nf);
        let corr = cov * 12.0;
        let se = 1.0 / nf.sqrt();
        assert!(
            (corr - corr_oracle).abs() < 3.0 * se,
            "corr = {corr}, oracle = {corr_oracle}"
        );
    }

    #[test]
    fn acceptance_rate_at_least_inverse_envelope() {
        let m = fgm_model(0.5);
        let n = 200_000u64;
        let base = mc::base_rng(77);
        let mut attempts = 0u64;
        for i in 0..n {
            let mut rng = mc::sample_rng(&base, i);
            m.sample_pair_counted(&mut rng, &mut attempts);
        }
        let rate = n as f64 / attempts as f64;
        // Envelope ratio 1/(1 + |theta| b1 b2) = 2/3; the measured rate is
        // exactly that in expectation because the kernels are centred.
        assert!(rate >= 2.0 / 3.0 - 0.01, "rate = {rate}");
    }

    #[test]
    fn cdf_poly_menu_matches_fgm_and_flags_uncentered() {
        let f = UnivariateLaw::pareto(2.0, 1.0).unwrap();
        let g = UnivariateLaw::uniform01();
        let m = SarmanovModel::new(
            f.clone(),
            g.clone(),
            KernelSpec::CdfPoly {
                p1: vec![1.0, -2.0],
                p2: vec![1.0, -2.0],
            },
            0.5,
        )
        .unwrap();
        assert!(m.validate().model_valid);
        let bad = SarmanovModel::new(
            f,
            g,
            KernelSpec::CdfPoly {
                p1: vec![1.0, -2.0],
                p2: vec![0.5, -0.5], // integral 0.25 != 0
            },
            0.5,
        )
        .unwrap();
        let rep = bad.validate();
        assert!(!rep.model_valid);
        assert!(!rep.checks.iter().find(|c| c.name == "kernel2_centered").unwrap().pass);
    }

    #[test]
    fn product_tail_exact_matches_independence_identity() {
        // theta = 0: P[XY > x] = x^-2 E[Y^2] = x^-2/3 exactly for x >= 1.
        let m = fgm_model(0.0);
        for x in [1.0, 2.0, 5.0] {
            let got = m.product_tail_exact(x).unwrap();
            assert!((got - 1.0 / (3.0 * x * x)).abs() < 1e-10, "x = {x}");
        }
        // theta = 0.5: constant becomes 5/12.
        let m = fgm_model(0.5);
        for x in [2.0, 20.0] {
            let got = m.product_tail_exact(x).unwrap();
            let expect = 5.0 / 12.0 / (x * x) - 1.0 / (15.0 * x.powi(4));
            assert!((got - expect).abs() < 1e-10, "x = {x}: {got} vs {expect}");
        }
    }

    #[test]
    fn model_spec_json_round_trip() {
        let spec = ModelSpec {
            f: UnivariateLaw::pareto(2.0, 1.0).unwrap(),
            g: UnivariateLaw::uniform01(),
            kernel: KernelSpec::Fgm,
            theta: 0.5,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kernel\":\"fgm\""));
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let parsed: ModelSpec = serde_json::from_str(
            r#"{"F":{"family":"pareto","params":{"alpha":2.0,"xm":1.0}},
                "G":{"family":"uniform01"},
                "kernel":{"cdf_poly":{"p1":[1.0,-2.0],"p2":[1.0,-2.0]}},
                "theta":0.25}"#,
        )
        .unwrap();
        assert_eq!(parsed.theta, 0.25);
    }
}
