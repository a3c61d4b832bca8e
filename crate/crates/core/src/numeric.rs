//! Numerical workhorses: adaptive Gauss-Kronrod quadrature (real and
//! complex integrands), semi-infinite transforms, bisection and
//! golden-section search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half) with embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Values an adaptive integrator can accumulate: `f64` or `Complex64`.
pub trait IntegrandValue:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl IntegrandValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl IntegrandValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Result of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct Quad<V> {
    pub value: V,
    pub abs_error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 4096,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// One Gauss-Kronrod 15 step over [a, b]; returns (value, error estimate).
fn qk15<V: IntegrandValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> Result<(V, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |x: f64| -> Result<V> {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "integrand returned non-finite value at x = {x}"
            )));
        }
        Ok(v)
    };

    let f_center = eval(center)?;
    let mut kron = f_center * WGK[7];
    let mut gauss = f_center * WG[3];

    let mut values = [V::zero(); 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        values[2 * j] = eval(center - dx)?;
        values[2 * j + 1] = eval(center + dx)?;
        let sum = values[2 * j] + values[2 * j + 1];
        kron = kron + sum * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + sum * WG[j / 2];
        }
    }

    let value = kron * half;
    let raw_err = (kron - gauss).norm() * half.abs();
    // QUADPACK-style sharpening of the raw Gauss/Kronrod discrepancy.
    let mean = kron * 0.5;
    let mut resasc = (f_center - mean).norm() * WGK[7];
    for j in 0..7 {
        resasc += ((values[2 * j] - mean).norm() + (values[2 * j + 1] - mean).norm()) * WGK[j];
    }
    resasc *= half.abs();
    let error = if resasc != 0.0 && raw_err != 0.0 {
        resasc * (200.0 * raw_err / resasc).powf(1.5).min(1.0)
    } else {
        raw_err
    };
    Ok((value, error))
}

/// Adaptive Gauss-Kronrod integration of `f` over the finite interval [a, b].
pub fn integrate<V: IntegrandValue, F: Fn(f64) -> V>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Quad<V>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quad {
            value: V::zero(),
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    let (value, error) = qk15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_value = value;
    let mut total_error = error;
    let mut subdivisions = 0;

    while total_error > opts.abs_tol.max(opts.rel_tol * total_value.norm())
        && subdivisions < opts.max_subdivisions
    {
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; keep its estimate.
            heap.push(worst);
            break;
        }
        let (lv, le) = qk15(&f, worst.a, mid)?;
        let (rv, re) = qk15(&f, mid, worst.b)?;
        total_value = total_value - worst.value + lv + rv;
        total_error = total_error - worst.error + le + re;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
        subdivisions += 1;
    }

    // Recompute totals from the heap for a tight error sum.
    let mut value = V::zero();
    let mut abs_error = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        abs_error += s.error;
    }
    Ok(Quad {
        value,
        abs_error,
        subdivisions,
    })
}

/// Integrate over [a, b] splitting first at the supplied interior breakpoints.
pub fn integrate_with_breakpoints<V: IntegrandValue, F: Fn(f64) -> V>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<Quad<V>> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    pts.dedup();
    let mut lo = a;
    let mut value = V::zero();
    let mut abs_error = 0.0;
    let mut subdivisions = 0;
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol / (pts.len() + 1) as f64,
        ..opts
    };
    for hi in pts.into_iter().chain(std::iter::once(b)) {
        let q = integrate(&f, lo, hi, piece_opts)?;
        value = value + q.value;
        abs_error += q.abs_error;
        subdivisions += q.subdivisions;
        lo = hi;
    }
    Ok(Quad {
        value,
        abs_error,
        subdivisions,
    })
}

/// Integrate over the semi-infinite interval [a, inf) via x = a + (1-u)/u.
///
/// The integrand must decay fast enough for the transformed integral to be
/// proper; all laws in this crate have at least one finite positive moment,
/// which is sufficient.
pub fn integrate_to_inf<V: IntegrandValue, F: Fn(f64) -> V>(
    f: F,
    a: f64,
    opts: QuadOptions,
) -> Result<Quad<V>> {
    integrate(
        |u: f64| {
            let x = a + (1.0 - u) / u;
            f(x) * (1.0 / (u * u))
        },
        0.0,
        1.0,
        opts,
    )
}

/// Bisection on a sign change of `f` over [lo, hi].
///
/// Requires f(lo) and f(hi) of opposite (weak) signs. Stops when either the
/// bracket is narrower than `x_tol` or |f| at the midpoint is below `f_tol`.
pub fn bisect_root<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    f_tol: f64,
) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid.abs() <= f_tol || (hi - lo) <= x_tol {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimisation of a unimodal `f` on [a, b].
///
/// Returns (argmin, min). Runs until the bracket is below `x_tol` or 200
/// iterations.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Log-spaced grid with `n >= 2` points from `lo` to `hi`; the endpoints
/// are exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let llo = lo.ln();
    let lhi = hi.ln();
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Linearly spaced grid with `n >= 2` points from `lo` to `hi`; the
/// endpoints are exact.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi > lo && n >= 2);
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x * x, 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((q.value - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_converges() {
        // int_0^10 cos(20 x) dx = sin(200)/20
        let q = integrate(|x: f64| (20.0 * x).cos(), 0.0, 10.0, QuadOptions::default()).unwrap();
        assert!((q.value - (200.0f64).sin() / 20.0).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite_pareto_tail() {
        // int_2^inf 2 x^-3 dx = 1/4
        let q = integrate_to_inf(|x: f64| 2.0 * x.powi(-3), 2.0, QuadOptions::default()).unwrap();
        assert!((q.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        // int_0^1 y^(2+i*pi) dy = 1/(3+i*pi)
        let s = Complex64::new(2.0, std::f64::consts::PI);
        let q = integrate(
            |y: f64| Complex64::new(y, 0.0).powc(s),
            0.0,
            1.0,
            QuadOptions::default(),
        )
        .unwrap();
        let expect = 1.0 / Complex64::new(3.0, std::f64::consts::PI);
        assert!((q.value - expect).norm() < 1e-10);
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r - 2.0f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, v) = golden_section_min(|x| (x - 1.25) * (x - 1.25), 0.0, 3.0, 1e-12);
        assert!((x - 1.25).abs() < 1e-10);
        assert!(v < 1e-18);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let res = integrate(|x| 1.0 / x, -1.0, 1.0, QuadOptions::default());
        assert!(res.is_err());
    }
}
