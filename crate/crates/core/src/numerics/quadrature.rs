use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{QtoaError, Result};

/// Cap on the number of adaptive bisections before giving up.
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 4000;

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Scalars the integrators can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    /// `[a, ∞)`
    UpperInfinite(f64),
    /// `(-∞, b]`
    LowerInfinite(f64),
    /// `(-∞, ∞)`
    Whole,
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T: QuadValue>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).magnitude())
}

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval.
fn adaptive<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    tol: f64,
    max_subdivisions: usize,
) -> Result<QuadratureResult<T>> {
    let mut heap = BinaryHeap::new();
    let (v, e) = kronrod(&mut f, a, b);
    let mut evaluations = 15;
    let mut total = v;
    let mut total_err = e;
    heap.push(Segment { a, b, value: v, error: e });
    let mut splits = 0;
    while total_err > tol {
        if !total.is_finite_value() {
            return Err(QtoaError::numerical("non-finite integrand", f64::NAN, f64::INFINITY));
        }
        if splits >= max_subdivisions {
            return Err(QtoaError::numerical("adaptive quadrature did not converge", total.magnitude(), total_err));
        }
        let seg = heap.pop().expect("heap never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval collapsed to machine resolution; accept what we have.
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod(&mut f, seg.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, seg.b);
        evaluations += 30;
        total = total - seg.value + v1 + v2;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        splits += 1;
    }
    // Resum from the leaves to shed accumulated cancellation in the running totals.
    let mut value = T::zero();
    let mut error = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        error += s.error;
    }
    if !value.is_finite_value() {
        return Err(QtoaError::numerical("non-finite integrand", f64::NAN, f64::INFINITY));
    }
    Ok(QuadratureResult { value, error_estimate: error, evaluations })
}

/// Integrates `f` over `domain` to absolute tolerance `tol`.
///
/// Unbounded domains are mapped onto finite ones: `x = t/(1-t²)` for the whole
/// line and `x = a ± t/(1-t)` for half-lines.
pub fn integrate<T: QuadValue>(f: impl Fn(f64) -> T, domain: Domain, tol: f64) -> Result<QuadratureResult<T>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(QtoaError::invalid("quadrature tolerance must be positive"));
    }
    let guard = |x: f64, w: f64, f: &dyn Fn(f64) -> T| if w == 0.0 || !x.is_finite() { T::zero() } else { f(x) * w };
    match domain {
        Domain::Finite(a, b) => {
            if !(a.is_finite() && b.is_finite()) {
                return Err(QtoaError::invalid("finite domain needs finite endpoints"));
            }
            if a == b {
                return Ok(QuadratureResult { value: T::zero(), error_estimate: 0.0, evaluations: 1 });
            }
            if a > b {
                let r = adaptive(&f, b, a, tol, DEFAULT_MAX_SUBDIVISIONS)?;
                return Ok(QuadratureResult { value: r.value * -1.0, ..r });
            }
            adaptive(&f, a, b, tol, DEFAULT_MAX_SUBDIVISIONS)
        }
        Domain::Whole => adaptive(
            |t: f64| {
                let d = 1.0 - t * t;
                guard(t / d, (1.0 + t * t) / (d * d), &f)
            },
            -1.0,
            1.0,
            tol,
            DEFAULT_MAX_SUBDIVISIONS,
        ),
        Domain::UpperInfinite(a) => adaptive(
            |t: f64| {
                let d = 1.0 - t;
                guard(a + t / d, 1.0 / (d * d), &f)
            },
            0.0,
            1.0,
            tol,
            DEFAULT_MAX_SUBDIVISIONS,
        ),
        Domain::LowerInfinite(b) => adaptive(
            |t: f64| {
                let d = 1.0 - t;
                guard(b - t / d, 1.0 / (d * d), &f)
            },
            0.0,
            1.0,
            tol,
            DEFAULT_MAX_SUBDIVISIONS,
        ),
    }
}

/// Integrates `g(x) e^{iκx}` over `domain`.
///
/// Integrates one segment into the accumulator and returns its magnitude.
type SegmentRule<'a> = dyn FnMut(&mut QuadratureResult<Complex64>, f64, f64, f64) -> Result<f64> + 'a;

/// The domain is cut into segments of length at most `π/|κ|`, each handled by
/// the adaptive rule. Unbounded sides are marched outward segment by segment
/// until the amplitude has decayed; `g` must vanish at infinity.
pub fn integrate_oscillatory(
    g: impl Fn(f64) -> Complex64,
    kappa: f64,
    domain: Domain,
    tol: f64,
) -> Result<QuadratureResult<Complex64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(QtoaError::invalid("quadrature tolerance must be positive"));
    }
    if !kappa.is_finite() {
        return Err(QtoaError::invalid("oscillation frequency must be finite"));
    }
    let h = if kappa == 0.0 { 1.0 } else { (PI / kappa.abs()).min(1.0) };
    let f = |x: f64| g(x) * Complex64::from_polar(1.0, kappa * x);
    let mut acc = QuadratureResult { value: Complex64::new(0.0, 0.0), error_estimate: 0.0, evaluations: 0 };
    let mut add = |acc: &mut QuadratureResult<Complex64>, a: f64, b: f64, seg_tol: f64| -> Result<f64> {
        let r = adaptive(&f, a, b, seg_tol, DEFAULT_MAX_SUBDIVISIONS)?;
        acc.value += r.value;
        acc.error_estimate += r.error_estimate;
        acc.evaluations += r.evaluations;
        Ok(r.value.norm())
    };

    let finite_part = |acc: &mut QuadratureResult<Complex64>, add: &mut SegmentRule, a: f64, b: f64| -> Result<()> {
        let n = (((b - a) / h).ceil() as usize).max(1);
        let step = (b - a) / n as f64;
        let seg_tol = tol / (4.0 * n as f64);
        for i in 0..n {
            let lo = a + step * i as f64;
            let hi = if i + 1 == n { b } else { lo + step };
            add(acc, lo, hi, seg_tol)?;
        }
        Ok(())
    };

    // March outward from `start` in direction `dir` until the amplitude dies.
    let march = |acc: &mut QuadratureResult<Complex64>, add: &mut SegmentRule, start: f64, dir: f64| -> Result<()> {
        const MAX_SEGMENTS: usize = 1_000_000;
        let seg_tol = tol * 1e-3;
        let mut quiet = 0;
        for i in 0..MAX_SEGMENTS {
            let a = start + dir * h * i as f64;
            let b = a + dir * h;
            let (lo, hi) = if dir > 0.0 { (a, b) } else { (b, a) };
            let part = add(acc, lo, hi, seg_tol)?;
            let edge = g(b).norm();
            if part < seg_tol && edge * h < seg_tol {
                quiet += 1;
                if quiet >= 8 {
                    return Ok(());
                }
            } else {
                quiet = 0;
            }
        }
        Err(QtoaError::numerical("oscillatory tail did not decay", acc.value.norm(), f64::INFINITY))
    };

    match domain {
        Domain::Finite(a, b) => {
            if a == b {
                return Ok(QuadratureResult { value: Complex64::new(0.0, 0.0), error_estimate: 0.0, evaluations: 1 });
            }
            let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
            finite_part(&mut acc, &mut add, lo, hi)?;
            acc.value *= sign;
        }
        Domain::UpperInfinite(a) => march(&mut acc, &mut add, a, 1.0)?,
        Domain::LowerInfinite(b) => march(&mut acc, &mut add, b, -1.0)?,
        Domain::Whole => {
            march(&mut acc, &mut add, 0.0, 1.0)?;
            march(&mut acc, &mut add, 0.0, -1.0)?;
        }
    }
    if acc.error_estimate > tol {
        return Err(QtoaError::numerical(
            "oscillatory quadrature exceeded tolerance",
            acc.value.norm(),
            acc.error_estimate,
        ));
    }
    Ok(acc)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&t, &w)| (c + h * t, h * w))
    }
}

/// `n`-point Gauss-Legendre rule by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n > 1 { n as f64 * (x * p1 - p0) / (x * x - 1.0) } else { 1.0 };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_moment, standard_normal_density};

    #[test]
    fn normal_density_integrates_to_one() {
        let r = integrate(standard_normal_density, Domain::Whole, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.error_estimate <= 1e-10 && r.evaluations > 0);
    }

    #[test]
    fn sqrt_density_gradient() {
        // d/dx √Φ̃ = -x/2 √Φ̃, so the square integrates to E[x²]/4 = 1/4.
        let f = |x: f64| 0.25 * x * x * standard_normal_density(x);
        let r = integrate(f, Domain::Whole, 1e-10).unwrap();
        assert!((r.value - 0.25).abs() < 1e-10);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let r = integrate(|x: f64| x * standard_normal_density(x), Domain::Whole, 1e-10).unwrap();
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn half_lines_and_reversed_interval() {
        let up = integrate(standard_normal_density, Domain::UpperInfinite(0.0), 1e-11).unwrap();
        let lo = integrate(standard_normal_density, Domain::LowerInfinite(0.0), 1e-11).unwrap();
        assert!((up.value - 0.5).abs() < 1e-10 && (lo.value - 0.5).abs() < 1e-10);
        let rev = integrate(|x: f64| x, Domain::Finite(1.0, 0.0), 1e-12).unwrap();
        assert!((rev.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn moments_match_table() {
        for k in 0..=16usize {
            let r = integrate(|x: f64| x.powi(k as i32) * standard_normal_density(x), Domain::Whole, 1e-11).unwrap();
            let m = gaussian_moment(k).unwrap();
            assert!((r.value - m).abs() < 1e-9 * (1.0 + m), "k={k}: {} vs {m}", r.value);
        }
    }

    #[test]
    fn oscillatory_gaussian_transform() {
        let g = |x: f64| Complex64::new(standard_normal_density(x), 0.0);
        let r0 = integrate_oscillatory(g, 0.0, Domain::Whole, 1e-10).unwrap();
        assert!((r0.value.re - 1.0).abs() < 1e-10 && r0.value.im.abs() < 1e-10);
        let r = integrate_oscillatory(g, 10.0, Domain::Whole, 1e-10).unwrap();
        assert!((r.value.norm() - (-50.0f64).exp()).abs() < 1e-10);
        let r = integrate_oscillatory(g, 3.0, Domain::Whole, 1e-12).unwrap();
        assert!((r.value.re - (-4.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn full_period_vanishes() {
        let k = 5.0;
        let r =
            integrate_oscillatory(|_| Complex64::new(1.0, 0.0), k, Domain::Finite(0.0, 2.0 * PI / k), 1e-12).unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 20] {
            let gl = gauss_legendre(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * n - 1;
            let s: f64 = gl.mapped(0.0, 1.0).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((s - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(integrate(|x: f64| x, Domain::Finite(0.0, 1.0), 0.0).is_err());
    }
}
