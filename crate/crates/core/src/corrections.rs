//! Correction integrals of the ℏ-expansion, the truncated series, and the
//! exact expectation value used as its oracle.
//!
//! Normalisation: with `w(x) = x + u`, `u = q0/σ`,
//!
//! * `chi1_general(n) = (1/u) ∫ w |P_n|² Φ̃` (equals 1 at `n = 0`),
//! * `chi2_general(n) = ∫ w Im(P_{2n+1}) Φ̃`,
//!
//! and the series for `τ/τ_class` reads
//! `Σ chi1(n)/K^{2n} - (1/u) Σ (-1)^n chi2(n)/K^{2n+1}` with `K = kσ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QtoaError, Result};
use crate::numerics::{gauss_legendre, ComplexPolynomial, GaussLegendre};
use crate::wavepacket::{derivative_polynomials, PacketParams, PhaseSpec};

/// A term no larger than this multiple of its own rounding bound is treated
/// as exactly cancelled and cannot serve as a truncation point.
pub const CANCELLED_TERM_FACTOR: f64 = 2.0;
/// Default highest order scanned by super-asymptotic truncation.
pub const DEFAULT_MAX_ORDER: usize = 8;
/// Residual bound for the cancellation preconditions of [`q_wp`].
pub const CANCELLATION_TOLERANCE: f64 = 1e-8;

fn weight(u: f64) -> ComplexPolynomial {
    ComplexPolynomial::from_real(&[u, 1.0])
}

fn expect_re(p: &ComplexPolynomial) -> Result<f64> {
    Ok(p.gaussian_expectation()?.re)
}

fn require_u(u: f64) -> Result<()> {
    if u == 0.0 {
        return Err(QtoaError::DegenerateInput(
            "q0 = 0: the classical arrival time vanishes and the series normalisation is undefined".into(),
        ));
    }
    Ok(())
}

/// Parts of `∫ (x+u) |P_n|² Φ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chi1Components {
    /// `∫ |P_n|² Φ̃`, the unweighted form.
    pub density: f64,
    /// `∫ x |P_n|² Φ̃`.
    pub centered: f64,
}

impl Chi1Components {
    /// `∫ (x+u) |P_n|² Φ̃`.
    pub fn raw(&self, u: f64) -> f64 {
        self.centered + u * self.density
    }

    /// `raw / u`.
    pub fn normalized(&self, u: f64) -> f64 {
        self.density + self.centered / u
    }
}

pub fn chi1_components(spec: &PhaseSpec, n: usize) -> Result<Chi1Components> {
    let p = derivative_polynomials(spec, n).pop().expect("non-empty");
    let m = p.modulus_squared();
    Ok(Chi1Components { density: expect_re(&m)?, centered: expect_re(&(&ComplexPolynomial::x() * &m))? })
}

/// Fully weighted `χ̃₁⁽ⁿ⁾`, normalised by `u`.
pub fn chi1_general(n: usize, params: &PacketParams, spec: &PhaseSpec) -> Result<f64> {
    let u = params.u();
    require_u(u)?;
    Ok(chi1_components(spec, n)?.normalized(u))
}

/// `∫ |φ̃⁽ⁿ⁾|² dx` without the position weight.
pub fn chi1_printed(n: usize, spec: &PhaseSpec) -> Result<f64> {
    Ok(chi1_components(spec, n)?.density)
}

/// `χ̃₂⁽ⁿ⁾ = ∫ (x+u) Im(P_{2n+1}) Φ̃`.
pub fn chi2_general(n: usize, params: &PacketParams, spec: &PhaseSpec) -> Result<f64> {
    chi2_general_u(n, params.u(), spec)
}

pub(crate) fn chi2_general_u(n: usize, u: f64, spec: &PhaseSpec) -> Result<f64> {
    let p = derivative_polynomials(spec, 2 * n + 1).pop().expect("non-empty");
    expect_re(&(&weight(u) * &p.imag_part()))
}

/// Generic counterpart of the explicit formula of the given ℏ order, in the
/// same normalisation as [`chi_explicit`].
pub fn chi_generic_for_order(order: usize, params: &PacketParams, spec: &PhaseSpec) -> Result<f64> {
    match order {
        1 | 3 | 5 => chi2_general((order - 1) / 2, params, spec),
        2 | 4 | 6 => chi1_general(order / 2, params, spec),
        _ => Err(QtoaError::invalid(format!("explicit formulas exist for orders 1..=6, got {order}"))),
    }
}

/// `Q_n` with `(√Φ̃)⁽ⁿ⁾ = Q_n √Φ̃`.
fn sqrt_density_polynomials(n: usize) -> Vec<ComplexPolynomial> {
    let half_x = ComplexPolynomial::from_real(&[0.0, 0.5]);
    let mut out = vec![ComplexPolynomial::one()];
    for j in 0..n {
        let next = &out[j].derivative() - &(&half_x * &out[j]);
        out.push(next);
    }
    out
}

/// Closed expressions for the corrections of ℏ order 1 through 6 written
/// in terms of `θ'`, `θ''`, … and derivatives of `√Φ̃`.
///
/// Odd orders return `χ̃₂`, even orders `χ̃₁` normalised by `u`, matching
/// [`chi_generic_for_order`].
pub fn chi_explicit(order: usize, params: &PacketParams, spec: &PhaseSpec) -> Result<f64> {
    let u = params.u();
    if !(1..=6).contains(&order) {
        return Err(QtoaError::invalid(format!("explicit formulas exist for orders 1..=6, got {order}")));
    }
    if order.is_multiple_of(2) {
        require_u(u)?;
    }
    let w = weight(u);
    let t: Vec<ComplexPolynomial> = (0..=5)
        .map(|n| if n == 0 || spec.is_none() { ComplexPolynomial::zero() } else { spec.derivative_polynomial(n) })
        .collect();
    let q = sqrt_density_polynomials(3);
    let e = |p: ComplexPolynomial| expect_re(&(&w * &p));
    let pow = |p: &ComplexPolynomial, k: usize| (0..k).fold(ComplexPolynomial::one(), |acc, _| &acc * p);
    let (t1, t2, t3, t5) = (&t[1], &t[2], &t[3], &t[5]);
    let v = match order {
        1 => e(t1.clone())?,
        2 => e(pow(t1, 2))? + e(pow(&q[1], 2))?,
        3 => -e(pow(t1, 3))? + e(t3.clone())?,
        4 => e(pow(&q[2], 2))? + e(pow(t2, 2))? + e(pow(t1, 4))?,
        5 => e(t5.clone())? + e(pow(t1, 5))? - 10.0 * e(t3 * &pow(t1, 2))? - 15.0 * e(t1 * &pow(t2, 2))?,
        6 => {
            e(pow(&q[3], 2))? - 6.0 * e(&(t2 * t1) * &q[3])?
                + 9.0 * e(&pow(t2, 2) * &pow(t1, 2))?
                + e(pow(t3, 2))?
                + e(pow(t1, 6))?
                + 2.0 * e(t3 * &pow(t1, 3))?
        }
        _ => unreachable!(),
    };
    Ok(if order.is_multiple_of(2) { v / u } else { v })
}

/// Leading correction factor without phase, `(kσ)^{-2} ∫ ((√Φ̃)')² = 1/(4(kσ)²)`.
pub fn q_np(params: &PacketParams) -> f64 {
    q_np_k(params.k_sigma())
}

pub fn q_np_k(k_sigma: f64) -> f64 {
    let q1 = &sqrt_density_polynomials(1)[1];
    let grad = expect_re(&(q1 * q1)).expect("low-order moments are finite");
    grad / (k_sigma * k_sigma)
}

/// Residuals `(∫θ'Φ̃, χ̃₂⁽⁰⁾, ∫(x+u)|P_1|²Φ̃)` of the first two cancellation orders.
pub fn cancellation_residuals(u: f64, spec: &PhaseSpec) -> Result<[f64; 3]> {
    let p = derivative_polynomials(spec, 1);
    let tp = p[1].imag_part();
    let c1 = expect_re(&tp)?;
    let c2 = expect_re(&(&weight(u) * &tp))?;
    let c3 = expect_re(&(&weight(u) * &p[1].modulus_squared()))?;
    Ok([c1, c2, c3])
}

/// Leading correction factor with a phase cancelling orders 1 and 2:
/// `(σ/q0)(kσ)^{-3} ∫ (x+u)(θ''' - θ'³) Φ̃`.
pub fn q_wp(params: &PacketParams, spec: &PhaseSpec) -> Result<f64> {
    q_wp_k(params.k_sigma(), params.u(), spec)
}

pub fn q_wp_k(k_sigma: f64, u: f64, spec: &PhaseSpec) -> Result<f64> {
    require_u(u)?;
    let r = cancellation_residuals(u, spec)?;
    if r.iter().any(|v| v.abs() >= CANCELLATION_TOLERANCE) {
        return Err(QtoaError::InvalidPhase(format!(
            "phase does not cancel the first two corrections (residuals {:.3e}, {:.3e}, {:.3e})",
            r[0], r[1], r[2]
        )));
    }
    let t1 = spec.derivative_polynomial(1);
    let t3 = spec.derivative_polynomial(3);
    let integrand = &t3 - &(&(&t1 * &t1) * &t1);
    let chi = expect_re(&(&weight(u) * &integrand))?;
    Ok(chi / (u * k_sigma.powi(3)))
}

/// One term of `τ/τ_class`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub order_in_hbar: usize,
    pub value: f64,
}

/// Terms of the expansion together with where it was truncated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionSeries {
    pub terms: Vec<SeriesTerm>,
    /// Order of the smallest retained-or-first-omitted term that fixes the truncation.
    pub truncation_index: usize,
    /// Number of leading terms included in the sum.
    pub terms_summed: usize,
    /// Error bound for `τ/τ_class`: truncation part plus rounding floor.
    pub truncation_error_estimate: f64,
}

impl CorrectionSeries {
    pub fn partial_sum(&self) -> f64 {
        self.terms.iter().take(self.terms_summed).map(|t| t.value).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Stop at the smallest term among orders `1..=max_order`.
    Auto { max_order: usize },
    /// Sum orders `0..=order`.
    Fixed(usize),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Auto { max_order: DEFAULT_MAX_ORDER }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticToa {
    /// Arrival time in the units of `params`.
    pub value: f64,
    pub ratio: f64,
    /// Error estimate in time units.
    pub error_estimate: f64,
    pub series: CorrectionSeries,
}

/// Term values of `τ/τ_class` for ℏ orders `0..=max_order` with their
/// rounding uncertainties.
pub fn series_terms(k_sigma: f64, u: f64, spec: &PhaseSpec, max_order: usize) -> Result<Vec<(f64, f64)>> {
    require_u(u)?;
    let polys = derivative_polynomials(spec, max_order.max(1));
    let w = weight(u);
    let mut out = Vec::with_capacity(max_order + 1);
    for j in 0..=max_order {
        let (integral, scale, norm) = if j % 2 == 0 {
            let n = j / 2;
            let m = &w * &polys[n].modulus_squared();
            let norm = 1.0 / (u * k_sigma.powi(j as i32));
            (expect_re(&m)?, m.gaussian_abs_scale()?, norm)
        } else {
            let n = (j - 1) / 2;
            let m = &w * &polys[j].imag_part();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let norm = -sign / (u * k_sigma.powi(j as i32));
            (expect_re(&m)?, m.gaussian_abs_scale()?, norm)
        };
        let value = integral * norm;
        let rounding = 4.0 * f64::EPSILON * scale * norm.abs();
        if !value.is_finite() {
            return Err(QtoaError::Overflow(format!("series term of order {j} is not finite")));
        }
        out.push((value, rounding));
    }
    Ok(out)
}

/// Truncated ℏ-expansion of the expected arrival time.
pub fn asymptotic_toa(params: &PacketParams, spec: &PhaseSpec, truncation: Truncation) -> Result<AsymptoticToa> {
    let k_sigma = params.k_sigma();
    let series = correction_series(k_sigma, params.u(), spec, truncation)?;
    let ratio = series.partial_sum();
    let tau = params.tau_class();
    Ok(AsymptoticToa {
        value: ratio * tau,
        ratio,
        error_estimate: series.truncation_error_estimate * tau.abs(),
        series,
    })
}

/// Series for `τ/τ_class` in dimensionless form.
pub fn correction_series(k_sigma: f64, u: f64, spec: &PhaseSpec, truncation: Truncation) -> Result<CorrectionSeries> {
    require_u(u)?;
    let max_order = match truncation {
        Truncation::Auto { max_order } => max_order.max(1),
        Truncation::Fixed(order) => order + 1,
    };
    let raw = series_terms(k_sigma, u, spec, max_order)?;
    let terms: Vec<SeriesTerm> =
        raw.iter().enumerate().map(|(j, &(value, _))| SeriesTerm { order_in_hbar: j, value }).collect();

    let rounding_floor = |summed: usize| {
        let s: f64 = terms.iter().take(summed).map(|t| t.value.abs()).sum();
        let r: f64 = raw.iter().take(summed).map(|&(_, r)| r).sum();
        (summed as f64 + 1.0) * f64::EPSILON * s + r
    };

    match truncation {
        Truncation::Fixed(order) => {
            let summed = order + 1;
            Ok(CorrectionSeries {
                truncation_index: order + 1,
                terms_summed: summed,
                truncation_error_estimate: terms[order + 1].value.abs() + rounding_floor(summed),
                terms,
            })
        }
        Truncation::Auto { .. } => {
            if k_sigma <= 1.0 {
                return Err(QtoaError::numerical(
                    format!(
                        "kσ = {k_sigma} <= 1: the asymptotic series diverges from the start; use the exact evaluation"
                    ),
                    terms[0].value,
                    f64::INFINITY,
                ));
            }
            let t0 = terms[0].value.abs();
            let eligible: Vec<&SeriesTerm> = terms
                .iter()
                .zip(&raw)
                .skip(1)
                .filter(|(t, &(_, r))| t.value.abs() > CANCELLED_TERM_FACTOR * r)
                .map(|(t, _)| t)
                .collect();
            let Some(smallest) = eligible.iter().copied().min_by(|a, b| a.value.abs().total_cmp(&b.value.abs())) else {
                let summed = terms.len();
                return Ok(CorrectionSeries {
                    truncation_index: max_order,
                    terms_summed: summed,
                    truncation_error_estimate: rounding_floor(summed),
                    terms,
                });
            };
            if smallest.value.abs() >= t0 {
                let best = terms[0].value;
                return Err(QtoaError::numerical(
                    format!("asymptotic series diverges at kσ = {k_sigma}; no term is smaller than the leading one, use the exact evaluation"),
                    best,
                    smallest.value.abs(),
                ));
            }
            let last = eligible.last().expect("non-empty").order_in_hbar;
            let j = smallest.order_in_hbar;
            let (summed, err) = if j == last { (terms.len(), smallest.value.abs()) } else { (j, smallest.value.abs()) };
            Ok(CorrectionSeries {
                truncation_index: j,
                terms_summed: summed,
                truncation_error_estimate: err + rounding_floor(summed),
                terms,
            })
        }
    }
}

/// Exact expectation value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactToa {
    pub value: f64,
    pub ratio: f64,
    /// `|Im τ| / |τ|`; zero up to quadrature error for a Hermitian kernel.
    pub imaginary_residue: f64,
    /// Difference between the result and a run on panels half as long, in time units.
    pub error_estimate: f64,
}

/// Exact expectation value of the arrival-time operator for `φ̃ e^{iKx}`.
pub fn exact_toa(params: &PacketParams, spec: &PhaseSpec) -> Result<ExactToa> {
    let theta = spec.value_polynomial();
    let theta_c: Vec<f64> = theta.coefficients().iter().map(|c| c.re).collect();
    let dtheta: Vec<f64> = if spec.is_none() {
        Vec::new()
    } else {
        spec.derivative_polynomial(1).coefficients().iter().map(|c| c.re).collect()
    };
    let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
    let norm = (2.0 * PI).powf(-0.25);
    let envelope = |x: f64| Complex64::from_polar(norm * (-0.25 * x * x).exp(), horner(&theta_c, x));
    let rate = |x: f64| horner(&dtheta, x).abs();
    let half_width = 12.0 + params.u().abs().max(spec.derivative_degree() as f64);
    exact_toa_envelope(params, envelope, rate, half_width)
}

/// Exact expectation value for an arbitrary envelope `φ̃(x)` (the carrier
/// `e^{iKx}` is added here). `phase_rate(x)` bounds `|dθ/dx|` near `x`, and
/// the integration runs over `|x| <= half_width`.
pub fn exact_toa_envelope(
    params: &PacketParams,
    envelope: impl Fn(f64) -> Complex64,
    phase_rate: impl Fn(f64) -> f64,
    half_width: f64,
) -> Result<ExactToa> {
    let k = params.k_sigma();
    let u = params.u();
    require_u(u)?;
    let gl = gauss_legendre(20);
    let coarse = kernel_integral(k, u, &envelope, &phase_rate, half_width, 1.0, &gl);
    let fine = kernel_integral(k, u, &envelope, &phase_rate, half_width, 0.5, &gl);
    let scale = params.time_scale();
    let t_fine = Complex64::new(0.0, -k / 4.0) * fine * scale;
    let t_coarse = Complex64::new(0.0, -k / 4.0) * coarse * scale;
    if !(t_fine.re.is_finite() && t_fine.im.is_finite()) {
        return Err(QtoaError::numerical("exact evaluation produced a non-finite value", f64::NAN, f64::INFINITY));
    }
    let value = t_fine.re;
    Ok(ExactToa {
        value,
        ratio: value / params.tau_class(),
        imaginary_residue: t_fine.im.abs() / t_fine.norm(),
        error_estimate: (t_fine - t_coarse).norm(),
    })
}

/// `∫ f̄(x) [(x+2u)(2C0(x) - T0) + (2C1(x) - T1)] dx` with `f = φ̃ e^{iKx}`,
/// `C0, C1` the running integrals of `f` and `x f` and `T0, T1` their totals.
fn kernel_integral(
    k: f64,
    u: f64,
    envelope: &impl Fn(f64) -> Complex64,
    phase_rate: &impl Fn(f64) -> f64,
    half_width: f64,
    refine: f64,
    gl: &GaussLegendre,
) -> Complex64 {
    let f = |x: f64| envelope(x) * Complex64::from_polar(1.0, k * x);
    const MAX_PANEL: f64 = 0.25;
    const NEGLIGIBLE_AMPLITUDE: f64 = 1e-13;
    // Panel edges with length <= π / local oscillation rate.
    let mut edges = vec![-half_width];
    let mut a = -half_width;
    while a < half_width {
        let probes = (0..=4).map(|i| a + MAX_PANEL * i as f64 / 4.0);
        // Where the (unit-norm) envelope is negligible an under-resolved phase
        // only perturbs the result at the level of the amplitude itself.
        let live = probes.clone().any(|x| envelope(x).norm() > NEGLIGIBLE_AMPLITUDE);
        let probe = if live { probes.map(phase_rate).fold(0.0, f64::max) } else { 0.0 };
        let rate = k.abs() + 1.1 * probe;
        let h = refine * (PI / rate).min(MAX_PANEL);
        a = (a + h).min(half_width);
        edges.push(a);
    }
    let n = gl.len();
    let mut nodes = Vec::with_capacity((edges.len() - 1) * n);
    let mut weights = Vec::with_capacity(nodes.capacity());
    let mut c0 = Vec::with_capacity(nodes.capacity());
    let mut c1 = Vec::with_capacity(nodes.capacity());
    let mut values = Vec::with_capacity(nodes.capacity());
    let (mut run0, mut run1) = (CompensatedSum::default(), CompensatedSum::default());
    for win in edges.windows(2) {
        let (a, b) = (win[0], win[1]);
        let (mut p0, mut p1) = (CompensatedSum::default(), CompensatedSum::default());
        for (x, w) in gl.mapped(a, b) {
            let fx = f(x);
            let (mut s0, mut s1) = (CompensatedSum::default(), CompensatedSum::default());
            for (y, wy) in gl.mapped(a, x) {
                let fy = f(y) * wy;
                s0.add(fy);
                s1.add(fy * y);
            }
            nodes.push(x);
            weights.push(w);
            values.push(fx);
            c0.push(run0.value() + s0.value());
            c1.push(run1.value() + s1.value());
            p0.add(fx * w);
            p1.add(fx * (w * x));
        }
        run0.add(p0.value());
        run1.add(p1.value());
    }
    let (t0, t1) = (run0.value(), run1.value());
    let mut sum = CompensatedSum::default();
    for i in 0..nodes.len() {
        let x = nodes[i];
        let inner = (c0[i] * 2.0 - t0) * (x + 2.0 * u) + (c1[i] * 2.0 - t1);
        sum.add(values[i].conj() * inner * weights[i]);
    }
    sum.value()
}

/// Neumaier-compensated complex accumulator.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    fn add(&mut self, v: Complex64) {
        let two_sum = |s: f64, v: f64| {
            let t = s + v;
            let c = if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
            (t, c)
        };
        let (re, cr) = two_sum(self.sum.re, v.re);
        let (im, ci) = two_sum(self.sum.im, v.im);
        self.sum = Complex64::new(re, im);
        self.carry += Complex64::new(cr, ci);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::{Parity, PhaseBasisTerm};

    fn packet_spec() -> PhaseSpec {
        PhaseSpec::odd_even_01(9.0 / (8.0 * (6.0 * PI).sqrt()), 5.0 / (16.0 * (2.0 * PI).sqrt()))
    }

    fn packet_params() -> PacketParams {
        PacketParams::natural(6.0, -10.0, 200.0).unwrap()
    }

    #[test]
    fn zeroth_orders() {
        let p = packet_params();
        assert!((chi1_general(0, &p, &packet_spec()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(chi2_general(0, &p, &PhaseSpec::none()).unwrap(), 0.0);
        let c = chi1_components(&PhaseSpec::none(), 1).unwrap();
        assert!((c.density - 0.25).abs() < 1e-15 && c.centered.abs() < 1e-15);
    }

    #[test]
    fn explicit_low_orders_for_packet_case() {
        let p = packet_params();
        let s = packet_spec();
        assert!(chi_explicit(1, &p, &s).unwrap().abs() < 1e-10);
        assert!(chi_explicit(2, &p, &s).unwrap().abs() < 1e-10);
        assert_eq!(chi_explicit(3, &p, &PhaseSpec::none()).unwrap(), 0.0);
        assert!(chi_explicit(7, &p, &s).is_err());
    }

    #[test]
    fn explicit_matches_generic_at_orders_one_and_two() {
        let p = PacketParams::from_dimensionless(50.0, -0.7).unwrap();
        let s = PhaseSpec::new(vec![
            (0.3, PhaseBasisTerm::new(Parity::Odd, 0, 2).unwrap()),
            (-0.2, PhaseBasisTerm::new(Parity::Even, 1, 0).unwrap()),
        ])
        .unwrap();
        for order in 1..=2 {
            let e = chi_explicit(order, &p, &s).unwrap();
            let g = chi_generic_for_order(order, &p, &s).unwrap();
            assert!((e - g).abs() < 1e-10 * (1.0 + g.abs()), "order {order}: {e} vs {g}");
        }
    }

    #[test]
    fn q_factors() {
        let p = packet_params();
        assert!((q_np(&p) - 1.0 / 57600.0).abs() < 1e-18);
        assert!(q_wp(&p, &packet_spec()).unwrap().is_finite());
        assert!(matches!(q_wp(&p, &PhaseSpec::odd_even_01(0.1, 0.1)), Err(QtoaError::InvalidPhase(_))));
    }

    #[test]
    fn order_zero_series_is_classical() {
        let p = packet_params();
        let r = asymptotic_toa(&p, &PhaseSpec::none(), Truncation::Fixed(0)).unwrap();
        assert_eq!(r.value, p.tau_class());
    }

    #[test]
    fn leading_no_phase_correction() {
        let p = packet_params();
        let r = asymptotic_toa(&p, &PhaseSpec::none(), Truncation::default()).unwrap();
        let lead = 1.0 + 1.0 / (4.0 * 120.0 * 120.0);
        assert!((r.ratio - lead).abs() < 1.0 / 120f64.powi(4));
        assert!((p.tau_class() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn divergence_guard() {
        let p = PacketParams::from_dimensionless(0.5, -1.0).unwrap();
        assert!(matches!(
            asymptotic_toa(&p, &PhaseSpec::none(), Truncation::default()),
            Err(QtoaError::NumericalFailure { .. })
        ));
    }

    #[test]
    fn exact_without_phase_matches_reference() {
        // High-precision references for u = -5/3.
        for (k, r) in [(10.0, 1.002_518_988_571_471_2), (30.0, 1.000_278_009_581_388)] {
            let p = PacketParams::from_dimensionless(k, -5.0 / 3.0).unwrap();
            let e = exact_toa(&p, &PhaseSpec::none()).unwrap();
            assert!((e.ratio - r).abs() < 1e-13, "K={k}: {}", e.ratio);
            assert!(e.imaginary_residue < 1e-8);
        }
    }

    #[test]
    fn exact_sign_and_energy_tracking() {
        let p = PacketParams::natural(1.0, -2.0, 800.0).unwrap();
        let e = exact_toa(&p, &PhaseSpec::none()).unwrap();
        assert!(e.value > 0.0);
        let p2 = PacketParams::natural(1.0, -2.0, 1800.0).unwrap();
        let e2 = exact_toa(&p2, &PhaseSpec::none()).unwrap();
        assert!((e.value / e2.value - 1.5).abs() < 1e-3);
    }
}
