//! Parity phase construction and solvers for the cancellation conditions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::corrections::{cancellation_residuals, chi2_general_u};
use crate::error::{QtoaError, Result};
use crate::numerics::ComplexPolynomial;
use crate::wavepacket::{hermite_to_monomial, Parity, PhaseBasisTerm, PhaseSpec};

/// Relative tolerance under which a negative discriminant is treated as a
/// rounding artefact of an exact double root.
pub const DISCRIMINANT_REL_TOL: f64 = 1e-12;

/// Single parity basis term with the given dimensionless coefficient.
pub fn build_parity_phase(parity: Parity, l: usize, m: usize, coefficient: f64) -> Result<PhaseSpec> {
    PhaseSpec::single(parity, l, m, coefficient)
}

/// `(∫Φ̃θ', ∫xΦ̃θ')` by exact Gaussian moments.
pub fn linear_condition_residuals(spec: &PhaseSpec) -> Result<(f64, f64)> {
    if spec.is_none() {
        return Ok((0.0, 0.0));
    }
    let tp = spec.derivative_polynomial(1);
    let c1 = tp.gaussian_expectation()?.re;
    let c2 = (&ComplexPolynomial::x() * &tp).gaussian_expectation()?.re;
    Ok((c1, c2))
}

/// `∫(x+u)(θ')²Φ̃ + ∫(x+u)((√Φ̃)')²` for `θ = a θ_odd + b θ_even` (`l=0, m=1`).
pub fn second_order_residual(a: f64, b: f64, u: f64) -> f64 {
    second_order_residual_spec(&PhaseSpec::odd_even_01(a, b), u).expect("low-order moments are finite")
}

/// The same condition for an arbitrary phase.
pub fn second_order_residual_spec(spec: &PhaseSpec, u: f64) -> Result<f64> {
    Ok(cancellation_residuals(u, spec)?[2])
}

/// Closed polynomial form `16π[u(a² + 4b²) + 4√3 ab] + u/4`.
pub fn second_order_residual_closed(a: f64, b: f64, u: f64) -> f64 {
    16.0 * PI * (u * (a * a + 4.0 * b * b) + 4.0 * 3f64.sqrt() * a * b) + u / 4.0
}

/// `768π b² σ² − 256π b² q0² − q0²`.
pub fn discriminant(b: f64, sigma: f64, q0: f64) -> f64 {
    768.0 * PI * b * b * sigma * sigma - 256.0 * PI * b * b * q0 * q0 - q0 * q0
}

fn discriminant_scale(b: f64, sigma: f64, q0: f64) -> f64 {
    768.0 * PI * b * b * sigma * sigma + 256.0 * PI * b * b * q0 * q0 + q0 * q0
}

/// Lower bound on `b²` for real roots, valid when `σ² > q0²/3`.
pub fn b_squared_lower_bound(sigma: f64, q0: f64) -> f64 {
    let r = q0 * q0 / (sigma * sigma);
    q0 * q0 / (768.0 * PI * sigma * sigma) / (1.0 - r / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    Numeric,
}

/// Roots `a(b)` of the second-order condition with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub b: f64,
    pub q0_over_sigma: f64,
    pub a_plus: Option<f64>,
    pub a_minus: Option<f64>,
    pub discriminant: f64,
    pub feasible: bool,
    /// `|∫Φ̃θ'|` at the reported root(s).
    pub residual_cond1: f64,
    /// `|∫(x+u)Φ̃θ'|`.
    pub residual_cond2: f64,
    /// `|∫(x+u)(θ'² + ((√Φ̃)')²)Φ̃|`.
    pub residual_cond3: f64,
    pub method: SolveMethod,
}

impl SolveReport {
    /// Root of smaller magnitude (the plus root on ties).
    pub fn preferred_a(&self) -> Option<f64> {
        match (self.a_plus, self.a_minus) {
            (Some(p), Some(m)) => Some(if m.abs() < p.abs() { m } else { p }),
            (p, m) => p.or(m),
        }
    }
}

fn fill_residuals(report: &mut SolveReport) -> Result<()> {
    let u = report.q0_over_sigma;
    for a in [report.a_plus, report.a_minus].into_iter().flatten() {
        let r = cancellation_residuals(u, &PhaseSpec::odd_even_01(a, report.b))?;
        report.residual_cond1 = report.residual_cond1.max(r[0].abs());
        report.residual_cond2 = report.residual_cond2.max(r[1].abs());
        report.residual_cond3 = report.residual_cond3.max(r[2].abs());
    }
    Ok(())
}

/// Solves the second-order condition for `a` given `b` (`l = 0, m = 1`).
pub fn solve_a_from_b(b: f64, sigma: f64, q0: f64, method: SolveMethod) -> Result<SolveReport> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(QtoaError::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !(b.is_finite() && q0.is_finite()) {
        return Err(QtoaError::invalid("b and q0 must be finite"));
    }
    let u = q0 / sigma;
    let d = discriminant(b, sigma, q0);
    let tol = DISCRIMINANT_REL_TOL * discriminant_scale(b, sigma, q0);
    let width_ok = sigma * sigma > q0 * q0 / 3.0;
    let mut report = SolveReport {
        b,
        q0_over_sigma: u,
        a_plus: None,
        a_minus: None,
        discriminant: d,
        feasible: false,
        residual_cond1: 0.0,
        residual_cond2: 0.0,
        residual_cond3: 0.0,
        method,
    };
    match method {
        SolveMethod::ClosedForm => {
            if q0 == 0.0 {
                return Err(QtoaError::DegenerateInput(
                    "closed-form roots divide by q0; use the numeric method at q0 = 0".into(),
                ));
            }
            report.feasible = width_ok && d >= -tol;
            if report.feasible {
                // Within rounding of zero the roots coincide exactly.
                let root = if d.abs() <= tol { 0.0 } else { (PI * d).sqrt() };
                let base = -16.0 * 3f64.sqrt() * PI * b * sigma;
                report.a_plus = Some((base + root) / (8.0 * PI * q0));
                report.a_minus = Some((base - root) / (8.0 * PI * q0));
            }
        }
        SolveMethod::Numeric => {
            // At the vertex the residual equals -D/(4 u σ²); use the same
            // double-root tolerance as the closed form.
            let double_root_tol = if u == 0.0 { 0.0 } else { tol / (4.0 * u.abs() * sigma * sigma) };
            let roots = numeric_roots(|a| second_order_residual(a, b, u), double_root_tol);
            if let Some((hi, lo)) = roots {
                // Label as the closed form does: the `+` root is the larger one iff q0 > 0.
                let (plus, minus) = if u < 0.0 { (lo, hi) } else { (hi, lo) };
                report.a_plus = Some(plus);
                report.a_minus = Some(minus);
            }
            report.feasible = roots.is_some();
        }
    }
    fill_residuals(&mut report)?;
    Ok(report)
}

/// Real roots of a scalar function that is convex or concave in `a`
/// (a quadratic here), returned as `(larger, smaller)`.
///
/// Newton on the derivative locates the vertex; a sign change is bracketed
/// outward from it, bisected, then polished with Newton steps.
fn numeric_roots(r: impl Fn(f64) -> f64, double_root_tol: f64) -> Option<(f64, f64)> {
    let d1 = |a: f64| {
        let h = 1e-2 * (1.0 + a.abs());
        (r(a + h) - r(a - h)) / (2.0 * h)
    };
    let d2 = |a: f64| {
        let h = 1e-2 * (1.0 + a.abs());
        (r(a + h) - 2.0 * r(a) + r(a - h)) / (h * h)
    };
    let scale = r(0.0).abs().max(r(1.0).abs()).max(r(-1.0).abs()).max(f64::MIN_POSITIVE);
    let curvature = d2(0.0);
    if curvature.abs() <= 1e-12 * scale {
        // Linear (or constant) in a.
        let slope = d1(0.0);
        let r0 = r(0.0);
        if slope.abs() <= 1e-12 * scale {
            return (r0.abs() <= 1e-12 * scale).then_some((0.0, 0.0));
        }
        let a = -r0 / slope;
        return Some((a, a));
    }
    let mut v = 0.0;
    for _ in 0..50 {
        let step = d1(v) / d2(v);
        v -= step;
        if step.abs() <= 1e-15 * (1.0 + v.abs()) {
            break;
        }
    }
    let rv = r(v);
    if rv.abs() <= double_root_tol.max(1e-15 * scale) {
        return Some((v, v));
    }
    if rv.signum() == curvature.signum() {
        return None;
    }
    let find = |dir: f64| -> f64 {
        let mut step = 1e-3 * (1.0 + v.abs());
        let mut far = v + dir * step;
        while r(far).signum() == rv.signum() {
            step *= 2.0;
            far = v + dir * step;
            if !far.is_finite() {
                return f64::NAN;
            }
        }
        let (mut lo, mut hi) = (v, far);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo).abs() <= 1e-6 * (1.0 + mid.abs()) {
                break;
            }
            if r(mid).signum() == rv.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut a = 0.5 * (lo + hi);
        for _ in 0..20 {
            let g = d1(a);
            if g == 0.0 {
                break;
            }
            let step = r(a) / g;
            a -= step;
            if step.abs() <= 1e-16 * (1.0 + a.abs()) {
                break;
            }
        }
        a
    };
    let (right, left) = (find(1.0), find(-1.0));
    if right.is_nan() || left.is_nan() {
        return None;
    }
    Some((right, left))
}

/// Outcome of [`solve_phase_general`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralSolution {
    pub feasible: bool,
    pub coefficients: Vec<f64>,
    /// Residual vector of all targeted conditions at `coefficients`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    #[serde(skip)]
    pub spec: PhaseSpec,
}

/// Damped Gauss-Newton settings.
pub const NEWTON_DAMPING: f64 = 0.5;
pub const NEWTON_MAX_ITERATIONS: usize = 100;
pub const NEWTON_TOLERANCE: f64 = 1e-10;
pub const SEED_VALUES: [f64; 4] = [-1.0, -0.1, 0.1, 1.0];

/// Residual vector for order `n`: `∫θ'Φ̃`, `χ̃₂⁽⁰⁾`, then `u χ̃₁⁽¹⁾` for
/// `n >= 2` and `χ̃₂⁽¹⁾` for `n = 3`.
pub fn condition_vector(n: usize, u: f64, spec: &PhaseSpec) -> Result<Vec<f64>> {
    let r = cancellation_residuals(u, spec)?;
    let mut out = vec![r[0], r[1]];
    if n >= 2 {
        out.push(r[2]);
    }
    if n >= 3 {
        out.push(chi2_general_u(1, u, spec)?);
    }
    Ok(out)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Finds coefficients over `basis` cancelling the corrections up to order `n`.
///
/// `pinned[i] = Some(c)` fixes coefficient `i`; the rest are solved for by
/// damped Gauss-Newton (finite-difference Jacobian, pseudo-inverse step,
/// step halving) from every point of the seed grid.
pub fn solve_phase_general(
    n: usize,
    basis: &[PhaseBasisTerm],
    u: f64,
    pinned: &[Option<f64>],
) -> Result<GeneralSolution> {
    if !(1..=3).contains(&n) {
        return Err(QtoaError::invalid(format!("cancellation order must be 1, 2 or 3, got {n}")));
    }
    if basis.len() < n {
        return Err(QtoaError::invalid(format!("order {n} needs at least {n} basis terms, got {}", basis.len())));
    }
    if !pinned.is_empty() && pinned.len() != basis.len() {
        return Err(QtoaError::invalid("pinned list must match the basis length"));
    }
    for t in basis {
        t.validate()?;
    }
    let template = PhaseSpec::new(basis.iter().map(|&t| (0.0, t)).collect())?;
    let pin = |i: usize| pinned.get(i).copied().flatten();
    let free: Vec<usize> = (0..basis.len()).filter(|&i| pin(i).is_none()).collect();
    if free.is_empty() {
        return Err(QtoaError::invalid("every coefficient is pinned"));
    }
    let assemble = |x: &[f64]| -> Vec<f64> {
        let mut c: Vec<f64> = (0..basis.len()).map(|i| pin(i).unwrap_or(0.0)).collect();
        for (k, &i) in free.iter().enumerate() {
            c[i] = x[k];
        }
        c
    };
    let residual =
        |x: &[f64]| -> Result<Vec<f64>> { condition_vector(n, u, &template.with_coefficients(&assemble(x))?) };

    let mut best: Option<(f64, Vec<f64>, Vec<f64>, usize)> = None;
    let nf = free.len();
    for seed_idx in 0..SEED_VALUES.len().pow(nf as u32) {
        let mut x: Vec<f64> = (0..nf)
            .map(|k| SEED_VALUES[(seed_idx / SEED_VALUES.len().pow((nf - 1 - k) as u32)) % SEED_VALUES.len()])
            .collect();
        let mut r = residual(&x)?;
        let mut iterations = 0;
        while inf_norm(&r) >= NEWTON_TOLERANCE && iterations < NEWTON_MAX_ITERATIONS {
            iterations += 1;
            let mut jac = DMatrix::zeros(r.len(), nf);
            for k in 0..nf {
                let h = 1e-7 * (1.0 + x[k].abs());
                let mut xp = x.clone();
                xp[k] += h;
                let mut xm = x.clone();
                xm[k] -= h;
                let (rp, rm) = (residual(&xp)?, residual(&xm)?);
                for i in 0..r.len() {
                    jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            let Ok(pinv) = jac.pseudo_inverse(1e-12) else { break };
            let step = pinv * DVector::from_column_slice(&r);
            let current = inf_norm(&r);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
                let rt = residual(&trial)?;
                if inf_norm(&rt) < current {
                    x = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                lambda *= NEWTON_DAMPING;
            }
            if !accepted {
                break;
            }
        }
        let norm = inf_norm(&r);
        let better = match &best {
            None => true,
            Some((bn, bx, _, _)) => {
                let both_converged = norm < NEWTON_TOLERANCE && *bn < NEWTON_TOLERANCE;
                if both_converged {
                    x.iter().zip(bx).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b)
                } else {
                    norm < *bn
                }
            }
        };
        if better {
            best = Some((norm, x, r, iterations));
        }
    }
    let (norm, x, residuals, iterations) = best.expect("at least one seed");
    let coefficients = assemble(&x);
    let spec = template.with_coefficients(&coefficients)?;
    Ok(GeneralSolution { feasible: norm < NEWTON_TOLERANCE, coefficients, residuals, iterations, spec })
}

/// Compares the normative parity derivative with the literal odd-parity
/// display of the Hermite-function construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityFormDiagnostic {
    pub term: PhaseBasisTerm,
    /// Largest absolute difference between monomial coefficients of the two `θ'`.
    pub max_coefficient_mismatch: f64,
    pub normative_residuals: (f64, f64),
    pub displayed_residuals: (f64, f64),
}

pub fn parity_form_diagnostic(term: PhaseBasisTerm) -> Result<ParityFormDiagnostic> {
    term.validate()?;
    let normative = hermite_to_monomial(&term.derivative_hermite());
    let displayed = hermite_to_monomial(&term.derivative_hermite_displayed());
    let diff = &normative - &displayed;
    let mismatch = diff.coefficients().iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let residuals = |p: &ComplexPolynomial| -> Result<(f64, f64)> {
        Ok((p.gaussian_expectation()?.re, (&ComplexPolynomial::x() * p).gaussian_expectation()?.re))
    };
    Ok(ParityFormDiagnostic {
        term,
        max_coefficient_mismatch: mismatch,
        normative_residuals: residuals(&normative)?,
        displayed_residuals: residuals(&displayed)?,
    })
}
