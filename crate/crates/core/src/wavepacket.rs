//! Gaussian wavepacket, parity phases and their dimensionless derivatives.
//!
//! Positions are measured as `x = (q - q0)/sigma`. Phase coefficients are
//! dimensionless (physical coefficient times `sigma²`).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QtoaError, Result};
use crate::numerics::{
    hermite_monomial_coefficients, hermite_series_derivative, hermite_series_eval, integrate_oscillatory,
    standard_normal_density, ComplexPolynomial, Domain,
};

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Neutron mass in kg.
pub const NEUTRON_MASS_SI: f64 = 1.674_927_498_04e-27;
/// Largest Hermite index a basis term may reach.
pub const MAX_BASIS_INDEX: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Si,
    #[default]
    Natural,
}

/// Packet width, initial centre, kinetic energy, mass and ℏ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    pub sigma: f64,
    pub q0: f64,
    pub e0: f64,
    pub mu: f64,
    pub hbar: f64,
    pub units: Units,
}

impl PacketParams {
    pub fn new(sigma: f64, q0: f64, e0: f64, mu: f64, hbar: f64, units: Units) -> Result<Self> {
        let p = Self { sigma, q0, e0, mu, hbar, units };
        p.validate()?;
        Ok(p)
    }

    /// `mu = hbar = 1`.
    pub fn natural(sigma: f64, q0: f64, e0: f64) -> Result<Self> {
        Self::new(sigma, q0, e0, 1.0, 1.0, Units::Natural)
    }

    /// Natural-unit packet with `sigma = 1` realising the given `kσ` and `q0/σ`.
    pub fn from_dimensionless(k_sigma: f64, u: f64) -> Result<Self> {
        Self::natural(1.0, u, 0.5 * k_sigma * k_sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("sigma", self.sigma), ("E0", self.e0), ("mu", self.mu), ("hbar", self.hbar)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(QtoaError::invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if !self.q0.is_finite() {
            return Err(QtoaError::invalid("q0 must be finite"));
        }
        if !(self.k_sigma().is_finite() && self.k_sigma() > 0.0) {
            return Err(QtoaError::invalid("k*sigma is not a positive finite number"));
        }
        Ok(())
    }

    /// `k = √(2 mu E0)/hbar`.
    pub fn k(&self) -> f64 {
        (2.0 * self.mu * self.e0).sqrt() / self.hbar
    }

    /// `v0 = √(2 E0/mu)`.
    pub fn v0(&self) -> f64 {
        (2.0 * self.e0 / self.mu).sqrt()
    }

    /// Classical arrival time at the origin, `-q0/v0`.
    pub fn tau_class(&self) -> f64 {
        -self.q0 / self.v0()
    }

    pub fn k_sigma(&self) -> f64 {
        self.k() * self.sigma
    }

    /// `q0/sigma`.
    pub fn u(&self) -> f64 {
        self.q0 / self.sigma
    }

    /// Natural time unit `sigma/v0`.
    pub fn time_scale(&self) -> f64 {
        self.sigma / self.v0()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// One parity basis element; `l != m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseBasisTerm {
    pub parity: Parity,
    pub l: usize,
    pub m: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl PhaseBasisTerm {
    pub fn new(parity: Parity, l: usize, m: usize) -> Result<Self> {
        let t = Self { parity, l, m };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == self.m {
            return Err(QtoaError::invalid(format!("basis term needs l != m, got l = m = {}", self.l)));
        }
        if self.l.max(self.m) > MAX_BASIS_INDEX {
            return Err(QtoaError::invalid(format!(
                "basis index max(l, m) = {} exceeds {MAX_BASIS_INDEX}",
                self.l.max(self.m)
            )));
        }
        Ok(())
    }

    /// Hermite coefficients of `θ'(x)` for unit coefficient.
    ///
    /// Odd: `C[√((2l)!/(2m)!)/l! H_{2m} - √((2m)!/(2l)!)/m! H_{2l}]`,
    /// even: the same with `2l+1, 2m+1`, where `C = 2√π/2^{l+m}`.
    pub fn derivative_hermite(&self) -> Vec<f64> {
        let (l, m) = (self.l, self.m);
        let c = 2.0 * PI.sqrt() / 2f64.powi((l + m) as i32);
        let shift = match self.parity {
            Parity::Odd => 0,
            Parity::Even => 1,
        };
        let (jl, jm) = (2 * l + shift, 2 * m + shift);
        let mut out = vec![0.0; jl.max(jm) + 1];
        out[jm] += c * (factorial(jl) / factorial(jm)).sqrt() / factorial(l);
        out[jl] -= c * (factorial(jm) / factorial(jl)).sqrt() / factorial(m);
        out
    }

    /// The odd-parity derivative exactly as displayed at the end of the
    /// Hermite-function construction, whose second radical reads
    /// `√((2m+1)!/(2l+1)!)`. Even parity is returned unchanged.
    pub fn derivative_hermite_displayed(&self) -> Vec<f64> {
        let mut out = self.derivative_hermite();
        if self.parity == Parity::Odd {
            let (l, m) = (self.l, self.m);
            let c = 2.0 * PI.sqrt() / 2f64.powi((l + m) as i32);
            out[2 * l] = -c * (factorial(2 * m + 1) / factorial(2 * l + 1)).sqrt() / factorial(m);
        }
        out
    }
}

/// Real phase `θ(x) = Σ c_i θ_i(x)` over parity basis terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, PhaseBasisTerm)>", into = "Vec<(f64, PhaseBasisTerm)>")]
pub struct PhaseSpec {
    terms: Vec<(f64, PhaseBasisTerm)>,
    /// Hermite coefficients of `θ'`.
    derivative: Vec<f64>,
}

impl TryFrom<Vec<(f64, PhaseBasisTerm)>> for PhaseSpec {
    type Error = QtoaError;
    fn try_from(terms: Vec<(f64, PhaseBasisTerm)>) -> Result<Self> {
        PhaseSpec::new(terms)
    }
}

impl From<PhaseSpec> for Vec<(f64, PhaseBasisTerm)> {
    fn from(s: PhaseSpec) -> Self {
        s.terms
    }
}

impl PhaseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(terms: Vec<(f64, PhaseBasisTerm)>) -> Result<Self> {
        let mut derivative: Vec<f64> = Vec::new();
        for (c, t) in &terms {
            t.validate()?;
            if !c.is_finite() {
                return Err(QtoaError::InvalidPhase(format!("non-finite coefficient {c}")));
            }
            let h = t.derivative_hermite();
            if derivative.len() < h.len() {
                derivative.resize(h.len(), 0.0);
            }
            for (d, v) in derivative.iter_mut().zip(h) {
                *d += c * v;
            }
        }
        while derivative.last() == Some(&0.0) {
            derivative.pop();
        }
        Ok(Self { terms, derivative })
    }

    pub fn single(parity: Parity, l: usize, m: usize, coefficient: f64) -> Result<Self> {
        Self::new(vec![(coefficient, PhaseBasisTerm::new(parity, l, m)?)])
    }

    /// `a θ_odd + b θ_even` with `l = 0, m = 1`.
    pub fn odd_even_01(a: f64, b: f64) -> Self {
        Self::new(vec![
            (a, PhaseBasisTerm { parity: Parity::Odd, l: 0, m: 1 }),
            (b, PhaseBasisTerm { parity: Parity::Even, l: 0, m: 1 }),
        ])
        .expect("fixed basis is valid")
    }

    pub fn terms(&self) -> &[(f64, PhaseBasisTerm)] {
        &self.terms
    }

    pub fn is_none(&self) -> bool {
        self.derivative.is_empty()
    }

    /// Phase multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self::new(self.terms.iter().map(|&(c, t)| (lambda * c, t)).collect()).expect("scaling keeps validity")
    }

    /// Same basis with new coefficients.
    pub fn with_coefficients(&self, coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() != self.terms.len() {
            return Err(QtoaError::invalid("coefficient count does not match basis size"));
        }
        Self::new(self.terms.iter().zip(coefficients).map(|(&(_, t), &c)| (c, t)).collect())
    }

    /// Hermite coefficients of `θ'`.
    pub fn derivative_hermite(&self) -> &[f64] {
        &self.derivative
    }

    /// Degree of `θ'` as a polynomial (0 when the phase is absent).
    pub fn derivative_degree(&self) -> usize {
        self.derivative.len().saturating_sub(1)
    }

    /// `θ(x)` from the termwise antiderivative `∫H_j = H_{j+1}/(2(j+1))`.
    pub fn value(&self, x: f64) -> f64 {
        if self.is_none() {
            return 0.0;
        }
        let mut anti = vec![0.0; self.derivative.len() + 1];
        for (j, &c) in self.derivative.iter().enumerate() {
            anti[j + 1] = c / (2.0 * (j + 1) as f64);
        }
        hermite_series_eval(&anti, x)
    }

    /// `θ^{(n)}(x)` for `n >= 1`.
    pub fn derivative(&self, x: f64, n: usize) -> f64 {
        assert!(n >= 1, "derivative order must be at least 1");
        let mut c = self.derivative.clone();
        for _ in 1..n {
            c = hermite_series_derivative(&c);
        }
        hermite_series_eval(&c, x)
    }

    /// `θ^{(n)}` as a monomial-basis polynomial, `n >= 1`.
    pub fn derivative_polynomial(&self, n: usize) -> ComplexPolynomial {
        assert!(n >= 1, "derivative order must be at least 1");
        let mut c = self.derivative.clone();
        for _ in 1..n {
            c = hermite_series_derivative(&c);
        }
        hermite_to_monomial(&c)
    }

    /// `θ` itself as a monomial-basis polynomial.
    pub fn value_polynomial(&self) -> ComplexPolynomial {
        if self.is_none() {
            return ComplexPolynomial::zero();
        }
        let mut anti = vec![0.0; self.derivative.len() + 1];
        for (j, &c) in self.derivative.iter().enumerate() {
            anti[j + 1] = c / (2.0 * (j + 1) as f64);
        }
        hermite_to_monomial(&anti)
    }
}

pub(crate) fn hermite_to_monomial(c: &[f64]) -> ComplexPolynomial {
    let mut out = vec![0.0; c.len()];
    for (j, &cj) in c.iter().enumerate() {
        if cj != 0.0 {
            for (i, h) in hermite_monomial_coefficients(j).into_iter().enumerate() {
                out[i] += cj * h;
            }
        }
    }
    ComplexPolynomial::from_real(&out)
}

/// `Φ̃(x) = (2π)^{-1/2} e^{-x²/2}`.
pub fn density(x: f64) -> f64 {
    standard_normal_density(x)
}

/// `φ̃(x) = (2π)^{-1/4} e^{-x²/4} e^{iθ(x)}`.
pub fn wavefunction(spec: &PhaseSpec, x: f64) -> Complex64 {
    let amp = (2.0 * PI).powf(-0.25) * (-0.25 * x * x).exp();
    Complex64::from_polar(amp, spec.value(x))
}

/// `P_0 ..= P_n` with `φ̃^{(j)} = P_j φ̃`, built from
/// `P_{j+1} = P_j' + (iθ' - x/2) P_j`.
pub fn derivative_polynomials(spec: &PhaseSpec, n: usize) -> Vec<ComplexPolynomial> {
    let theta_prime = if spec.is_none() { ComplexPolynomial::zero() } else { spec.derivative_polynomial(1) };
    let step = &theta_prime.scale(Complex64::new(0.0, 1.0)) - &ComplexPolynomial::from_real(&[0.0, 0.5]);
    let mut out = Vec::with_capacity(n + 1);
    out.push(ComplexPolynomial::one());
    for j in 0..n {
        let p = &out[j];
        let next = &p.derivative() + &(&step * p);
        out.push(next);
    }
    out
}

/// `P_n` with `φ̃^{(n)} = P_n φ̃`.
pub fn derivative_polynomial(spec: &PhaseSpec, n: usize) -> ComplexPolynomial {
    derivative_polynomials(spec, n).pop().expect("non-empty")
}

/// `ψ̃0(p) = (2πℏ)^{-1/2} ∫ ψ0(q) e^{-ipq/ℏ} dq` including the carrier `e^{ikq}`.
pub fn momentum_amplitude(params: &PacketParams, spec: &PhaseSpec, p: f64) -> Result<Complex64> {
    let kappa = (params.k() - p / params.hbar) * params.sigma;
    let r = integrate_oscillatory(|x| wavefunction(spec, x), kappa, Domain::Whole, 1e-12)?;
    let pre = (params.sigma / (2.0 * PI * params.hbar)).sqrt();
    let carrier = Complex64::from_polar(1.0, (params.k() - p / params.hbar) * params.q0);
    Ok(r.value * carrier * pre)
}
