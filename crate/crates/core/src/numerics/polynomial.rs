use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::moments::gaussian_moment;
use crate::error::Result;

/// Dense complex polynomial, coefficient `i` multiplying `x^i`.
///
/// Trailing zero coefficients are trimmed, so the zero polynomial has an
/// empty coefficient list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexPolynomial {
    coefficients: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(mut coefficients: Vec<Complex64>) -> Self {
        while coefficients.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn from_real(coefficients: &[f64]) -> Self {
        Self::new(coefficients.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Index of the last nonzero coefficient; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coefficients.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coefficients.iter().map(|&c| c * s).collect())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coefficients.iter().map(|c| c.conj()).collect())
    }

    pub fn real_part(&self) -> Self {
        Self::new(self.coefficients.iter().map(|c| Complex64::new(c.re, 0.0)).collect())
    }

    pub fn imag_part(&self) -> Self {
        Self::new(self.coefficients.iter().map(|c| Complex64::new(c.im, 0.0)).collect())
    }

    /// `|P(x)|²` as a (real-coefficient) polynomial.
    pub fn modulus_squared(&self) -> Self {
        (self * &self.conj()).real_part()
    }

    /// `∫ P(x) Φ̃(x) dx`, evaluated exactly from the Gaussian moments.
    pub fn gaussian_expectation(&self) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, &c) in self.coefficients.iter().enumerate().step_by(2) {
            sum += c * gaussian_moment(k)?;
        }
        Ok(sum)
    }

    /// `Σ |c_k| E|x|^k`-style magnitude used to judge cancellation in
    /// [`gaussian_expectation`](Self::gaussian_expectation).
    pub fn gaussian_abs_scale(&self) -> Result<f64> {
        let mut sum = 0.0;
        for (k, c) in self.coefficients.iter().enumerate().step_by(2) {
            sum += c.norm() * gaussian_moment(k)?;
        }
        Ok(sum)
    }
}

impl Add for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn add(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        let n = self.coefficients.len().max(rhs.coefficients.len());
        let zero = Complex64::new(0.0, 0.0);
        ComplexPolynomial::new(
            (0..n)
                .map(|i| {
                    self.coefficients.get(i).copied().unwrap_or(zero) + rhs.coefficients.get(i).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }
}

impl Neg for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn neg(self) -> ComplexPolynomial {
        ComplexPolynomial::new(self.coefficients.iter().map(|&c| -c).collect())
    }
}

impl Sub for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn sub(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        self + &(-rhs)
    }
}

impl Mul for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn mul(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPolynomial::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coefficients.len() + rhs.coefficients.len() - 1];
        for (i, &a) in self.coefficients.iter().enumerate() {
            for (j, &b) in rhs.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPolynomial::new(out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ComplexPolynomial {
            type Output = ComplexPolynomial;
            fn $m(self, rhs: ComplexPolynomial) -> ComplexPolynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trims_and_reports_degree() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), 1);
        assert!(ComplexPolynomial::new(vec![c(0.0, 0.0)]).is_zero());
        let q = &p - &p;
        assert!(q.is_zero());
    }

    #[test]
    fn product_and_derivative() {
        // (1 + i x)(1 - i x) = 1 + x²
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let prod = &p * &p.conj();
        assert_eq!(prod.coefficients(), &[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(prod.derivative().coefficients(), &[c(0.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(p.modulus_squared(), prod);
    }

    #[test]
    fn gaussian_expectation_uses_moments() {
        // E[3 + x + 2x² + x⁴] = 3 + 2 + 3 = 8
        let p = ComplexPolynomial::from_real(&[3.0, 1.0, 2.0, 0.0, 1.0]);
        assert_eq!(p.gaussian_expectation().unwrap(), c(8.0, 0.0));
    }
}
