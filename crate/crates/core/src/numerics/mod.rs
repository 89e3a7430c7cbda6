//! Special functions, Gaussian moments, polynomial algebra and quadrature.
//!
//! Everything here works in the dimensionless coordinate `x = (q - q0) / sigma`,
//! where the packet density is the standard normal `Φ̃(x) = (2π)^{-1/2} e^{-x²/2}`.

mod hermite;
mod moments;
mod polynomial;
mod quadrature;

pub use hermite::{hermite_eval, hermite_monomial_coefficients, hermite_series_derivative, hermite_series_eval};
pub use moments::{double_factorial_odd, gaussian_moment, standard_normal_density, MAX_MOMENT_ORDER};
pub use polynomial::ComplexPolynomial;
pub use quadrature::{
    gauss_legendre, integrate, integrate_oscillatory, Domain, GaussLegendre, QuadValue, QuadratureResult,
    DEFAULT_MAX_SUBDIVISIONS,
};
