use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{QtoaError, Result};

/// Largest moment order whose value `(k-1)!!` is representable in `f64`.
pub const MAX_MOMENT_ORDER: usize = 300;

fn moment_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; MAX_MOMENT_ORDER + 1];
        t[0] = 1.0;
        let mut k = 2;
        while k <= MAX_MOMENT_ORDER {
            t[k] = t[k - 2] * (k - 1) as f64;
            k += 2;
        }
        t
    })
}

/// `(2n - 1)!!` for `n >= 0`, with `(-1)!! = 1`.
pub fn double_factorial_odd(n: usize) -> Result<f64> {
    gaussian_moment(2 * n)
}

/// `∫ x^k Φ̃(x) dx`: zero for odd `k`, `(k-1)!!` for even `k`.
pub fn gaussian_moment(k: usize) -> Result<f64> {
    if k > MAX_MOMENT_ORDER {
        return Err(QtoaError::Overflow(format!(
            "gaussian moment of order {k} exceeds f64 range (max order {MAX_MOMENT_ORDER})"
        )));
    }
    Ok(moment_table()[k])
}

/// `Φ̃(x) = (2π)^{-1/2} e^{-x²/2}`.
pub fn standard_normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
