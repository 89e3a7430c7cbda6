/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence
/// `H_{n+1} = 2x H_n - 2n H_{n-1}`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let mut prev = 1.0;
            let mut cur = 2.0 * x;
            for k in 1..n {
                let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Monomial coefficients of `H_n` (index = power of x).
pub fn hermite_monomial_coefficients(n: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= 2.0 * k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Evaluates `Σ_j c_j H_j(x)` with a single forward recurrence.
pub fn hermite_series_eval(coefficients: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for (j, &c) in coefficients.iter().enumerate() {
        if j == 1 {
            prev = 1.0;
            cur = 2.0 * x;
        } else if j > 1 {
            let next = 2.0 * x * cur - 2.0 * (j - 1) as f64 * prev;
            prev = cur;
            cur = next;
        }
        sum += c * cur;
    }
    sum
}

/// Term-wise derivative of a Hermite series, using `H_j' = 2j H_{j-1}`.
pub fn hermite_series_derivative(coefficients: &[f64]) -> Vec<f64> {
    coefficients.iter().enumerate().skip(1).map(|(j, &c)| 2.0 * j as f64 * c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        assert_eq!(hermite_eval(0, 3.7), 1.0);
        assert_eq!(hermite_eval(1, 2.0), 4.0);
        assert_eq!(hermite_eval(3, 1.0), -4.0);
        // H_3 = 8x^3 - 12x
        assert_eq!(hermite_monomial_coefficients(3), vec![0.0, -12.0, 0.0, 8.0]);
    }

    #[test]
    fn series_matches_single_terms() {
        let c = [0.5, -1.0, 0.25, 2.0, 0.0, 1.5];
        for &x in &[-2.3, -0.1, 0.0, 0.7, 3.1] {
            let direct: f64 = c.iter().enumerate().map(|(j, &cj)| cj * hermite_eval(j, x)).sum();
            assert!((hermite_series_eval(&c, x) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn monomial_form_agrees_with_recurrence() {
        for n in 0..=14 {
            let coeffs = hermite_monomial_coefficients(n);
            for &x in &[-1.7, 0.3, 2.2] {
                let horner = coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
                let rec = hermite_eval(n, x);
                assert!((horner - rec).abs() <= 1e-10 * (1.0 + rec.abs()), "n={n} x={x}");
            }
        }
    }
}
