//! Scalar special functions and summation helpers shared across modules.

use libm::erfc;
use num_complex::Complex64;

/// Standard normal CDF, computed through `erfc` so the lower tail keeps full
/// relative precision.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how work was split across threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `(e^{x} - 1) / x` with the removable singularity at zero filled in.
pub fn expm1_over_x(x: f64) -> f64 {
    exp_rem_scaled(1, x)
}

/// `(e^y - sum_{j<k} y^j / j!) / y^k`, i.e. the scaled Taylor remainder of
/// the exponential. Evaluated by its power series near zero, where the direct
/// formula cancels catastrophically.
pub fn exp_rem_scaled(k: u32, y: f64) -> f64 {
    if y.abs() < 1.0 {
        let mut term = 1.0 / factorial(k);
        let mut sum = term;
        let mut j = k;
        loop {
            j += 1;
            term *= y / j as f64;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                return sum;
            }
        }
    }
    let mut partial = 0.0;
    let mut pow = 1.0;
    for j in 0..k {
        partial += pow / factorial(j);
        pow *= y;
    }
    (y.exp() - partial) / pow
}

/// Complex counterpart of [`exp_rem_scaled`].
pub fn exp_rem_scaled_c(k: u32, z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        let mut term = Complex64::new(1.0 / factorial(k), 0.0);
        let mut sum = term;
        let mut j = k;
        loop {
            j += 1;
            term = term * z / j as f64;
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() {
                return sum;
            }
        }
    }
    let mut partial = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    for j in 0..k {
        partial += pow / factorial(j);
        pow *= z;
    }
    (z.exp() - partial) / pow
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        // Phi(1.96) and Phi(-3) from standard tables (high precision values).
        assert!((norm_cdf(1.96) - 0.975_002_104_851_779_6).abs() < 1e-15);
        assert!((norm_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&xs), 2475.0);
    }

    #[test]
    fn exp_remainders_match_direct_formula_away_from_zero() {
        for y in [-3.0, -1.5, 1.2, 4.0] {
            let direct3 = (f64::exp(y) - 1.0 - y - 0.5 * y * y) / (y * y * y);
            assert!((exp_rem_scaled(3, y) - direct3).abs() < 1e-14);
        }
        // Series branch at the switch point agrees with the direct branch.
        let y = 0.999_999_9;
        let direct2 = (f64::exp(y) - 1.0 - y) / (y * y);
        assert!((exp_rem_scaled(2, y) - direct2).abs() < 1e-13);
        assert_eq!(exp_rem_scaled(2, 0.0), 0.5);
        let z = Complex64::new(0.3, -0.4);
        let direct = (z.exp() - 1.0) / z;
        assert!((exp_rem_scaled_c(1, z) - direct).norm() < 1e-15);
    }

    #[test]
    fn expm1_over_x_limit() {
        assert_eq!(expm1_over_x(0.0), 1.0);
        assert!((expm1_over_x(1e-3) - (1e-3f64).exp_m1() / 1e-3).abs() < 1e-15);
    }
}
