//! Shared fixtures and independent numerical oracles for the integration
//! tests. Nothing here calls into the library's own numerics.

#![allow(dead_code)]

use affinekit::models::{CirParams, HestonParams, VasicekParams};
use nalgebra::DMatrix;

pub fn cir() -> CirParams {
    CirParams::new(0.08, -0.9, 0.033f64.sqrt(), 0.08).unwrap()
}

pub fn vasicek() -> VasicekParams {
    VasicekParams::new(0.08, -0.9, 0.1, 0.05).unwrap()
}

pub fn heston() -> HestonParams {
    HestonParams::new(0.02, -2.0, 0.1, 0.5, 0.01, 0.02, 0.0).unwrap()
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Noncentral chi-squared density via the Bessel-function series
/// `f(x) = 1/2 e^{-(x+zeta)/2} (x/zeta)^{delta/4-1/2} I_{delta/2-1}(sqrt(zeta x))`.
pub fn chi2_density(delta: f64, zeta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let nu = 0.5 * delta - 1.0;
    if zeta == 0.0 {
        return ((nu) * x.ln() - 0.5 * x - (nu + 1.0) * 2f64.ln() - ln_gamma(nu + 1.0)).exp();
    }
    // I_nu(z) = sum_k (z/2)^{2k+nu} / (k! Gamma(k+nu+1)), each term in log space.
    let z = (zeta * x).sqrt();
    let log_pref = -0.5 * (x + zeta) + (0.25 * delta - 0.5) * (x / zeta).ln() - 2f64.ln();
    let mut sum = 0.0;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let lt = (2.0 * kf + nu) * (0.5 * z).ln() - ln_gamma(kf + 1.0) - ln_gamma(kf + nu + 1.0) + log_pref;
        let t = lt.exp();
        sum += t;
        if (kf > 0.5 * z && t < 1e-18 * sum) || k > 5000 {
            break;
        }
        k += 1;
    }
    sum
}

/// CDF by quadrature of the density. On `[0, 1]` the substitution
/// `x = s^{2/delta}` removes the `x^{delta/2-1}` singularity at the origin.
pub fn chi2_cdf_by_quadrature(delta: f64, zeta: f64, x: f64) -> f64 {
    let q = 2.0 / delta;
    let g = |s: f64| {
        if s <= 0.0 {
            // limit of f(s^q) q s^{q-1} at 0
            let nu = 0.5 * delta - 1.0;
            return q * (-(0.5 * zeta) - (nu + 1.0) * 2f64.ln() - ln_gamma(nu + 1.0)).exp();
        }
        chi2_density(delta, zeta, s.powf(q)) * q * s.powf(q - 1.0)
    };
    let head = simpson(&g, 0.0, x.min(1.0).powf(0.5 * delta), 1e-14);
    if x <= 1.0 {
        return head;
    }
    let f = |y: f64| chi2_density(delta, zeta, y);
    head + simpson(&f, 1.0, x, 1e-14)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// Fixed-step classical RK4 for complex systems.
pub fn rk4<F>(f: F, y0: &[num_complex::Complex64], t: f64, steps: usize) -> Vec<num_complex::Complex64>
where
    F: Fn(&[num_complex::Complex64]) -> Vec<num_complex::Complex64>,
{
    let h = t / steps as f64;
    let mut y = y0.to_vec();
    let axpy = |y: &[num_complex::Complex64], k: &[num_complex::Complex64], s: f64| -> Vec<num_complex::Complex64> {
        y.iter().zip(k).map(|(a, b)| a + b * s).collect()
    };
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, 0.5 * h));
        let k3 = f(&axpy(&y, &k2, 0.5 * h));
        let k4 = f(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    y
}

/// Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Weighted KS distance (weights normalised to sum one).
pub fn weighted_ks_distance<F: Fn(f64) -> f64>(sample: &[(f64, f64)], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = s.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    for &(x, w) in &s {
        let f = cdf(x);
        d = d.max((f - acc / total).abs());
        acc += w;
        d = d.max((acc / total - f).abs());
    }
    d
}
