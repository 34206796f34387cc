//! Closed-form solution of the scalar Riccati equation
//! `dG/dt = A G^2 + B G - C`, `G(0) = u`, together with `int_0^t G ds`.
//!
//! With `lambda = sqrt(B^2 + 4AC)` (principal branch, `Re lambda >= 0`) and
//! `E = e^{-lambda t}` the solution is evaluated in the overflow-free form
//!
//! ```text
//! D~(t) = lambda (1 + E) - B (1 - E) - 2 A (1 - E) u
//! G(t)  = -(2 C (1 - E) - (lambda (1 + E) + B (1 - E)) u) / D~(t)
//! int G = (1/A) (log(2 lambda) - (lambda + B) t / 2 - log D~(t))
//! ```
//!
//! where `log D~` is continued continuously from `D~(0) = 2 lambda` along
//! `[0, t]` rather than taken on the principal branch at `t` alone.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this `|lambda|` the `lambda -> 0` limit forms are used.
const LAMBDA_EPS: f64 = 1e-8;
const DENOM_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRiccatiSpec {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub u: Complex64,
}

impl ScalarRiccatiSpec {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, u: Complex64) -> Self {
        ScalarRiccatiSpec { a, b, c, u }
    }

    pub fn real(a: f64, b: f64, c: f64, u: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), u.into())
    }

    pub fn lambda(&self) -> Complex64 {
        (self.b * self.b + self.a * self.c * 4.0).sqrt()
    }

    fn check(&self) -> Result<()> {
        if self.a == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument("scalar Riccati requires A != 0".into()));
        }
        let disc = self.b * self.b + self.a * self.c * 4.0;
        if disc.im == 0.0 && disc.re < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "B^2 + 4AC = {} lies on the negative real axis",
                disc.re
            )));
        }
        Ok(())
    }

    /// Scaled denominator `D~(s)` (or its `lambda -> 0` limit).
    fn denom(&self, lambda: Complex64, s: f64) -> Complex64 {
        let (a, b, u) = (self.a, self.b, self.u);
        if lambda.norm() < LAMBDA_EPS {
            Complex64::new(2.0, 0.0) - b * s - a * u * (2.0 * s)
        } else {
            let e = (-lambda * s).exp();
            let one = Complex64::new(1.0, 0.0);
            lambda * (one + e) - b * (one - e) - a * u * (one - e) * 2.0
        }
    }

    /// Explosion time for real data with `B^2 + 4AC > 0`: the first root of
    /// the denominator, if any.
    pub fn explosion_time(&self) -> Option<f64> {
        let (a, b, c, u) = (self.a.re, self.b.re, self.c.re, self.u.re);
        let disc = b * b + 4.0 * a * c;
        if disc <= 0.0 || a == 0.0 {
            return None;
        }
        let lam = disc.sqrt();
        // lambda (e + 1) - B (e - 1) - 2 A (e - 1) u = 0, e = e^{lambda t}
        let num = -(lam + b + 2.0 * a * u);
        let den = lam - b - 2.0 * a * u;
        if den == 0.0 {
            return None;
        }
        let ratio = num / den;
        if ratio > 1.0 {
            Some(ratio.ln() / lam)
        } else {
            None
        }
    }
}

/// Evaluates `(G(t), int_0^t G ds)`.
pub fn scalar_riccati(spec: &ScalarRiccatiSpec, t: f64) -> Result<(Complex64, Complex64)> {
    spec.check()?;
    if t == 0.0 {
        return Ok((spec.u, Complex64::new(0.0, 0.0)));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be nonnegative, got {t}")));
    }
    let lambda = spec.lambda();
    let small = lambda.norm() < LAMBDA_EPS;
    let (a, b, c, u) = (spec.a, spec.b, spec.c, spec.u);
    let one = Complex64::new(1.0, 0.0);

    let den = spec.denom(lambda, t);
    let scale = if small { 2.0 } else { lambda.norm() } + b.norm() + (a * u).norm() * 2.0;
    if den.norm() < DENOM_EPS * scale.max(1.0) {
        return Err(Error::Explosion { reached: t });
    }
    let log_den = tracked_log(|s| spec.denom(lambda, s), t)?;

    let (g, integral) = if small {
        let g = -(c * (2.0 * t) - (b * t + 2.0) * u) / den;
        let ig = (Complex64::new(2.0f64.ln(), 0.0) - b * (0.5 * t) - log_den) / a;
        (g, ig)
    } else {
        let e = (-lambda * t).exp();
        let g = -(c * (one - e) * 2.0 - (lambda * (one + e) + b * (one - e)) * u) / den;
        let ig = ((lambda * 2.0).ln() - (lambda + b) * (0.5 * t) - log_den) / a;
        (g, ig)
    };
    Ok((g, integral))
}

/// Continuous logarithm of `f` along `[0, t]`, starting from the principal
/// value at `s = 0`.
///
/// The argument is unwrapped over a uniform grid, refining any sub-interval
/// whose phase increment exceeds `pi/4`. A zero crossing that cannot be
/// resolved down to `1e-12 t` is reported as an explosion at its left end.
pub fn tracked_log<F: Fn(f64) -> Complex64>(f: F, t: f64) -> Result<Complex64> {
    const GRID: usize = 16;
    let start = f(0.0);
    let mut arg = start.arg();
    let mut prev = start;
    let mut s_prev = 0.0;
    for k in 1..=GRID {
        let s = t * k as f64 / GRID as f64;
        let cur = f(s);
        arg += phase_increment(&f, s_prev, prev, s, cur, t, 0)?;
        prev = cur;
        s_prev = s;
    }
    Ok(Complex64::new(prev.norm().ln(), arg))
}

fn phase_increment<F: Fn(f64) -> Complex64>(
    f: &F,
    s0: f64,
    v0: Complex64,
    s1: f64,
    v1: Complex64,
    t: f64,
    depth: u32,
) -> Result<f64> {
    if v0.norm() == 0.0 || v1.norm() == 0.0 || !v1.is_finite() {
        return Err(Error::Explosion { reached: s0 });
    }
    let inc = (v1 / v0).arg();
    if inc.abs() <= std::f64::consts::FRAC_PI_4 {
        return Ok(inc);
    }
    if s1 - s0 < 1e-12 * t.max(1.0) || depth > 60 {
        return Err(Error::Explosion { reached: s0 });
    }
    let sm = 0.5 * (s0 + s1);
    let vm = f(sm);
    Ok(phase_increment(f, s0, v0, sm, vm, t, depth + 1)? + phase_increment(f, sm, vm, s1, v1, t, depth + 1)?)
}
