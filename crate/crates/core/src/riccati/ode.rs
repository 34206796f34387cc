//! Adaptive Dormand-Prince 5(4) integrator over real or complex state vectors.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Scalar type the integrator can step: a vector space over `f64` with a
/// magnitude for error control.
pub trait OdeScalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl OdeScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Steps shorter than `min_step_rel * |t_end|` count as a blow-up.
    pub min_step_rel: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
            min_step_rel: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure {
    /// The `diverged` predicate fired or the step size underflowed.
    Diverged { reached: f64 },
    MaxSteps { reached: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` through every time in `outputs`
/// (ascending, all `>= t0`), calling `record(k, t_k, y(t_k))` at each.
///
/// `diverged` is evaluated after every accepted step; returning `true` aborts
/// with [`OdeFailure::Diverged`] carrying the last accepted time.
pub fn integrate<T, F, D, R>(
    mut f: F,
    t0: f64,
    y0: &[T],
    outputs: &[f64],
    opts: &OdeOptions,
    mut diverged: D,
    mut record: R,
) -> Result<OdeStats, OdeFailure>
where
    T: OdeScalar,
    F: FnMut(f64, &[T], &mut [T]),
    D: FnMut(&[T]) -> bool,
    R: FnMut(usize, f64, &[T]),
{
    let dim = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let t_end = outputs.last().copied().unwrap_or(t0);
    let span = (t_end - t0).abs().max(f64::MIN_POSITIVE);
    let h_min = opts.min_step_rel * t_end.abs().max(span);

    let z = T::zero();
    let mut k1 = vec![z; dim];
    let mut k2 = vec![z; dim];
    let mut k3 = vec![z; dim];
    let mut k4 = vec![z; dim];
    let mut k5 = vec![z; dim];
    let mut k6 = vec![z; dim];
    let mut k7 = vec![z; dim];
    let mut tmp = vec![z; dim];
    let mut ynew = vec![z; dim];

    f(t, &y, &mut k1);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, span, opts, &mut stats);

    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t {
        record(next_out, t, &y);
        next_out += 1;
    }

    while next_out < outputs.len() {
        let target = outputs[next_out];
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeFailure::MaxSteps { reached: t });
        }
        let mut hit = false;
        if t + h >= target || target - (t + h) < 1e-12 * span {
            h = target - t;
            hit = true;
        }

        for i in 0..dim {
            tmp[i] = y[i] + k1[i] * (h * A21);
        }
        f(t + C2 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + k1[i] * (h * A31) + k2[i] * (h * A32);
        }
        f(t + C3 * h, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + k1[i] * (h * A41) + k2[i] * (h * A42) + k3[i] * (h * A43);
        }
        f(t + C4 * h, &tmp, &mut k4);
        for i in 0..dim {
            tmp[i] = y[i]
                + k1[i] * (h * A51)
                + k2[i] * (h * A52)
                + k3[i] * (h * A53)
                + k4[i] * (h * A54);
        }
        f(t + C5 * h, &tmp, &mut k5);
        for i in 0..dim {
            tmp[i] = y[i]
                + k1[i] * (h * A61)
                + k2[i] * (h * A62)
                + k3[i] * (h * A63)
                + k4[i] * (h * A64)
                + k5[i] * (h * A65);
        }
        f(t + h, &tmp, &mut k6);
        for i in 0..dim {
            ynew[i] = y[i]
                + k1[i] * (h * B1)
                + k3[i] * (h * B3)
                + k4[i] * (h * B4)
                + k5[i] * (h * B5)
                + k6[i] * (h * B6);
        }
        f(t + h, &ynew, &mut k7);
        stats.evaluations += 6;

        let mut err = 0.0f64;
        let mut finite = true;
        for i in 0..dim {
            let e = k1[i] * (h * E1)
                + k3[i] * (h * E3)
                + k4[i] * (h * E4)
                + k5[i] * (h * E5)
                + k6[i] * (h * E6)
                + k7[i] * (h * E7);
            let sc = opts.atol + opts.rtol * y[i].magnitude().max(ynew[i].magnitude());
            let r = e.magnitude() / sc;
            if !r.is_finite() {
                finite = false;
            }
            err = err.max(r);
        }

        if finite && err <= 1.0 {
            stats.accepted += 1;
            t = if hit { target } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if diverged(&y) {
                return Err(OdeFailure::Diverged { reached: t });
            }
            while next_out < outputs.len() && outputs[next_out] <= t {
                record(next_out, t, &y);
                next_out += 1;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            if h < h_min {
                return Err(OdeFailure::Diverged { reached: t });
            }
        }
    }
    Ok(stats)
}

fn initial_step<T, F>(
    f: &mut F,
    t: f64,
    y: &[T],
    f0: &[T],
    span: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    T: OdeScalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    let dim = y.len();
    let scale: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.magnitude()).collect();
    let rms = |v: &[T]| -> f64 {
        if dim == 0 {
            return 0.0;
        }
        (v.iter().zip(&scale).map(|(a, s)| (a.magnitude() / s).powi(2)).sum::<f64>() / dim as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<T> = y.iter().zip(f0).map(|(a, b)| *a + *b * h0).collect();
    let mut f1 = vec![T::zero(); dim];
    f(t + h0, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<T> = f1.iter().zip(f0).map(|(a, b)| *a - *b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut out = Vec::new();
        integrate(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            &[1.0],
            &[0.5, 1.0, 3.0],
            &OdeOptions::default(),
            |_| false,
            |_, t, y| out.push((t, y[0])),
        )
        .unwrap();
        assert_eq!(out.len(), 3);
        for (t, y) in out {
            assert!((y - (-t).exp()).abs() < 1e-11, "t={t} y={y}");
        }
    }

    #[test]
    fn complex_rotation() {
        let i = Complex64::new(0.0, 1.0);
        let mut last = Complex64::new(0.0, 0.0);
        integrate(
            |_t, y: &[Complex64], dy: &mut [Complex64]| dy[0] = i * y[0],
            0.0,
            &[Complex64::new(1.0, 0.0)],
            &[10.0],
            &OdeOptions::default(),
            |_| false,
            |_, _, y| last = y[0],
        )
        .unwrap();
        assert!((last - (i * 10.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y^2, y(0) = 1 explodes at t = 1.
        let res = integrate(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            &[2.0],
            &OdeOptions::default(),
            |y| y[0].abs() > 1e8,
            |_, _, _| {},
        );
        match res {
            Err(OdeFailure::Diverged { reached }) => assert!((reached - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }
}
