//! Fourier pricing of payoffs `f(x) = int e^{(u + iy)^T x} f~(y) dy`, with the
//! dampened call transform and the Heston call price as the main instance.
//!
//! The price at `t` of such a payoff is
//!
//! ```text
//! pi(t) = int e^{Phi(T-t, u+iy) + Psi(T-t, u+iy)^T X(t)} f~(y) dy,
//! ```
//!
//! and since the integrand at `-y` is the conjugate of the one at `y`, only
//! `y >= 0` is integrated and the real part doubled.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::HestonParams;
use crate::params::{AffineParams, ShortRateSpec, StateVector};
use crate::pricing::{discounted_transform, PriceMethod, PriceResult};
use crate::riccati::{blow_up_time, real_u, BlowUp, RiccatiSystem};
use crate::special::{norm_cdf, norm_pdf, pairwise_sum};

/// Default absolute tolerance of the quadrature.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Default dampening with the stock-subtracted variant.
pub const DEFAULT_P: f64 = 0.5;

/// Which of the two call representations is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallVariant {
    /// `p > 1`: transform of `(e^x - K)^+` itself.
    Plain,
    /// `0 < p < 1`: transform of `(e^x - K)^+ - e^x`; the stock is added back.
    StockSubtracted,
}

impl CallVariant {
    /// The variant a dampening `p` belongs to.
    pub fn for_p(p: f64) -> Result<Self> {
        if p > 1.0 {
            Ok(CallVariant::Plain)
        } else if p > 0.0 && p < 1.0 {
            Ok(CallVariant::StockSubtracted)
        } else {
            Err(Error::InvalidArgument(format!(
                "dampening p = {p} must lie in (0, 1) or (1, inf)"
            )))
        }
    }

    pub fn from_index(v: u8) -> Result<Self> {
        match v {
            1 => Ok(CallVariant::Plain),
            2 => Ok(CallVariant::StockSubtracted),
            _ => Err(Error::InvalidArgument(format!("variant must be 1 or 2, got {v}"))),
        }
    }
}

/// Dampened transform of a call on the last coordinate `x = log S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffTransform {
    pub strike: f64,
    /// Dampening exponent (the real part of the transform argument).
    pub p: f64,
    pub variant: CallVariant,
}

/// Builds the call transform for strike `k` and dampening `p`.
pub fn call_transform(k: f64, p: f64) -> Result<PayoffTransform> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("strike must be positive, got {k}")));
    }
    let variant = CallVariant::for_p(p)?;
    Ok(PayoffTransform { strike: k, p, variant })
}

impl PayoffTransform {
    /// `h^(y) = K^{1-p-iy} / ((p+iy)(p+iy-1))`.
    pub fn h_hat(&self, y: f64) -> Complex64 {
        let z = Complex64::new(self.p, y);
        let k_pow = (Complex64::new(1.0, 0.0) - z) * self.strike.ln();
        k_pow.exp() / (z * (z - 1.0))
    }

    /// `f~(y) = h^(y) / (2 pi)`.
    pub fn f_tilde(&self, y: f64) -> Complex64 {
        self.h_hat(y) / (2.0 * std::f64::consts::PI)
    }

    /// Payoff represented by the transform (for checks).
    pub fn payoff(&self, x: f64) -> f64 {
        match self.variant {
            CallVariant::Plain => (x.exp() - self.strike).max(0.0),
            // (e^x - K)^+ - e^x without the cancellation for large x
            CallVariant::StockSubtracted => -x.exp().min(self.strike),
        }
    }

    /// Integration cut-off `Y` such that `int_Y^inf bound / y^2 dy <= tol`
    /// where `bound` majorises `|pi(y) y^2|` for the one-sided integrand.
    fn cutoff(&self, moment: f64, tol: f64) -> f64 {
        let c = moment * self.strike.powf(1.0 - self.p) / std::f64::consts::PI;
        (c / tol).max(1.0)
    }
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[0, y_max]`, split
/// into geometrically growing panels `[0,1], [1,2], [2,4], ...`.
/// Returns `(integral, error estimate)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, y_max: f64, abs_tol: f64) -> (f64, f64) {
    let mut edges = vec![0.0, 1.0_f64.min(y_max)];
    while *edges.last().unwrap() < y_max {
        let next = (2.0 * edges.last().unwrap()).min(y_max);
        edges.push(next);
    }
    let panels = (edges.len() - 1) as f64;
    let mut vals = Vec::with_capacity(edges.len());
    let mut errs = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let (v, e) = adaptive_gk(&f, w[0], w[1], abs_tol / panels, 0);
        vals.push(v);
        errs.push(e);
    }
    (pairwise_sum(&vals), pairwise_sum(&errs))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_W: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G7_W: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = K15_W[7] * fc;
    let mut g = G7_W[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        k += K15_W[i] * s;
        if i % 2 == 1 {
            g += G7_W[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (v, e) = gk15(f, a, b);
    if e <= tol || depth >= 40 || (b - a) < 1e-12 * a.abs().max(1.0) {
        return (v, e);
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adaptive_gk(f, a, m, 0.5 * tol, depth + 1);
    let (v2, e2) = adaptive_gk(f, m, b, 0.5 * tol, depth + 1);
    (v1 + v2, e1 + e2)
}

/// Price of the call payoff on the last state coordinate (`S = e^{X_d}`) in a
/// generic affine model, by quadrature of the discounted transform.
pub fn transform_price(
    p: &AffineParams,
    srs: &ShortRateSpec,
    x: &StateVector,
    t: f64,
    big_t: f64,
    pt: &PayoffTransform,
    abs_tol: f64,
) -> Result<PriceResult> {
    let d = p.dim();
    if x.dim() != d {
        return Err(Error::Dimension(format!("state has length {}, expected {d}", x.dim())));
    }
    let tau = big_t - t;
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("need t <= T, got t={t}, T={big_t}")));
    }
    let xs = x.0.as_slice();
    let log_s = xs[d - 1];
    if tau == 0.0 {
        return Ok(PriceResult::closed_form(pt.payoff(log_s)));
    }
    let mut anchor = vec![0.0; d];
    anchor[d - 1] = pt.p;
    let plain = RiccatiSystem::plain(p.clone())?;
    if let BlowUp::At(_) = blow_up_time(&plain, &real_u(&anchor), tau)? {
        return Err(Error::Strip { p: pt.p, horizon: tau });
    }
    let moment = discounted_transform(p, srs, &real_u(&anchor), tau)
        .map_err(|_| Error::Strip { p: pt.p, horizon: tau })?
        .transform_at(xs)
        .norm();
    let transform = |y: f64| -> Result<Complex64> {
        let mut u = vec![Complex64::new(0.0, 0.0); d];
        u[d - 1] = Complex64::new(pt.p, y);
        Ok(discounted_transform(p, srs, &u, tau)?.transform_at(xs))
    };
    // The Riccati solve gets more expensive as y grows, so the crude cut-off
    // is shortened once the observed envelope |transform(y)| K^{1-p} / (pi y)
    // falls well below the tolerance.
    let mut y_max = pt.cutoff(moment, abs_tol);
    let mut y = 8.0;
    while y < y_max {
        let env = transform(y).map(|z| z.norm()).unwrap_or(f64::INFINITY);
        if env * pt.strike.powf(1.0 - pt.p) / (std::f64::consts::PI * y) <= 1e-2 * abs_tol {
            y_max = y;
            break;
        }
        y *= 2.0;
    }
    let integrand = |y: f64| -> f64 {
        match transform(y) {
            Ok(z) => (z * pt.h_hat(y)).re / std::f64::consts::PI,
            Err(_) => f64::NAN,
        }
    };
    let (v, e) = integrate_half_line(integrand, y_max, abs_tol);
    if !v.is_finite() {
        return Err(Error::Strip { p: pt.p, horizon: tau });
    }
    let value = match pt.variant {
        CallVariant::Plain => v,
        // Discounted stock price at t: the stock itself when the stock
        // discounted at r is a martingale, taken from the transform at u = e_d.
        CallVariant::StockSubtracted => {
            let mut e_d = vec![Complex64::new(0.0, 0.0); d];
            e_d[d - 1] = Complex64::new(1.0, 0.0);
            v + discounted_transform(p, srs, &e_d, tau)?.transform_at(xs).re
        }
    };
    Ok(PriceResult {
        value,
        method: PriceMethod::Quadrature,
        err: e,
    })
}

/// European call on `S = e^{X2}` in the Heston model from the closed-form
/// exponents. `variant` must match `p` (plain for `p > 1`, stock-subtracted
/// for `0 < p < 1`).
pub fn heston_call(hp: &HestonParams, t: f64, big_t: f64, k: f64, p: f64, variant: CallVariant) -> Result<PriceResult> {
    heston_call_tol(hp, t, big_t, k, p, variant, DEFAULT_ABS_TOL)
}

/// [`heston_call`] with an explicit quadrature tolerance.
pub fn heston_call_tol(
    hp: &HestonParams,
    t: f64,
    big_t: f64,
    k: f64,
    p: f64,
    variant: CallVariant,
    abs_tol: f64,
) -> Result<PriceResult> {
    let pt = call_transform(k, p)?;
    if pt.variant != variant {
        return Err(Error::InvalidArgument(format!(
            "p = {p} belongs to the {:?} variant, not {variant:?}",
            pt.variant
        )));
    }
    let tau = big_t - t;
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("need t <= T, got t={t}, T={big_t}")));
    }
    let s_t = hp.x2_0.exp();
    if tau == 0.0 {
        return Ok(PriceResult::closed_form((s_t - k).max(0.0)));
    }
    let zero = Complex64::new(0.0, 0.0);
    let disc = (-hp.r * tau).exp();
    let transform = |y: f64| -> Result<Complex64> {
        let s = hp.phi_psi(tau, zero, Complex64::new(p, y))?;
        Ok((s.phi + s.psi[0] * hp.x1_0 + s.psi[1] * hp.x2_0).exp())
    };
    let moment = transform(0.0).map_err(|_| Error::Strip { p, horizon: tau })?.re;
    if !(moment.is_finite() && moment > 0.0) {
        return Err(Error::Strip { p, horizon: tau });
    }
    let y_max = pt.cutoff(disc * moment, abs_tol);
    let integrand = |y: f64| -> f64 {
        match transform(y) {
            Ok(v) => disc * (v * pt.h_hat(y)).re / std::f64::consts::PI,
            Err(_) => f64::NAN,
        }
    };
    let (v, e) = integrate_half_line(integrand, y_max, abs_tol);
    if !v.is_finite() {
        return Err(Error::Strip { p, horizon: tau });
    }
    let value = match variant {
        CallVariant::Plain => v,
        CallVariant::StockSubtracted => v + s_t,
    };
    Ok(PriceResult {
        value,
        method: PriceMethod::Quadrature,
        err: e,
    })
}

/// Black-Scholes call price.
pub fn bs_call(s0: f64, k: f64, r: f64, tau: f64, sigma: f64) -> f64 {
    let df = (-r * tau).exp();
    if sigma <= 0.0 || tau <= 0.0 {
        return (s0 - k * df).max(0.0);
    }
    let sd = sigma * tau.sqrt();
    let d1 = ((s0 / k).ln() + r * tau) / sd + 0.5 * sd;
    s0 * norm_cdf(d1) - k * df * norm_cdf(d1 - sd)
}

fn bs_vega(s0: f64, k: f64, r: f64, tau: f64, sigma: f64) -> f64 {
    let sd = sigma * tau.sqrt();
    let d1 = ((s0 / k).ln() + r * tau) / sd + 0.5 * sd;
    s0 * norm_pdf(d1) * tau.sqrt()
}

/// Black-Scholes implied volatility of a call price.
pub fn bs_implied_vol(price: f64, s0: f64, k: f64, r: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && s0 > 0.0 && k > 0.0) {
        return Err(Error::InvalidArgument("need tau, S0, K > 0".into()));
    }
    let lower = (s0 - k * (-r * tau).exp()).max(0.0);
    if !(price > lower && price < s0) {
        return Err(Error::NoSolution(format!(
            "call price {price} outside the no-arbitrage range ({lower}, {s0})"
        )));
    }
    crate::pricing::solve_vol(
        |s| bs_call(s0, k, r, tau, s),
        |s| bs_vega(s0, k, r, tau, s),
        price,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_hat_at_origin() {
        let pt = call_transform(1.0, 2.0).unwrap();
        assert!((pt.h_hat(0.0) - Complex64::new(0.5, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn rejects_poles() {
        assert!(call_transform(1.0, 1.0).is_err());
        assert!(call_transform(1.0, 0.0).is_err());
        assert!(call_transform(0.0, 2.0).is_err());
    }

    #[test]
    fn gk_integrates_smooth_functions() {
        let (v, _) = integrate_half_line(|y| (-y).exp(), 60.0, 1e-13);
        assert!((v - (1.0 - (-60.0f64).exp())).abs() < 1e-12);
        let (v, _) = integrate_half_line(|y| 1.0 / (1.0 + y * y), 1e6, 1e-12);
        assert!((v - (std::f64::consts::FRAC_PI_2 - (1e-6f64).atan())).abs() < 1e-10);
    }

    #[test]
    fn bs_round_trip() {
        let c = bs_call(1.0, 1.1, 0.01, 2.0, 0.2);
        let s = bs_implied_vol(c, 1.0, 1.1, 0.01, 2.0).unwrap();
        assert!((s - 0.2).abs() < 1e-10);
        assert!(bs_implied_vol(1.0 - 1.1 * f64::exp(-0.02), 1.0, 1.1, 0.01, 2.0).is_err());
    }
}
