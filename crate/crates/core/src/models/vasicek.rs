//! Vasicek short rate `dr = (b + beta r) dt + sigma dW`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::AffineModel;
use crate::error::{Error, Result};
use crate::params::{AffineParams, ShortRateSpec, StateVector};
use crate::riccati::PhiPsi;
use crate::special::exp_rem_scaled as g;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VasicekParams {
    pub b: f64,
    pub beta: f64,
    pub sigma: f64,
    pub r0: f64,
}

impl VasicekParams {
    pub fn new(b: f64, beta: f64, sigma: f64, r0: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {sigma}")));
        }
        Ok(VasicekParams { b, beta, sigma, r0 })
    }

    /// Discounted exponents `(Phi, Psi)` for `r = x`, valid for every complex `u`.
    ///
    /// All `1/beta` factors are folded into scaled exponential remainders, so
    /// `beta = 0` is covered without a special case.
    pub fn phi_psi(&self, t: f64, u: Complex64) -> PhiPsi {
        let (b, beta, s2) = (self.b, self.beta, self.sigma * self.sigma);
        let x = beta * t;
        let g1 = g(1, x);
        let psi = u * x.exp() - t * g1;
        // int_0^t Psi^2 ds = u^2 (e^{2x}-1)/(2 beta) - u (e^x - 1)^2 / beta^2
        //                    + (e^{2x} - 4 e^x + 2x + 3) / (2 beta^3)
        let f3 = 8.0 * g(3, 2.0 * x) - 4.0 * g(3, x);
        let int_psi2 = u * u * (t * g(1, 2.0 * x)) - u * (t * t * g1 * g1) + 0.5 * t.powi(3) * f3;
        let int_psi = u * (t * g1) - t * t * g(2, x);
        let phi = int_psi2 * (0.5 * s2) + int_psi * b;
        PhiPsi {
            t,
            u: vec![u],
            phi,
            psi: vec![psi],
        }
    }

    /// `A(t) = -Phi(t, 0)` in `P(t, T) = exp(-A(T-t) - B(T-t) r(t))`.
    pub fn bond_a(&self, tau: f64) -> f64 {
        -self.phi_psi(tau, Complex64::new(0.0, 0.0)).phi.re
    }

    /// `B(t) = -Psi(t, 0) = (e^{beta t} - 1) / beta`.
    pub fn bond_b(&self, tau: f64) -> f64 {
        tau * g(1, self.beta * tau)
    }

    pub fn bond_price(&self, r_t: f64, tau: f64) -> f64 {
        (-self.bond_a(tau) - self.bond_b(tau) * r_t).exp()
    }

    /// Mean and variance of `r(T)` given `r(t) = r_t` under the `S`-forward
    /// measure (`t <= T <= S`).
    ///
    /// The drift under `Q^S` is `b + beta r - sigma^2 B(S - s)`; integrating
    /// gives `mean = r_t e^{beta tau} + b tau g1(beta tau) - sigma^2 I` with
    /// `I = int_0^tau e^{beta v} B(S - T + v) dv`, expanded here without
    /// `1/beta` cancellation.
    pub fn forward_gaussian(&self, r_t: f64, t: f64, big_t: f64, s: f64) -> Result<(f64, f64)> {
        if !(t <= big_t && big_t <= s) {
            return Err(Error::InvalidArgument(format!(
                "need t <= T <= S, got {t}, {big_t}, {s}"
            )));
        }
        let (b, beta, s2) = (self.b, self.beta, self.sigma * self.sigma);
        let tau = big_t - t;
        let eps = s - big_t;
        let x = beta * tau;
        let integral = tau
            * (eps * g(1, beta * eps) + 2.0 * tau * g(2, 2.0 * x) - tau * g(2, x)
                + 2.0 * beta * eps * tau * g(1, beta * eps) * g(2, 2.0 * x));
        let mean = r_t * x.exp() + b * tau * g(1, x) - s2 * integral;
        let var = s2 * tau * g(1, 2.0 * x);
        Ok((mean, var))
    }
}

impl AffineModel for VasicekParams {
    fn as_affine(&self) -> (AffineParams, ShortRateSpec, StateVector) {
        let p = AffineParams {
            m: 0,
            n: 1,
            a: DMatrix::from_element(1, 1, self.sigma * self.sigma),
            alphas: vec![],
            b: DVector::from_element(1, self.b),
            bmat: DMatrix::from_element(1, 1, self.beta),
        };
        (p, ShortRateSpec::new(0.0, vec![1.0]), StateVector::new(vec![self.r0]))
    }
}
