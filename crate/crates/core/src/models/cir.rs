//! CIR short rate `dr = (b + beta r) dt + sigma sqrt(r) dW`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::AffineModel;
use crate::error::{Error, Result};
use crate::params::{AffineParams, ShortRateSpec, StateVector};
use crate::riccati::{scalar_riccati, PhiPsi, ScalarRiccatiSpec};
use crate::special::exp_rem_scaled as g;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub b: f64,
    pub beta: f64,
    pub sigma: f64,
    pub r0: f64,
}

/// Laws of `r(T)` under the `S`-forward measure: `2 r(T) / c1` is noncentral
/// chi-squared with `delta` degrees of freedom and noncentrality `zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardChiSq {
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub zeta: f64,
}

/// The functions `L1..L5` at a fixed time, each multiplied by `e^{-lambda t}`
/// so that they stay finite for large `t`. Ratios are unaffected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirLFunctions {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
}

impl CirParams {
    pub fn new(b: f64, beta: f64, sigma: f64, r0: f64) -> Result<Self> {
        if !(b >= 0.0) || !(sigma >= 0.0) || !(r0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "CIR requires b >= 0, sigma >= 0, r0 >= 0 (got b={b}, sigma={sigma}, r0={r0})"
            )));
        }
        Ok(CirParams { b, beta, sigma, r0 })
    }

    /// `lambda = sqrt(beta^2 + 2 sigma^2)`.
    pub fn lambda(&self) -> f64 {
        (self.beta * self.beta + 2.0 * self.sigma * self.sigma).sqrt()
    }

    pub fn l_functions(&self, t: f64) -> CirLFunctions {
        let lam = self.lambda();
        let s2 = self.sigma * self.sigma;
        // 1 - e^{-lambda t} without cancellation for small lambda t
        let one_m = -(-lam * t).exp_m1();
        let one_p = 1.0 + (-lam * t).exp();
        CirLFunctions {
            l1: 2.0 * one_m,
            l2: lam * one_p + self.beta * one_m,
            l3: lam * one_p - self.beta * one_m,
            l4: s2 * one_m,
            l5: 2.0 * lam * (-(lam + self.beta) * t / 2.0).exp(),
        }
    }

    /// Discounted exponents `(Phi, Psi)` for `r = x`.
    pub fn phi_psi(&self, t: f64, u: Complex64) -> Result<PhiPsi> {
        let (psi, int_psi) = if self.sigma == 0.0 {
            // Linear equation Psi' = beta Psi - 1.
            let x = self.beta * t;
            (u * x.exp() - t * g(1, x), u * (t * g(1, x)) - t * t * g(2, x))
        } else {
            let spec = ScalarRiccatiSpec::new(
                Complex64::new(0.5 * self.sigma * self.sigma, 0.0),
                Complex64::new(self.beta, 0.0),
                Complex64::new(1.0, 0.0),
                u,
            );
            scalar_riccati(&spec, t)?
        };
        Ok(PhiPsi {
            t,
            u: vec![u],
            phi: int_psi * self.b,
            psi: vec![psi],
        })
    }

    /// `A(t) = -Phi(t, 0)`.
    pub fn bond_a(&self, tau: f64) -> f64 {
        if self.sigma == 0.0 {
            let x = self.beta * tau;
            return self.b * tau * tau * g(2, x);
        }
        let l = self.l_functions(tau);
        -(2.0 * self.b / (self.sigma * self.sigma)) * (l.l5 / l.l3).ln()
    }

    /// `B(t) = -Psi(t, 0) = L1 / L3`.
    pub fn bond_b(&self, tau: f64) -> f64 {
        if self.sigma == 0.0 {
            return tau * g(1, self.beta * tau);
        }
        let l = self.l_functions(tau);
        l.l1 / l.l3
    }

    pub fn bond_price(&self, r_t: f64, tau: f64) -> f64 {
        (-self.bond_a(tau) - self.bond_b(tau) * r_t).exp()
    }

    /// Parameters of the `S`-forward law of `r(T)` given `r(t) = r_t`.
    /// Requires `t < T <= S`; at `T = t` the law is a point mass.
    pub fn forward_chisq(&self, r_t: f64, t: f64, big_t: f64, s: f64) -> Result<ForwardChiSq> {
        if self.sigma <= 0.0 {
            return Err(Error::InvalidArgument(
                "forward chi-squared law needs sigma > 0; with sigma = 0 the rate is deterministic".into(),
            ));
        }
        if !(t < big_t && big_t <= s) || r_t < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "need t < T <= S and r_t >= 0, got t={t}, T={big_t}, S={s}, r_t={r_t}"
            )));
        }
        let lam = self.lambda();
        let l_st = self.l_functions(s - big_t);
        let l_tt = self.l_functions(big_t - t);
        let l_s = self.l_functions(s - t);
        let c1 = l_st.l3 * l_tt.l4 / (2.0 * lam * l_s.l3);
        let c2 = l_tt.l2 / l_tt.l4 - l_s.l1 / l_s.l3;
        let s2 = self.sigma * self.sigma;
        Ok(ForwardChiSq {
            c1,
            c2,
            delta: 4.0 * self.b / s2,
            zeta: 2.0 * c2 * r_t,
        })
    }
}

impl ForwardChiSq {
    /// Characteristic function of `r(T)`: `E[e^{v r(T)}]` for `Re v < 1/c1`.
    pub fn char_fn(&self, v: Complex64) -> Complex64 {
        let w = v * (self.c1 / 2.0);
        let one = Complex64::new(1.0, 0.0);
        let den = one - w * 2.0;
        (w * self.zeta / den).exp() / den.powf(self.delta / 2.0)
    }
}

impl AffineModel for CirParams {
    fn as_affine(&self) -> (AffineParams, ShortRateSpec, StateVector) {
        let p = AffineParams {
            m: 1,
            n: 0,
            a: DMatrix::zeros(1, 1),
            alphas: vec![DMatrix::from_element(1, 1, self.sigma * self.sigma)],
            b: DVector::from_element(1, self.b),
            bmat: DMatrix::from_element(1, 1, self.beta),
        };
        (p, ShortRateSpec::new(0.0, vec![1.0]), StateVector::new(vec![self.r0]))
    }
}
