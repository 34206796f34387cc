//! Heston model in log-price coordinates:
//! `dX1 = (k + kappa X1) dt + sigma sqrt(2 X1) dW1`,
//! `dX2 = (r - X1) dt + sqrt(2 X1) dW2`, `d<W1, W2> = rho dt`, with
//! `S = e^{X2}` and variance `v = 2 X1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::AffineModel;
use crate::error::{Error, Result};
use crate::params::{AffineParams, ShortRateSpec, StateVector};
use crate::riccati::{scalar_riccati, PhiPsi, ScalarRiccatiSpec};
use crate::special::exp_rem_scaled_c as gc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    pub k: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
    pub r: f64,
    pub x1_0: f64,
    pub x2_0: f64,
}

/// Heston parameters in the usual variance form
/// `dv = kappa_bar (eta - v) dt + sigma_v sqrt(v) dW1`, `dS/S = r dt + sqrt(v) dW2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceForm {
    pub kappa_bar: f64,
    pub eta: f64,
    pub sigma_v: f64,
    pub v0: f64,
    pub r: f64,
    pub rho: f64,
}

impl HestonParams {
    pub fn new(k: f64, kappa: f64, sigma: f64, rho: f64, r: f64, x1_0: f64, x2_0: f64) -> Result<Self> {
        let ok = k >= 0.0 && sigma >= 0.0 && (-1.0..=1.0).contains(&rho) && x1_0 >= 0.0;
        if !ok || !kappa.is_finite() || !r.is_finite() || !x2_0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Heston requires k >= 0, sigma >= 0, rho in [-1, 1], x1_0 >= 0 \
                 (got k={k}, sigma={sigma}, rho={rho}, x1_0={x1_0})"
            )));
        }
        Ok(HestonParams { k, kappa, sigma, rho, r, x1_0, x2_0 })
    }

    /// Maps the variance form onto the `X1 = v / 2` coordinates with `S(0) = 1`.
    ///
    /// Halving the variance halves both the drift and the diffusion
    /// coefficient, so `k = kappa_bar eta / 2`, `kappa = -kappa_bar` and
    /// `sigma = sigma_v / 2`.
    pub fn from_variance_form(v: &VarianceForm) -> Result<Self> {
        if !(v.kappa_bar >= 0.0 && v.eta >= 0.0 && v.v0 >= 0.0) {
            return Err(Error::InvalidArgument("variance form needs kappa_bar, eta, v0 >= 0".into()));
        }
        Self::new(
            v.kappa_bar * v.eta / 2.0,
            -v.kappa_bar,
            v.sigma_v / 2.0,
            v.rho,
            v.r,
            v.v0 / 2.0,
            0.0,
        )
    }

    pub fn to_variance_form(&self) -> VarianceForm {
        let kappa_bar = -self.kappa;
        VarianceForm {
            kappa_bar,
            eta: if kappa_bar != 0.0 { 2.0 * self.k / kappa_bar } else { 0.0 },
            sigma_v: 2.0 * self.sigma,
            v0: 2.0 * self.x1_0,
            r: self.r,
            rho: self.rho,
        }
    }

    /// `lambda(u2) = sqrt((2 rho sigma u2 + kappa)^2 + 4 sigma^2 (u2 - u2^2))`.
    pub fn lambda(&self, u2: Complex64) -> Complex64 {
        let b = u2 * (2.0 * self.rho * self.sigma) + self.kappa;
        let c = u2 - u2 * u2;
        (b * b + c * (4.0 * self.sigma * self.sigma)).sqrt()
    }

    /// Exponents `(phi, psi)` of `E[e^{u1 X1(t) + u2 X2(t)}] = e^{phi + psi . x}`.
    /// `psi2 = u2` and `psi1` solves a scalar Riccati equation.
    pub fn phi_psi(&self, t: f64, u1: Complex64, u2: Complex64) -> Result<PhiPsi> {
        let a = Complex64::new(self.sigma * self.sigma, 0.0);
        let b = u2 * (2.0 * self.rho * self.sigma) + self.kappa;
        let c = u2 - u2 * u2;
        let (psi1, int_psi1) = if self.sigma == 0.0 {
            // psi1' = B psi1 - C
            let z = b * t;
            (u1 * z.exp() - c * t * gc(1, z), u1 * t * gc(1, z) - c * t * t * gc(2, z))
        } else {
            scalar_riccati(&ScalarRiccatiSpec::new(a, b, c, u1), t)?
        };
        Ok(PhiPsi {
            t,
            u: vec![u1, u2],
            phi: int_psi1 * self.k + u2 * (self.r * t),
            psi: vec![psi1, u2],
        })
    }
}

impl AffineModel for HestonParams {
    fn as_affine(&self) -> (AffineParams, ShortRateSpec, StateVector) {
        let (s, rho) = (self.sigma, self.rho);
        let p = AffineParams {
            m: 1,
            n: 1,
            a: DMatrix::zeros(2, 2),
            alphas: vec![DMatrix::from_row_slice(
                2,
                2,
                &[2.0 * s * s, 2.0 * rho * s, 2.0 * rho * s, 2.0],
            )],
            b: DVector::from_vec(vec![self.k, self.r]),
            bmat: DMatrix::from_row_slice(2, 2, &[self.kappa, 0.0, -1.0, 0.0]),
        };
        (
            p,
            ShortRateSpec::new(self.r, vec![0.0, 0.0]),
            StateVector::new(vec![self.x1_0, self.x2_0]),
        )
    }
}
