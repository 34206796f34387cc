//! Affine diffusion processes on the canonical state space `R+^m x R^n`.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`], [`canonical`], [`rho`]: admissible parameter sets, the affine
//!   diffusion matrix and drift, the block-diagonal canonical form and the
//!   constructive square root `rho(x)` used for simulation.
//! - [`riccati`]: the generalized Riccati system behind every transform in the
//!   crate, solved numerically (adaptive Dormand-Prince 5(4)) or in closed form
//!   for the scalar case, with blow-up detection.
//! - [`models`]: closed forms for Vasicek, CIR and Heston.
//! - [`pricing`]: discounted transforms, bond prices, forward-measure
//!   characteristic functions, bond options, caps and Black quotes.
//! - [`fourier`]: payoff transforms and quadrature pricing of calls.
//! - [`mc`]: Monte Carlo simulation used as an independent pricing oracle.
//! - [`config`] and [`cli`]: TOML model files and the command implementations
//!   behind the `affinekit` binary.

pub mod canonical;
pub mod cli;
pub mod config;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod mc;
pub mod models;
pub mod params;
pub mod pricing;
pub mod rho;
pub mod riccati;
pub mod special;

pub use error::{Error, Result};
pub use params::{AffineParams, ShortRateSpec, StateVector, ValidationReport};
pub use riccati::{PhiPsi, RiccatiSystem};

pub use num_complex::Complex64;
