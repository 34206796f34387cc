//! Closed-form transforms for the Vasicek, CIR and Heston models and their
//! embedding into generic [`AffineParams`](crate::params::AffineParams).

mod cir;
mod heston;
mod vasicek;

pub use cir::{CirParams, CirLFunctions, ForwardChiSq};
pub use heston::{HestonParams, VarianceForm};
pub use vasicek::VasicekParams;

use crate::params::{AffineParams, ShortRateSpec, StateVector};

/// A named model that can be written as a generic affine process.
pub trait AffineModel {
    /// Parameters, short rate and initial state of the model.
    fn as_affine(&self) -> (AffineParams, ShortRateSpec, StateVector);
}
