//! Robust estimation of the mean vector of i.i.d. multivariate heavy-tailed
//! observations.
//!
//! The pipeline is:
//!
//! 1. [`stable`] draws samples `X = mu + eps` whose errors sit in the domain of
//!    attraction of (multivariate) stable laws, possibly with a different tail
//!    index per coordinate.
//! 2. [`mestimator::fit`] computes the coordinate-wise Huber M-estimate of `mu`
//!    using the additive loss defined in [`loss`].
//! 3. [`sandwich::estimate`] plugs the residuals into the asymptotic
//!    covariance `F^-1 Gamma F^-1`.
//! 4. [`inference`] builds chi-square ellipsoids and coordinate intervals;
//!    [`bootstrap`] calibrates the same ellipsoid with a residual bootstrap.
//! 5. [`sim`] runs the Monte Carlo coverage and accuracy experiments.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases at the crate root name the common `f64` instantiations.

pub mod bootstrap;
pub mod error;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod loss;
pub mod mestimator;
pub mod rng;
pub mod sandwich;
pub mod sim;
pub mod special;
pub mod stable;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use loss::{LossDescriptor, LossSpec};
pub use mestimator::{MEstimate, Sample};
pub use sandwich::SandwichCov;

/// Real scalar type the estimators are generic over.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    /// Conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Matrix64 = Matrix<f64>;
pub type Sample64 = Sample<f64>;
pub type MEstimate64 = MEstimate<f64>;
pub type SandwichCov64 = SandwichCov<f64>;
pub type LossSpec64 = LossSpec<f64>;
pub type RegionSpec64 = inference::RegionSpec<f64>;
pub type BootstrapRun64 = bootstrap::BootstrapRun<f64>;
pub type StableSpec64 = stable::StableSpec<f64>;

pub type Sample32 = Sample<f32>;
pub type MEstimate32 = MEstimate<f32>;
pub type SandwichCov32 = SandwichCov<f32>;
pub type LossSpec32 = LossSpec<f32>;
