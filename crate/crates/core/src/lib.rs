//! Numerical laboratory for quantum ergodicity on the quantized two-torus.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ergodicity;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod observables;
pub mod quantization;
pub mod report;
pub mod scalar;
pub mod sl2;
pub mod spectral;
pub mod verlinde;
pub mod weil;

pub use error::{Error, Result};
pub use observables::{FourierObservable, TorusPoint};
pub use quantization::{QuantizationContext, QuantumOperator};
pub use sl2::{decompose_sl2, Letter, SL2Matrix, SL2Word};
pub use weil::WeilOperator;

/// Double-precision defaults.
pub type Observable = FourierObservable<f64>;
pub type Point = TorusPoint<f64>;
pub type Context = QuantizationContext<f64>;
pub type Operator = QuantumOperator<f64>;
pub type Weil = WeilOperator<f64>;

/// Single-precision variants.
pub type Observable32 = FourierObservable<f32>;
pub type Context32 = QuantizationContext<f32>;
pub type Operator32 = QuantumOperator<f32>;
pub type Weil32 = WeilOperator<f32>;

/// Scalar used for the Verlinde sums.
pub type DimensionScalar = num_bigfloat::BigFloat;
