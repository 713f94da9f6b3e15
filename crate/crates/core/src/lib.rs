//! Deep recurrent-convolutional (RC), convolutional-recurrent (CR) and
//! residual acoustic models trained end-to-end with CTC.
//!
//! The numeric core is generic over [`Scalar`] (`f64` by default, `f32`
//! opt-in); the aliases below fix the common precisions.

pub mod corpus;
pub mod ctc;
pub mod eval;
pub mod features;
pub mod lm;
pub mod network;
pub mod numerics;
pub mod trainer;

pub use numerics::Scalar;

pub type Tensor64 = numerics::Tensor<f64>;
pub type Tensor32 = numerics::Tensor<f32>;
pub type ParameterStore64 = numerics::ParameterStore<f64>;
pub type ParameterStore32 = numerics::ParameterStore<f32>;
