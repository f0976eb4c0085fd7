//! Spatio-temporal convolution blocks for video models.
//!
//! The crate provides a dense 5-D tensor, a cross-correlation engine with a
//! reference oracle, the family of factorized 3D convolution blocks (full 3D,
//! (2+1)D, P3D-A/B/C, FAST, split-FAST, XT-only, YT-only), a residual network
//! builder with parameter/FLOP accounting, SGD training with cosine warm
//! restarts, a finite-difference gradient checker, and a synthetic
//! directional-motion video generator.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below name the `f32` production types and the `f64` types the
//! gradient checker runs on.

pub mod block;
pub mod conv;
pub mod data;
pub mod error;
pub mod network;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{DiffStats, Shape5, Tensor5};

pub type Tensor = Tensor5<f32>;
pub type Tensor64 = Tensor5<f64>;
pub type Weights = conv::ConvWeights<f32>;
pub type Weights64 = conv::ConvWeights<f64>;
pub type Block32 = block::Block<f32>;
pub type Block64 = block::Block<f64>;
pub type Network32 = network::Network<f32>;
pub type Network64 = network::Network<f64>;
