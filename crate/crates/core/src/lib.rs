//! ConvLSTM with self-attention for multi-sensor time series classification,
//! with the ConvLSTM baseline, leakage-free cross-validation, and metrics.
//!
//! Everything runs on a small dense `f64` substrate ([`tensor`]); there is no
//! external ML framework. Every layer has a hand-written backward pass that is
//! checked against central finite differences ([`gradcheck`]).

pub mod data;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod layers;
pub mod metrics;
pub mod models;
pub mod tensor;
pub mod training;

pub use error::{Error, ErrorKind, Result};
pub use layers::SampleWindow;
pub use models::{Arch, ForwardTrace, ModelConfig, ParamSet};
pub use tensor::{Matrix, Rng};
