//! Forward kernels and their analytic backward passes.
//!
//! Each kernel is a pure function of its input and parameters. The backward
//! functions take the cached forward activations plus an upstream gradient and
//! return parameter gradients together with the gradient for the kernel input.

mod attention;
mod conv;
mod dense;
mod loss;
mod lstm;

pub use attention::{attention_backward, self_attention, AttentionParams, AttentionTrace};
pub use conv::{conv_backward, conv_embed, ConvParams};
pub use dense::{dense_backward, dense_softmax, flatten_scores, DenseParams};
pub use loss::{cross_entropy, cross_entropy_logit_grad, PROB_FLOOR};
pub use lstm::{lstm_backward, lstm_encode, lstm_forward, LstmParams, LstmTrace};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// A `T×N` window of sensor readings, one row per time point.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleWindow(Matrix);

impl SampleWindow {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::config(format!(
                "window must be at least 1x1, got {:?}",
                values.shape()
            )));
        }
        if !values.is_finite() {
            return Err(Error::Data("window contains non-finite values".into()));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channels(&self) -> usize {
        self.0.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }
}
