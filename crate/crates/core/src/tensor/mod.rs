//! Dense numeric substrate shared by every layer.

mod matrix;
mod numdiff;
mod rng;

pub use matrix::{dot, softmax_in_place, softmax_rows, Matrix};
pub use numdiff::finite_diff_grad;
pub use rng::Rng;
