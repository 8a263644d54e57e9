//! Full networks: the attention model and the ConvLSTM baseline.

mod config;
mod network;
mod params;

pub use config::{Arch, ModelConfig};
pub use network::{argmax, backward, backward_scaled, forward, loss, predict, ForwardTrace};
pub use params::{decode_params, encode_params, init_params, load_params, save_params, Gradients, ParamSet};
