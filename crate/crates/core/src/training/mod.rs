//! Mini-batch Adam training with early stopping.

mod adam;
mod early_stop;
mod fit;

pub use adam::{adam_step, AdamState};
pub use early_stop::{EarlyStopState, StopDecision};
pub use fit::{evaluate_loss, fit, fit_from, EpochRecord, StopReason, TrainHistory};
