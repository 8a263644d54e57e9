//! Trials, windowing, leakage-free fold planning, normalisation, and
//! synthetic data.

mod folds;
mod normalize;
mod synth;
mod trial;
mod window;

pub use folds::{
    plan_folds, plan_sample_folds, select_samples, split_train_val_test, unit_of, FoldPlan, Split, SplitScheme,
};
pub use normalize::{NormStats, MIN_STD};
pub use synth::{synth_trials, SynthSpec, TaskFamily};
pub use trial::{load_trials, parse_trials, save_trials, write_trials, Sample, Trial};
pub use window::{make_all_windows, make_windows, window_offsets, window_stride, WindowScheme};
