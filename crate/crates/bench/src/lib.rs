//! Shared fixtures for the benchmarks.

use convattn::data::{make_all_windows, synth_trials, Sample, SynthSpec, WindowScheme};
use convattn::models::{init_params, Arch, ModelConfig, ParamSet};
use convattn::Rng;

/// A default-sized model over `n` channels, window `t`, `c` classes.
pub fn model(arch: Arch, n: usize, t: usize, c: usize) -> (ModelConfig, ParamSet) {
    let cfg = ModelConfig::for_arch(arch, n, t, c);
    let params = init_params(&cfg, &mut Rng::new(0)).expect("valid config");
    (cfg, params)
}

pub fn windows(trials_per_class: usize, length: usize, t: usize) -> Vec<Sample> {
    let spec = SynthSpec::separable(3, trials_per_class, length, 3);
    let trials = synth_trials(&spec, &mut Rng::new(1)).expect("valid spec");
    make_all_windows(&trials, t, WindowScheme::Snow).expect("even window")
}
