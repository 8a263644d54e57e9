//! Analytic-vs-numerical gradient comparison for whole networks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::SampleWindow;
use crate::models::{backward_scaled, forward, init_params, loss, Arch, ModelConfig, ParamSet};
use crate::tensor::{finite_diff_grad, Matrix, Rng};

/// Largest parameter count accepted; finite differences cost two forward
/// passes per coordinate.
pub const MAX_PARAMS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckDims {
    pub window: usize,
    pub channels: usize,
    pub filters: usize,
    pub lstm_units: usize,
    pub attention_len: usize,
    pub attention_out: usize,
    pub classes: usize,
    pub lstm_layers: usize,
}

impl Default for GradcheckDims {
    fn default() -> Self {
        Self {
            window: 8,
            channels: 3,
            filters: 3,
            lstm_units: 4,
            attention_len: 4,
            attention_out: 2,
            classes: 3,
            lstm_layers: 1,
        }
    }
}

impl GradcheckDims {
    pub fn model_config(&self, arch: Arch) -> ModelConfig {
        let mut c = ModelConfig::for_arch(arch, self.channels, self.window, self.classes);
        c.filters = self.filters;
        c.lstm_units = self.lstm_units;
        c.attention_len = self.attention_len;
        c.attention_out = self.attention_out;
        c.lstm_layers = self.lstm_layers;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckOptions {
    pub eps: f64,
    pub tolerance: f64,
    /// Magnitude below which errors are measured absolutely: the per-entry
    /// error is `|a - n| / max(|a|, |n|, floor)`. Central differences at
    /// `eps = 1e-6` carry roughly `1e-10` of rounding noise, so entries much
    /// smaller than `floor` cannot be resolved relatively.
    pub floor: f64,
    /// Test hook: multiply the analytic gradient of the named group by a
    /// factor before comparing.
    pub corrupt: Option<(String, f64)>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            tolerance: 1e-5,
            floor: 1e-4,
            corrupt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub arch: Arch,
    pub seed: u64,
    /// Parameter tensor name, or `input` for the window gradient.
    pub group: String,
    pub entries: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub rows: Vec<GroupResult>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GroupResult> {
        self.rows.iter().filter(|r| !r.passed)
    }

    /// Fixed-width table, one row per (arch, seed, group).
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<9} {:>6} {:<16} {:>7} {:>12}  {}\n",
            "arch", "seed", "group", "entries", "max_rel_err", "status"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<9} {:>6} {:<16} {:>7} {:>12.3e}  {}\n",
                r.arch.to_string(),
                r.seed,
                r.group,
                r.entries,
                r.max_rel_error,
                if r.passed { "ok" } else { "FAIL" }
            ));
        }
        s
    }
}

fn max_rel_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Checks one architecture at one seed: random parameters (including
/// non-zero biases), a random window and a random label.
pub fn check_model(cfg: &ModelConfig, seed: u64, opts: &GradcheckOptions) -> Result<Vec<GroupResult>> {
    let mut rng = Rng::new(seed);
    let mut params = init_params(cfg, &mut rng)?;
    for (_, m) in params.tensors_mut() {
        for v in m.as_mut_slice() {
            *v += rng.uniform(-0.1, 0.1);
        }
    }
    let total = params.num_params();
    if total > MAX_PARAMS {
        return Err(Error::config(format!(
            "{total} parameters is too many for a finite-difference check (limit {MAX_PARAMS})"
        )));
    }
    let x = SampleWindow::new(Matrix::from_fn(cfg.window, cfg.channels, |_, _| rng.uniform(-1.0, 1.0)))?;
    let label = rng.below(cfg.classes);

    let trace = forward(cfg, &params, &x)?;
    let (mut grads, d_input) = backward_scaled(cfg, &params, &trace, label, 1.0)?;
    if let Some((name, factor)) = &opts.corrupt {
        for (n, m) in grads.tensors_mut() {
            if &n == name {
                m.as_mut_slice().iter_mut().for_each(|v| *v *= factor);
            }
        }
    }

    let mut probe = params.clone();
    let numeric = finite_diff_grad(
        |theta| {
            probe.unflatten(theta).expect("same length");
            loss(cfg, &probe, &x, label).unwrap_or(f64::NAN)
        },
        &params.flatten(),
        opts.eps,
    )?;

    let mut rows = Vec::new();
    let mut offset = 0;
    for (name, g) in grads.tensors() {
        let n = g.len();
        let err = max_rel_error(g.as_slice(), &numeric[offset..offset + n], opts.floor);
        offset += n;
        rows.push(GroupResult {
            arch: cfg.arch,
            seed,
            group: name,
            entries: n,
            max_rel_error: err,
            passed: err < opts.tolerance,
        });
    }

    let numeric_x = finite_diff_grad(
        |v| match Matrix::new(cfg.window, cfg.channels, v.to_vec()).and_then(SampleWindow::new) {
            Ok(w) => loss(cfg, &params, &w, label).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        },
        x.values().as_slice(),
        opts.eps,
    )?;
    let err = max_rel_error(d_input.as_slice(), &numeric_x, opts.floor);
    rows.push(GroupResult {
        arch: cfg.arch,
        seed,
        group: "input".to_string(),
        entries: numeric_x.len(),
        max_rel_error: err,
        passed: err < opts.tolerance,
    });
    Ok(rows)
}

pub fn run_gradcheck(
    dims: &GradcheckDims,
    seeds: &[u64],
    archs: &[Arch],
    opts: &GradcheckOptions,
) -> Result<GradcheckReport> {
    let mut rows = Vec::new();
    for &arch in archs {
        let cfg = dims.model_config(arch);
        cfg.validate()?;
        for &seed in seeds {
            rows.extend(check_model(&cfg, seed, opts)?);
        }
    }
    Ok(GradcheckReport {
        tolerance: opts.tolerance,
        rows,
    })
}

/// Parameter groups present for an architecture, in table order.
pub fn group_names(cfg: &ModelConfig) -> Vec<String> {
    ParamSet::zeros(cfg).tensors().into_iter().map(|(n, _)| n).collect()
}
