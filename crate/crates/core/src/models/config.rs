use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    /// conv → LSTM → self-attention → softmax
    Proposed,
    /// conv → LSTM → softmax on the last hidden state
    Baseline,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Proposed => "proposed",
            Arch::Baseline => "baseline",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" | "attention" => Ok(Arch::Proposed),
            "baseline" | "convlstm" => Ok(Arch::Baseline),
            other => Err(Error::config(format!("unknown arch `{other}`"))),
        }
    }
}

/// Network dimensions and training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Sensor channels `N`.
    pub channels: usize,
    /// Window length `T`.
    pub window: usize,
    /// Output classes `C`.
    pub classes: usize,
    /// Convolution filters `K`.
    pub filters: usize,
    /// LSTM hidden units `E`.
    pub lstm_units: usize,
    pub lstm_layers: usize,
    /// Attention length `D`; unused by the baseline.
    pub attention_len: usize,
    /// Attention output rows `F`; unused by the baseline.
    pub attention_out: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub const DEFAULT_PROPOSED_LR: f64 = 1e-4;
    pub const DEFAULT_BASELINE_LR: f64 = 1e-3;

    pub fn proposed(channels: usize, window: usize, classes: usize) -> Self {
        Self {
            arch: Arch::Proposed,
            channels,
            window,
            classes,
            filters: 3,
            lstm_units: 32,
            lstm_layers: 1,
            attention_len: 32,
            attention_out: 10,
            learning_rate: Self::DEFAULT_PROPOSED_LR,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }

    pub fn baseline(channels: usize, window: usize, classes: usize) -> Self {
        Self {
            arch: Arch::Baseline,
            learning_rate: Self::DEFAULT_BASELINE_LR,
            ..Self::proposed(channels, window, classes)
        }
    }

    pub fn for_arch(arch: Arch, channels: usize, window: usize, classes: usize) -> Self {
        match arch {
            Arch::Proposed => Self::proposed(channels, window, classes),
            Arch::Baseline => Self::baseline(channels, window, classes),
        }
    }

    pub fn default_learning_rate(arch: Arch) -> f64 {
        match arch {
            Arch::Proposed => Self::DEFAULT_PROPOSED_LR,
            Arch::Baseline => Self::DEFAULT_BASELINE_LR,
        }
    }

    /// Length of the vector fed to the output layer.
    pub fn feature_len(&self) -> usize {
        match self.arch {
            Arch::Proposed => self.attention_out * self.lstm_units,
            Arch::Baseline => self.lstm_units,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut counts = vec![
            ("channels", self.channels),
            ("window", self.window),
            ("classes", self.classes),
            ("filters", self.filters),
            ("lstm_units", self.lstm_units),
            ("lstm_layers", self.lstm_layers),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
        ];
        if self.arch == Arch::Proposed {
            counts.push(("attention_len", self.attention_len));
            counts.push(("attention_out", self.attention_out));
        }
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::config(format!(
                "learning_rate must be a non-negative number, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Flat `key=value` view, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        [
            ("arch", self.arch.to_string()),
            ("channels", self.channels.to_string()),
            ("window", self.window.to_string()),
            ("classes", self.classes.to_string()),
            ("filters", self.filters.to_string()),
            ("lstm_units", self.lstm_units.to_string()),
            ("lstm_layers", self.lstm_layers.to_string()),
            ("attention_len", self.attention_len.to_string()),
            ("attention_out", self.attention_out.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("batch_size", self.batch_size.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("patience", self.patience.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = Self::proposed(1, 1, 1);
        let mut lr_set = false;
        for (k, v) in pairs {
            if k == "learning_rate" {
                lr_set = true;
            }
            cfg.set(k, v)?;
        }
        if !lr_set {
            cfg.learning_rate = Self::default_learning_rate(cfg.arch);
        }
        Ok(cfg)
    }

    /// Sets one field by its key name. Returns `Ok(false)` for keys this type
    /// does not own so callers can layer their own keys on top.
    pub fn try_set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::config(format!("invalid value `{v}` for `{key}`")))
        }
        match key {
            "arch" => self.arch = value.parse()?,
            "channels" => self.channels = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "classes" => self.classes = num(key, value)?,
            "filters" => self.filters = num(key, value)?,
            "lstm_units" => self.lstm_units = num(key, value)?,
            "lstm_layers" => self.lstm_layers = num(key, value)?,
            "attention_len" => self.attention_len = num(key, value)?,
            "attention_out" => self.attention_out = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "max_epochs" => self.max_epochs = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if self.try_set(key, value)? {
            Ok(())
        } else {
            Err(Error::config(format!("unknown key `{key}`")))
        }
    }
}
