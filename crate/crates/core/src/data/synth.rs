use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Trial;
use crate::error::{Error, Result};
use crate::tensor::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    /// Each class is a distinct sinusoid frequency per channel, plus noise.
    Separable,
    /// Every class shares one noisy background; the class is carried only by
    /// a short marker placed at a random position.
    LongRange,
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskFamily::Separable => "separable",
            TaskFamily::LongRange => "long_range",
        })
    }
}

impl FromStr for TaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "separable" => Ok(TaskFamily::Separable),
            "long_range" => Ok(TaskFamily::LongRange),
            other => Err(Error::config(format!("unknown task family `{other}`"))),
        }
    }
}

/// Generator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub family: TaskFamily,
    pub classes: usize,
    pub subjects: usize,
    pub trials_per_class: usize,
    /// Trial length `L`.
    pub length: usize,
    pub channels: usize,
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    /// Separable: class `c` channel `n` oscillates at
    /// `(c + 1) · (1 + n / (2N)) / period` cycles per time point.
    pub period: f64,
    /// Long-range: peak amplitude of the class marker.
    pub marker_amplitude: f64,
    /// Long-range: marker length in time points.
    pub marker_len: usize,
    /// Long-range: one marker is placed at a random offset inside every block
    /// of this many time points, so any window spanning two blocks sees at
    /// least one marker whole.
    pub marker_block: usize,
}

impl SynthSpec {
    pub fn separable(classes: usize, trials_per_class: usize, length: usize, channels: usize) -> Self {
        Self {
            family: TaskFamily::Separable,
            classes,
            subjects: 5,
            trials_per_class,
            length,
            channels,
            noise: 0.1,
            period: 32.0,
            marker_amplitude: 2.0,
            marker_len: 4,
            marker_block: 16,
        }
    }

    pub fn long_range(classes: usize, trials_per_class: usize, length: usize, channels: usize) -> Self {
        Self {
            family: TaskFamily::LongRange,
            noise: 0.3,
            ..Self::separable(classes, trials_per_class, length, channels)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.subjects == 0 || self.trials_per_class == 0 {
            return Err(Error::config(
                "classes, subjects and trials_per_class must be at least 1",
            ));
        }
        if self.length == 0 || self.channels == 0 {
            return Err(Error::config("length and channels must be at least 1"));
        }
        if self.noise.is_nan() || self.noise < 0.0 {
            return Err(Error::config("noise must be non-negative"));
        }
        match self.family {
            TaskFamily::Separable => {
                let top = self.classes as f64 * 1.5 / self.period;
                if self.period.is_nan() || self.period <= 0.0 || top >= 0.5 {
                    return Err(Error::config(format!(
                        "period {} puts the highest class frequency at or above Nyquist",
                        self.period
                    )));
                }
            }
            TaskFamily::LongRange => {
                if self.marker_len == 0 || self.marker_len > self.marker_block {
                    return Err(Error::config("marker_len must be in 1..=marker_block"));
                }
            }
        }
        Ok(())
    }

    pub fn frequency(&self, class: usize, channel: usize) -> f64 {
        (class + 1) as f64 * (1.0 + channel as f64 / (2.0 * self.channels as f64)) / self.period
    }

    /// Marker value for `class` at step `j` of the marker: the `(class+1)`-th
    /// discrete sine basis vector, mutually orthogonal across classes when
    /// `classes ≤ marker_len`.
    pub fn marker(&self, class: usize, j: usize) -> f64 {
        let m = self.marker_len as f64;
        self.marker_amplitude * (PI * (j + 1) as f64 * (class + 1) as f64 / (m + 1.0)).sin()
    }
}

/// Trials are numbered from 0, interleaving classes; subjects are assigned
/// round-robin.
pub fn synth_trials(spec: &SynthSpec, rng: &mut Rng) -> Result<Vec<Trial>> {
    spec.validate()?;
    let total = spec.classes * spec.trials_per_class;
    let (len, n) = (spec.length, spec.channels);
    let mut trials = Vec::with_capacity(total);
    for id in 0..total {
        let label = id % spec.classes;
        let series = match spec.family {
            TaskFamily::Separable => {
                let phases: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 2.0 * PI)).collect();
                let mut m = Matrix::from_fn(len, n, |t, c| {
                    (2.0 * PI * spec.frequency(label, c) * t as f64 + phases[c]).sin()
                });
                add_noise(&mut m, spec.noise, rng);
                m
            }
            TaskFamily::LongRange => {
                let phase = rng.uniform(0.0, 2.0 * PI);
                let mut m = Matrix::from_fn(len, n, |t, c| {
                    0.5 * (2.0 * PI * t as f64 / 16.0 + phase + c as f64).sin()
                });
                add_noise(&mut m, spec.noise, rng);
                let block = spec.marker_block;
                let mut start = 0;
                while start + block <= len {
                    let at = start + rng.below(block - spec.marker_len + 1);
                    for j in 0..spec.marker_len {
                        let v = spec.marker(label, j);
                        for x in m.row_mut(at + j) {
                            *x += v;
                        }
                    }
                    start += block;
                }
                m
            }
        };
        trials.push(Trial {
            trial_id: id as u64,
            subject_id: (id % spec.subjects) as u64,
            label,
            series,
        });
    }
    Ok(trials)
}

fn add_noise(m: &mut Matrix, sigma: f64, rng: &mut Rng) {
    if sigma == 0.0 {
        return;
    }
    for v in m.as_mut_slice() {
        *v += sigma * rng.normal();
    }
}
