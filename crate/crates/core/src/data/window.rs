use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Sample, Trial};
use crate::error::{Error, Result};
use crate::layers::SampleWindow;

/// How consecutive windows are placed inside a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowScheme {
    /// Stride `T/2`: consecutive windows share half their time points.
    Snow,
    /// Stride `T`: no shared time points.
    Fnow,
}

impl fmt::Display for WindowScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowScheme::Snow => "snow",
            WindowScheme::Fnow => "fnow",
        })
    }
}

impl FromStr for WindowScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snow" => Ok(WindowScheme::Snow),
            "fnow" => Ok(WindowScheme::Fnow),
            other => Err(Error::config(format!("unknown sampling scheme `{other}`"))),
        }
    }
}

pub fn window_stride(window: usize, scheme: WindowScheme) -> Result<usize> {
    match scheme {
        WindowScheme::Snow if window < 2 || !window.is_multiple_of(2) => Err(Error::config(format!(
            "SNOW needs an even window length of at least 2, got {window}"
        ))),
        WindowScheme::Snow => Ok(window / 2),
        WindowScheme::Fnow if window == 0 => Err(Error::config("window length must be at least 1")),
        WindowScheme::Fnow => Ok(window),
    }
}

/// Start offsets of every full window in a trial of `len` points. A trailing
/// remainder shorter than the window is dropped.
pub fn window_offsets(len: usize, window: usize, scheme: WindowScheme) -> Result<Vec<usize>> {
    let stride = window_stride(window, scheme)?;
    if len < window {
        return Ok(Vec::new());
    }
    let count = (len - window) / stride + 1;
    Ok((0..count).map(|i| i * stride).collect())
}

pub fn make_windows(trial: &Trial, window: usize, scheme: WindowScheme) -> Result<Vec<Sample>> {
    window_offsets(trial.len(), window, scheme)?
        .into_iter()
        .map(|start| {
            Ok(Sample {
                window: SampleWindow::new(trial.series.slice_rows(start, window)?)?,
                label: trial.label,
                trial_id: trial.trial_id,
                subject_id: trial.subject_id,
                start,
            })
        })
        .collect()
}

/// Windows of every trial, in trial order.
pub fn make_all_windows(trials: &[Trial], window: usize, scheme: WindowScheme) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for t in trials {
        out.extend(make_windows(t, window, scheme)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    fn trial(len: usize) -> Trial {
        Trial {
            trial_id: 4,
            subject_id: 2,
            label: 1,
            series: Matrix::from_fn(len, 2, |t, c| (t * 10 + c) as f64),
        }
    }

    #[test]
    fn snow_and_fnow_counts() {
        let snow = window_offsets(100, 20, WindowScheme::Snow).unwrap();
        assert_eq!(snow, (0..9).map(|i| i * 10).collect::<Vec<_>>());
        assert_eq!(window_offsets(100, 20, WindowScheme::Fnow).unwrap().len(), 5);
        assert!(window_offsets(19, 20, WindowScheme::Snow).unwrap().is_empty());
        assert!(make_windows(&trial(19), 20, WindowScheme::Fnow).unwrap().is_empty());
    }

    #[test]
    fn odd_window_rejected_for_snow() {
        assert!(matches!(
            window_offsets(50, 7, WindowScheme::Snow),
            Err(Error::Config(_))
        ));
        assert!(window_offsets(50, 7, WindowScheme::Fnow).is_ok());
    }

    #[test]
    fn windows_are_exact_slices() {
        let tr = trial(37);
        for scheme in [WindowScheme::Snow, WindowScheme::Fnow] {
            for s in make_windows(&tr, 8, scheme).unwrap() {
                assert_eq!((s.label, s.trial_id, s.subject_id), (1, 4, 2));
                for t in 0..8 {
                    assert_eq!(s.window.values().row(t), tr.series.row(s.start + t));
                }
            }
        }
    }

    #[test]
    fn overlap_is_half_or_zero() {
        let snow = window_offsets(200, 16, WindowScheme::Snow).unwrap();
        for w in snow.windows(2) {
            assert_eq!(w[0] + 16 - w[1], 8);
        }
        let fnow = window_offsets(200, 16, WindowScheme::Fnow).unwrap();
        for w in fnow.windows(2) {
            assert_eq!(w[1], w[0] + 16);
        }
    }
}
