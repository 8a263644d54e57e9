use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};

/// Channels whose standard deviation is below this are only centred.
pub const MIN_STD: f64 = 1e-8;

/// Per-channel z-score statistics, fitted on training windows only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Mean and population standard deviation over every time point of every
    /// window.
    pub fn fit(samples: &[Sample]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::config("cannot normalise an empty training set"))?;
        let n = first.window.channels();
        let mut sum = vec![0.0; n];
        let mut count = 0usize;
        for s in samples {
            let v = s.window.values();
            if v.cols() != n {
                return Err(Error::Data("samples disagree on channel count".into()));
            }
            for t in 0..v.rows() {
                for (acc, x) in sum.iter_mut().zip(v.row(t)) {
                    *acc += x;
                }
            }
            count += v.rows();
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = vec![0.0; n];
        for s in samples {
            let v = s.window.values();
            for t in 0..v.rows() {
                for ((acc, x), m) in sq.iter_mut().zip(v.row(t)).zip(&mean) {
                    *acc += (x - m) * (x - m);
                }
            }
        }
        let std = sq.iter().map(|s| (s / count as f64).sqrt()).collect();
        Ok(Self { mean, std })
    }

    fn divisor(&self, channel: usize) -> f64 {
        let s = self.std[channel];
        if s < MIN_STD {
            1.0
        } else {
            s
        }
    }

    pub fn apply(&self, samples: &mut [Sample]) {
        for s in samples {
            let v = s.window.values_mut();
            for t in 0..v.rows() {
                for (c, x) in v.row_mut(t).iter_mut().enumerate() {
                    *x = (*x - self.mean[c]) / self.divisor(c);
                }
            }
        }
    }

    pub fn apply_to(&self, samples: &[Sample]) -> Vec<Sample> {
        let mut out = samples.to_vec();
        self.apply(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::SampleWindow;
    use crate::tensor::{Matrix, Rng};

    fn sample(values: Matrix) -> Sample {
        Sample {
            window: SampleWindow::new(values).unwrap(),
            label: 0,
            trial_id: 0,
            subject_id: 0,
            start: 0,
        }
    }

    #[test]
    fn constant_channel_becomes_zero() {
        let mut s = vec![sample(Matrix::filled(5, 1, 3.5)), sample(Matrix::filled(5, 1, 3.5))];
        let stats = NormStats::fit(&s).unwrap();
        assert_eq!(stats.std, vec![0.0]);
        stats.apply(&mut s);
        assert!(s.iter().all(|x| x.window.values().as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn already_standard() {
        let mut s = vec![sample(Matrix::column(&[-1.0, 1.0, -1.0, 1.0]))];
        let stats = NormStats::fit(&s).unwrap();
        assert_eq!((stats.mean[0], stats.std[0]), (0.0, 1.0));
        let before = s.clone();
        stats.apply(&mut s);
        assert_eq!(s, before);
    }

    #[test]
    fn standardises_training_set() {
        let mut rng = Rng::new(12);
        let mut s: Vec<Sample> = (0..20)
            .map(|_| {
                sample(Matrix::from_fn(8, 3, |_, c| {
                    (c as f64 + 1.0) * 5.0 * rng.normal() + 10.0 * c as f64
                }))
            })
            .collect();
        let stats = NormStats::fit(&s).unwrap();
        stats.apply(&mut s);
        let again = NormStats::fit(&s).unwrap();
        for c in 0..3 {
            assert!(again.mean[c].abs() < 1e-9);
            assert!((again.std[c] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(NormStats::fit(&[]).is_err());
    }
}
