use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Sample, Trial};
use crate::error::{Error, Result};
use crate::tensor::Rng;

/// Unit of cross-validation assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitScheme {
    /// Whole trials are dealt into folds.
    Loto,
    /// One fold per subject.
    Loso,
    /// Individual windows are dealt into folds. Leaks across overlapping
    /// windows of the same trial; kept to demonstrate exactly that.
    RandomSample,
}

impl fmt::Display for SplitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitScheme::Loto => "loto",
            SplitScheme::Loso => "loso",
            SplitScheme::RandomSample => "random_sample",
        })
    }
}

impl FromStr for SplitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "loto" => Ok(SplitScheme::Loto),
            "loso" => Ok(SplitScheme::Loso),
            "random_sample" | "random" => Ok(SplitScheme::RandomSample),
            other => Err(Error::config(format!("unknown split scheme `{other}`"))),
        }
    }
}

/// Fold assignment for every unit. Units are trial ids for LOTO and LOSO,
/// sample indices for `RandomSample`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub scheme: SplitScheme,
    pub assignments: BTreeMap<u64, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, unit: u64) -> Option<usize> {
        self.assignments.get(&unit).copied()
    }

    pub fn members(&self, fold: usize) -> BTreeSet<u64> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(&u, _)| u)
            .collect()
    }

    /// `unit,fold` lines under a header naming the unit kind.
    pub fn to_csv(&self) -> String {
        let unit = match self.scheme {
            SplitScheme::RandomSample => "sample_index",
            _ => "trial_id",
        };
        let mut s = format!("{unit},fold\n");
        for (u, f) in &self.assignments {
            s.push_str(&format!("{u},{f}\n"));
        }
        s
    }
}

/// Shuffles `units` and deals them round-robin into `k` folds.
fn deal(mut units: Vec<u64>, k: usize, rng: &mut Rng) -> BTreeMap<u64, usize> {
    rng.shuffle(&mut units);
    units.into_iter().enumerate().map(|(i, u)| (u, i % k)).collect()
}

/// Trial-level fold plan. `k` is ignored for LOSO, which always gets one fold
/// per subject, numbered in ascending subject-id order.
pub fn plan_folds(trials: &[Trial], k: usize, scheme: SplitScheme, rng: &mut Rng) -> Result<FoldPlan> {
    let ids: BTreeSet<u64> = trials.iter().map(|t| t.trial_id).collect();
    if ids.len() != trials.len() {
        return Err(Error::Data("duplicate trial ids".into()));
    }
    match scheme {
        SplitScheme::Loto => {
            if k == 0 || k > ids.len() {
                return Err(Error::config(format!(
                    "fold count {k} must be between 1 and the trial count {}",
                    ids.len()
                )));
            }
            Ok(FoldPlan {
                k,
                scheme,
                assignments: deal(ids.into_iter().collect(), k, rng),
            })
        }
        SplitScheme::Loso => {
            let subjects: BTreeSet<u64> = trials.iter().map(|t| t.subject_id).collect();
            let index: BTreeMap<u64, usize> = subjects.iter().enumerate().map(|(i, &s)| (s, i)).collect();
            Ok(FoldPlan {
                k: subjects.len(),
                scheme,
                assignments: trials.iter().map(|t| (t.trial_id, index[&t.subject_id])).collect(),
            })
        }
        SplitScheme::RandomSample => Err(Error::config(
            "random_sample folds are assigned after windowing; use plan_sample_folds",
        )),
    }
}

/// Sample-level fold plan over `0..count`.
pub fn plan_sample_folds(count: usize, k: usize, rng: &mut Rng) -> Result<FoldPlan> {
    if k == 0 || k > count {
        return Err(Error::config(format!(
            "fold count {k} must be between 1 and the sample count {count}"
        )));
    }
    Ok(FoldPlan {
        k,
        scheme: SplitScheme::RandomSample,
        assignments: deal((0..count as u64).collect(), k, rng),
    })
}

/// Disjoint unit-id sets for one cross-validation round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: BTreeSet<u64>,
    pub val: BTreeSet<u64>,
    pub test: BTreeSet<u64>,
}

/// Test set is `test_fold`; the rest is split into validation
/// (`ceil(val_fraction · remaining)` units, chosen at random) and training.
pub fn split_train_val_test(plan: &FoldPlan, test_fold: usize, val_fraction: f64, rng: &mut Rng) -> Result<Split> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::config(format!(
            "val_fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    if test_fold >= plan.k {
        return Err(Error::Index {
            index: test_fold,
            len: plan.k,
        });
    }
    let test = plan.members(test_fold);
    let mut rest: Vec<u64> = plan
        .assignments
        .iter()
        .filter(|(_, &f)| f != test_fold)
        .map(|(&u, _)| u)
        .collect();
    let n_val = (val_fraction * rest.len() as f64).ceil() as usize;
    if n_val == 0 {
        return Err(Error::config(format!("fold {test_fold}: no units left for validation")));
    }
    if n_val >= rest.len() {
        return Err(Error::config(format!("fold {test_fold}: no units left for training")));
    }
    rng.shuffle(&mut rest);
    let val = rest[..n_val].iter().copied().collect();
    let train = rest[n_val..].iter().copied().collect();
    Ok(Split { train, val, test })
}

/// The unit id a sample is assigned by under `scheme`; `index` is the
/// sample's position in the full windowed list.
pub fn unit_of(scheme: SplitScheme, index: usize, sample: &Sample) -> u64 {
    match scheme {
        SplitScheme::RandomSample => index as u64,
        SplitScheme::Loto | SplitScheme::Loso => sample.trial_id,
    }
}

/// Samples whose unit falls in `units`.
pub fn select_samples(samples: &[Sample], scheme: SplitScheme, units: &BTreeSet<u64>) -> Vec<Sample> {
    samples
        .iter()
        .enumerate()
        .filter(|(i, s)| units.contains(&unit_of(scheme, *i, s)))
        .map(|(_, s)| s.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    fn trials(n: usize, subjects: u64) -> Vec<Trial> {
        (0..n)
            .map(|i| Trial {
                trial_id: 100 + i as u64,
                subject_id: i as u64 % subjects,
                label: i % 3,
                series: Matrix::zeros(4, 1),
            })
            .collect()
    }

    #[test]
    fn loto_one_trial_per_fold() {
        let plan = plan_folds(&trials(10, 3), 10, SplitScheme::Loto, &mut Rng::new(0)).unwrap();
        for f in 0..10 {
            assert_eq!(plan.members(f).len(), 1);
        }
    }

    #[test]
    fn loso_fold_per_subject() {
        let ts = trials(12, 4);
        let plan = plan_folds(&ts, 99, SplitScheme::Loso, &mut Rng::new(0)).unwrap();
        assert_eq!(plan.k, 4);
        for t in &ts {
            assert_eq!(plan.fold_of(t.trial_id), Some(t.subject_id as usize));
        }
    }

    #[test]
    fn loto_balanced_for_262_trials() {
        let plan = plan_folds(&trials(262, 5), 10, SplitScheme::Loto, &mut Rng::new(3)).unwrap();
        let sizes: Vec<usize> = (0..10).map(|f| plan.members(f).len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 262);
        assert!(sizes.iter().all(|&s| s == 26 || s == 27), "{sizes:?}");
    }

    #[test]
    fn too_many_folds() {
        assert!(matches!(
            plan_folds(&trials(3, 1), 4, SplitScheme::Loto, &mut Rng::new(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn split_sizes() {
        let plan = plan_folds(&trials(100, 5), 10, SplitScheme::Loto, &mut Rng::new(1)).unwrap();
        let s = split_train_val_test(&plan, 0, 0.1, &mut Rng::new(2)).unwrap();
        assert_eq!((s.test.len(), s.val.len(), s.train.len()), (10, 9, 81));
        let again = split_train_val_test(&plan, 0, 0.1, &mut Rng::new(2)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn split_is_partition() {
        let plan = plan_folds(&trials(37, 5), 4, SplitScheme::Loto, &mut Rng::new(1)).unwrap();
        for f in 0..4 {
            let s = split_train_val_test(&plan, f, 0.2, &mut Rng::new(f as u64)).unwrap();
            assert!(s.train.is_disjoint(&s.val));
            assert!(s.train.is_disjoint(&s.test));
            assert!(s.val.is_disjoint(&s.test));
            let all: BTreeSet<u64> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            assert_eq!(all.len(), 37);
        }
    }

    #[test]
    fn split_rejects_degenerate_inputs() {
        let plan = plan_folds(&trials(2, 1), 2, SplitScheme::Loto, &mut Rng::new(1)).unwrap();
        assert!(split_train_val_test(&plan, 0, 0.5, &mut Rng::new(0)).is_err());
        assert!(split_train_val_test(&plan, 0, 0.0, &mut Rng::new(0)).is_err());
        assert!(split_train_val_test(&plan, 5, 0.5, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn plan_csv() {
        let plan = plan_folds(&trials(3, 1), 3, SplitScheme::Loto, &mut Rng::new(0)).unwrap();
        let csv = plan.to_csv();
        assert!(csv.starts_with("trial_id,fold\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
