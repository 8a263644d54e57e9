//! End-to-end experiments: load or generate trials, window, cross-validate,
//! train, evaluate and write artifacts.
//!
//! Seeding: the global seed `s` drives the synthetic generator and the fold
//! plan on separate streams; fold `f` trains from seed `s + f` on its own
//! stream, so folds are independent of execution order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    load_trials, make_all_windows, plan_folds, plan_sample_folds, select_samples, split_train_val_test, synth_trials,
    FoldPlan, NormStats, Sample, SplitScheme, SynthSpec, TaskFamily, Trial, WindowScheme,
};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_folds, evaluate, write_report, FoldEntry, FoldOutcome, Report};
use crate::models::{predict, save_params, ModelConfig, ParamSet};
use crate::tensor::Rng;
use crate::training::{fit, TrainHistory};

const SYNTH_STREAM: u64 = 1;
const PLAN_STREAM: u64 = 2;
const FOLD_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synth(SynthSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// `channels` and `classes` are filled in from the data.
    pub model: ModelConfig,
    pub source: DataSource,
    pub sampling: WindowScheme,
    pub split: SplitScheme,
    /// Ignored for LOSO.
    pub folds: usize,
    pub val_fraction: f64,
    pub normalize: bool,
    pub out: PathBuf,
}

const SYNTH_KEYS: [&str; 11] = [
    "synth.family",
    "synth.classes",
    "synth.subjects",
    "synth.trials_per_class",
    "synth.length",
    "synth.channels",
    "synth.noise",
    "synth.period",
    "synth.marker_amplitude",
    "synth.marker_len",
    "synth.marker_block",
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("invalid value `{v}` for `{key}`"))),
    }
}

/// Splits `key = value` lines. `#` starts a comment, blank lines are
/// skipped and a repeated key is an error.
pub fn parse_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if !seen.insert(k.to_string()) {
            return Err(Error::config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
        pairs.push((k.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Generator settings for the `synth` command: `synth.*` keys plus `seed`.
/// Trials come out identical to those an experiment with the same keys
/// generates in memory.
pub fn parse_synth_config(text: &str) -> Result<(SynthSpec, u64)> {
    let pairs = parse_lines(text)?;
    let mut seed = 0;
    let mut synth = Vec::new();
    for (k, v) in &pairs {
        match k.as_str() {
            "seed" => seed = parse(k, v)?,
            _ if SYNTH_KEYS.contains(&k.as_str()) => synth.push((k.as_str(), v.as_str())),
            _ => return Err(Error::config(format!("unknown key `{k}`"))),
        }
    }
    Ok((synth_spec(&synth)?, seed))
}

pub fn generate(spec: &SynthSpec, seed: u64) -> Result<Vec<Trial>> {
    synth_trials(spec, &mut Rng::with_stream(seed, SYNTH_STREAM))
}

impl ExperimentConfig {
    /// Parses `key = value` lines. `#` starts a comment; blank lines are
    /// skipped; repeated and unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_lines(text)?;
        Self::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let mut model = ModelConfig::proposed(0, 0, 0);
        let mut lr_set = false;
        let mut window_set = false;
        let mut data: Option<PathBuf> = None;
        let mut synth_pairs = Vec::new();
        let mut cfg = Self {
            model: model.clone(),
            source: DataSource::File(PathBuf::new()),
            sampling: WindowScheme::Snow,
            split: SplitScheme::Loto,
            folds: 10,
            val_fraction: 0.1,
            normalize: true,
            out: PathBuf::from("out"),
        };
        for &(k, v) in &pairs {
            match k {
                "data" => data = Some(PathBuf::from(v)),
                "sampling" => cfg.sampling = v.parse()?,
                "split" => cfg.split = v.parse()?,
                "folds" => cfg.folds = parse(k, v)?,
                "val_fraction" => cfg.val_fraction = parse(k, v)?,
                "normalize" => cfg.normalize = parse_bool(k, v)?,
                "out" => cfg.out = PathBuf::from(v),
                _ if SYNTH_KEYS.contains(&k) => synth_pairs.push((k, v)),
                _ => {
                    if !model.try_set(k, v)? {
                        return Err(Error::config(format!("unknown key `{k}`")));
                    }
                    lr_set |= k == "learning_rate";
                    window_set |= k == "window";
                }
            }
        }
        if !window_set {
            return Err(Error::config("`window` is required"));
        }
        if !lr_set {
            model.learning_rate = ModelConfig::default_learning_rate(model.arch);
        }
        cfg.model = model;
        cfg.source = match (data, synth_pairs.is_empty()) {
            (Some(p), true) => DataSource::File(p),
            (None, false) => DataSource::Synth(synth_spec(&synth_pairs)?),
            (Some(_), false) => return Err(Error::config("`data` and `synth.*` keys are mutually exclusive")),
            (None, true) => return Err(Error::config("a data source is required: `data` or `synth.family`")),
        };
        if !(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0) {
            return Err(Error::config(format!(
                "val_fraction must be in (0, 1), got {}",
                cfg.val_fraction
            )));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.model.seed
    }

    /// Effective settings as `key=value` pairs, parseable by
    /// [`ExperimentConfig::from_pairs`]. The output directory is left out:
    /// it does not affect results.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = self.model.to_pairs();
        match &self.source {
            DataSource::File(p) => out.push(("data".into(), p.display().to_string())),
            DataSource::Synth(s) => {
                let vals = [
                    s.family.to_string(),
                    s.classes.to_string(),
                    s.subjects.to_string(),
                    s.trials_per_class.to_string(),
                    s.length.to_string(),
                    s.channels.to_string(),
                    format!("{:?}", s.noise),
                    format!("{:?}", s.period),
                    format!("{:?}", s.marker_amplitude),
                    s.marker_len.to_string(),
                    s.marker_block.to_string(),
                ];
                out.extend(SYNTH_KEYS.iter().zip(vals).map(|(k, v)| (k.to_string(), v)));
            }
        }
        out.push(("sampling".into(), self.sampling.to_string()));
        out.push(("split".into(), self.split.to_string()));
        out.push(("folds".into(), self.folds.to_string()));
        out.push(("val_fraction".into(), format!("{:?}", self.val_fraction)));
        out.push(("normalize".into(), self.normalize.to_string()));
        out
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Loads or generates the trials and fixes `channels`/`classes` on the
    /// model config. Explicit values must agree with the data.
    pub fn load_data(&mut self) -> Result<Vec<Trial>> {
        let trials = match &self.source {
            DataSource::File(p) => load_trials(p)?,
            DataSource::Synth(spec) => generate(spec, self.seed())?,
        };
        let channels = trials[0].channels();
        let classes = trials.iter().map(|t| t.label).max().unwrap_or(0) + 1;
        for (name, given, found) in [
            ("channels", &mut self.model.channels, channels),
            ("classes", &mut self.model.classes, classes),
        ] {
            if *given == 0 {
                *given = found;
            } else if *given < found || (name == "channels" && *given != found) {
                return Err(Error::config(format!("`{name}` is {given} but the data has {found}")));
            }
        }
        self.model.validate()?;
        Ok(trials)
    }
}

fn synth_spec(pairs: &[(&str, &str)]) -> Result<SynthSpec> {
    let family: TaskFamily = pairs
        .iter()
        .find(|(k, _)| *k == "synth.family")
        .ok_or_else(|| Error::config("`synth.family` is required with other `synth.*` keys"))?
        .1
        .parse()?;
    let mut s = match family {
        TaskFamily::Separable => SynthSpec::separable(3, 10, 128, 3),
        TaskFamily::LongRange => SynthSpec::long_range(4, 25, 128, 3),
    };
    for &(k, v) in pairs {
        match k {
            "synth.family" => {}
            "synth.classes" => s.classes = parse(k, v)?,
            "synth.subjects" => s.subjects = parse(k, v)?,
            "synth.trials_per_class" => s.trials_per_class = parse(k, v)?,
            "synth.length" => s.length = parse(k, v)?,
            "synth.channels" => s.channels = parse(k, v)?,
            "synth.noise" => s.noise = parse(k, v)?,
            "synth.period" => s.period = parse(k, v)?,
            "synth.marker_amplitude" => s.marker_amplitude = parse(k, v)?,
            "synth.marker_len" => s.marker_len = parse(k, v)?,
            "synth.marker_block" => s.marker_block = parse(k, v)?,
            _ => unreachable!("filtered by SYNTH_KEYS"),
        }
    }
    s.validate()?;
    Ok(s)
}

/// Windows every trial and assigns folds.
pub fn prepare(cfg: &ExperimentConfig, trials: &[Trial]) -> Result<(Vec<Sample>, FoldPlan)> {
    let samples = make_all_windows(trials, cfg.model.window, cfg.sampling)?;
    if samples.is_empty() {
        return Err(Error::Data(format!(
            "no trial is at least {} time points long",
            cfg.model.window
        )));
    }
    let mut rng = Rng::with_stream(cfg.seed(), PLAN_STREAM);
    let plan = match cfg.split {
        SplitScheme::RandomSample => plan_sample_folds(samples.len(), cfg.folds, &mut rng)?,
        scheme => plan_folds(trials, cfg.folds, scheme, &mut rng)?,
    };
    Ok((samples, plan))
}

/// Result of training and testing on one fold.
#[derive(Clone, Debug)]
pub struct FoldRun {
    pub outcome: FoldOutcome,
    pub params: ParamSet,
    pub norm: Option<NormStats>,
}

pub fn run_fold(cfg: &ExperimentConfig, samples: &[Sample], plan: &FoldPlan, fold: usize) -> Result<FoldRun> {
    let mut rng = Rng::with_stream(cfg.seed().wrapping_add(fold as u64), FOLD_STREAM);
    let split = split_train_val_test(plan, fold, cfg.val_fraction, &mut rng)?;
    let mut train = select_samples(samples, plan.scheme, &split.train);
    let mut val = select_samples(samples, plan.scheme, &split.val);
    let mut test = select_samples(samples, plan.scheme, &split.test);
    for (name, set) in [("training", &train), ("validation", &val), ("test", &test)] {
        if set.is_empty() {
            return Err(Error::Data(format!("{name} split has no windows")));
        }
    }
    let norm = if cfg.normalize {
        let stats = NormStats::fit(&train)?;
        stats.apply(&mut train);
        stats.apply(&mut val);
        stats.apply(&mut test);
        Some(stats)
    } else {
        None
    };
    let (params, history) = fit(&cfg.model, &train, &val, &mut rng)?;
    let preds = test
        .iter()
        .map(|s| predict(&cfg.model, &params, &s.window))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = test.iter().map(|s| s.label).collect();
    let (confusion, metrics) = evaluate(&preds, &labels, cfg.model.classes)?;
    Ok(FoldRun {
        outcome: FoldOutcome {
            fold_index: fold,
            confusion,
            metrics,
            history,
            train_samples: train.len(),
            val_samples: val.len(),
            test_samples: test.len(),
        },
        params,
        norm,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))
}

fn config_map(cfg: &ExperimentConfig) -> BTreeMap<String, String> {
    cfg.to_pairs().into_iter().collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Cross-validation run. Folds execute on up to `jobs` threads; the report
/// is assembled in fold order afterwards.
///
/// Writes `report.json`, `fold_plan.csv` and `history_fold{f}.csv` into
/// `cfg.out`.
pub fn run_xval(cfg: &ExperimentConfig, jobs: usize) -> Result<Report> {
    let mut cfg = cfg.clone();
    let trials = cfg.load_data()?;
    let (samples, plan) = prepare(&cfg, &trials)?;
    if plan.k < 2 {
        return Err(Error::config(format!(
            "cross-validation needs at least 2 folds, got {}",
            plan.k
        )));
    }
    let runs: Vec<Result<FoldRun>> = pool(jobs)?.install(|| {
        (0..plan.k)
            .into_par_iter()
            .map(|f| run_fold(&cfg, &samples, &plan, f))
            .collect()
    });
    let mut outcomes = Vec::with_capacity(runs.len());
    for (fold, r) in runs.into_iter().enumerate() {
        outcomes.push(
            r.map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })?
            .outcome,
        );
    }
    let metrics: Vec<_> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let summary = aggregate_folds(&metrics)?;
    let report = Report::new(config_map(&cfg), &summary, &outcomes)?;

    create_dir(&cfg.out)?;
    write_report(&report, &cfg.out.join("report.json"))?;
    write(&cfg.out.join("fold_plan.csv"), plan.to_csv())?;
    for o in &outcomes {
        write(
            &cfg.out.join(format!("history_fold{}.csv", o.fold_index)),
            o.history.to_records_csv(),
        )?;
    }
    Ok(report)
}

/// Single-split summary written by [`run_train`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: BTreeMap<String, String>,
    pub fold: FoldEntry,
    pub history: TrainHistory,
    pub norm: Option<NormStats>,
}

/// Trains once, testing on fold 0 of the configured plan. Writes
/// `model.bin`, `history.csv` and `train_report.json` into `cfg.out`.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    let mut cfg = cfg.clone();
    let trials = cfg.load_data()?;
    let (samples, plan) = prepare(&cfg, &trials)?;
    if plan.k < 2 {
        return Err(Error::config("a train/test split needs at least 2 folds"));
    }
    let run = run_fold(&cfg, &samples, &plan, 0)?;
    let report = TrainReport {
        config: config_map(&cfg),
        fold: FoldEntry::from_outcome(&run.outcome),
        history: run.outcome.history.clone(),
        norm: run.norm,
    };

    create_dir(&cfg.out)?;
    save_params(&cfg.out.join("model.bin"), &cfg.model, &run.params)?;
    write(&cfg.out.join("history.csv"), run.outcome.history.to_records_csv())?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serialises");
    json.push('\n');
    write(&cfg.out.join("train_report.json"), json)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::read_report;

    const SMALL: &str = "
        # tiny separable run
        arch = proposed
        window = 16
        lstm_units = 6
        attention_len = 4
        attention_out = 2
        learning_rate = 0.01
        max_epochs = 3
        folds = 3
        synth.family = separable
        synth.trials_per_class = 3
        synth.length = 48
    ";

    #[test]
    fn parse_defaults_and_echo() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        assert_eq!(cfg.sampling, WindowScheme::Snow);
        assert_eq!(cfg.split, SplitScheme::Loto);
        assert_eq!(cfg.val_fraction, 0.1);
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "window=16\nwindow=8\nsynth.family=separable",
            "window=16\nbogus=1\nsynth.family=separable",
            "synth.family=separable",
            "window=16",
            "window=16\ndata=x.csv\nsynth.family=separable",
            "window=16\nsynth.length=40",
            "window=16\nsynth.family=separable\nval_fraction=1",
            "window=16\nsynth.family=separable\nnonsense",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))),
                "accepted: {bad:?}"
            );
        }
    }

    #[test]
    fn synth_config_matches_experiment_data() {
        let (spec, seed) = parse_synth_config("seed = 4\nsynth.family = long_range\nsynth.length = 64").unwrap();
        let mut cfg = ExperimentConfig::parse("window=32\nseed=4\nsynth.family=long_range\nsynth.length=64").unwrap();
        assert_eq!(generate(&spec, seed).unwrap(), cfg.load_data().unwrap());
        assert!(parse_synth_config("window = 3\nsynth.family = separable").is_err());
    }

    #[test]
    fn baseline_gets_its_learning_rate() {
        let cfg = ExperimentConfig::parse("arch=baseline\nwindow=8\nsynth.family=separable").unwrap();
        assert_eq!(cfg.model.learning_rate, 1e-3);
    }

    #[test]
    fn xval_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        cfg.out = dir.path().to_path_buf();
        let report = run_xval(&cfg, 2).unwrap();
        assert_eq!(report.folds.len(), 3);
        assert_eq!(report.config["channels"], "3");
        assert_eq!(report.config["classes"], "3");
        assert_eq!(read_report(&dir.path().join("report.json")).unwrap(), report);
        for f in 0..3 {
            assert!(dir.path().join(format!("history_fold{f}.csv")).exists());
        }
        let plan = fs::read_to_string(dir.path().join("fold_plan.csv")).unwrap();
        assert_eq!(plan.lines().count(), 1 + 9);
    }

    #[test]
    fn jobs_do_not_change_results() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        cfg.out = a.path().to_path_buf();
        run_xval(&cfg, 1).unwrap();
        cfg.out = b.path().to_path_buf();
        run_xval(&cfg, 3).unwrap();
        assert_eq!(
            fs::read(a.path().join("report.json")).unwrap(),
            fs::read(b.path().join("report.json")).unwrap()
        );
    }

    #[test]
    fn too_many_folds_is_config_error() {
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        cfg.folds = 100;
        cfg.out = tempfile::tempdir().unwrap().path().to_path_buf();
        assert!(matches!(run_xval(&cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn fold_errors_carry_the_index() {
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        // 6 remaining trials, ceil(0.9 * 6) = 6 go to validation
        cfg.val_fraction = 0.9;
        cfg.out = tempfile::tempdir().unwrap().path().to_path_buf();
        let err = run_xval(&cfg, 1).unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 0, .. }), "{err:?}");
        assert_eq!(err.kind(), crate::ErrorKind::Config);
    }

    #[test]
    fn train_saves_model() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        cfg.out = dir.path().to_path_buf();
        let report = run_train(&cfg).unwrap();
        let (mcfg, params) = crate::models::load_params(&dir.path().join("model.bin")).unwrap();
        assert_eq!(mcfg.channels, 3);
        assert_eq!(params.num_params(), crate::models::ParamSet::zeros(&mcfg).num_params());
        assert_eq!(report.history.records.len(), report.history.stop_epoch);
        assert!(dir.path().join("history.csv").exists());
    }
}
