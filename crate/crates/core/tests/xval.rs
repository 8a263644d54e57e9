use std::fs;

use convattn::experiment::{run_xval, ExperimentConfig};
use convattn::metrics::read_report;

#[test]
fn separable_five_fold_loto_is_accurate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::parse(
        "arch = proposed
         learning_rate = 0.001
         window = 32
         folds = 5
         synth.family = separable
         synth.classes = 3
         synth.trials_per_class = 10
         synth.length = 128",
    )
    .unwrap();
    cfg.out = dir.path().to_path_buf();
    let report = run_xval(&cfg, 1).unwrap();
    assert_eq!(report.folds.len(), 5);
    assert!(report.aggregate.accuracy.mean >= 0.9, "{:?}", report.boxplot.accuracy);
    assert_eq!(read_report(&dir.path().join("report.json")).unwrap(), report);

    // the echoed config reproduces the run
    let echo: String = report.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    let mut again = ExperimentConfig::parse(&echo).unwrap();
    again.out = dir.path().join("again");
    run_xval(&again, 1).unwrap();
    assert_eq!(
        fs::read(dir.path().join("report.json")).unwrap(),
        fs::read(dir.path().join("again/report.json")).unwrap()
    );
}

#[test]
fn loso_has_one_fold_per_subject() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::parse(
        "arch = baseline
         window = 16
         lstm_units = 4
         max_epochs = 2
         split = loso
         synth.family = separable
         synth.subjects = 4
         synth.trials_per_class = 4
         synth.length = 48",
    )
    .unwrap();
    cfg.out = dir.path().to_path_buf();
    let report = run_xval(&cfg, 2).unwrap();
    assert_eq!(report.folds.len(), 4);
    let plan = fs::read_to_string(dir.path().join("fold_plan.csv")).unwrap();
    assert_eq!(plan.lines().count(), 1 + 12);
}
