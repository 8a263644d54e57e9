use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::layers::cross_entropy;
use crate::models::{argmax, backward, forward, init_params, ModelConfig, ParamSet};
use crate::tensor::Rng;
use crate::training::{adam_step, AdamState, EarlyStopState, StopDecision};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// One-based.
    pub epoch: usize,
    /// Running mean of batch losses over the epoch, each computed with the
    /// parameters in effect for that batch.
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStopping,
    MaxEpochs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Number of epochs actually run.
    pub stop_epoch: usize,
    pub stop_reason: StopReason,
    /// One-based epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    /// `epoch,train_loss,val_loss,val_acc` lines under a header.
    pub fn to_records_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_acc\n");
        for r in &self.records {
            writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.val_acc).expect("string write");
        }
        s
    }
}

/// Mean cross-entropy and accuracy of `params` over `samples`.
pub fn evaluate_loss(cfg: &ModelConfig, params: &ParamSet, samples: &[Sample]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let tr = forward(cfg, params, &s.window)?;
        loss += cross_entropy(&tr.probs, s.label)?;
        if argmax(&tr.probs) == s.label {
            correct += 1;
        }
    }
    let n = samples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

fn check_samples(cfg: &ModelConfig, samples: &[Sample], what: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::config(format!("{what} split is empty")));
    }
    for s in samples {
        if s.window.len() != cfg.window || s.window.channels() != cfg.channels {
            return Err(Error::config(format!(
                "{what} sample from trial {} is {}x{}, model expects {}x{}",
                s.trial_id,
                s.window.len(),
                s.window.channels(),
                cfg.window,
                cfg.channels
            )));
        }
        if s.label >= cfg.classes {
            return Err(Error::Index {
                index: s.label,
                len: cfg.classes,
            });
        }
    }
    Ok(())
}

/// Initialises parameters from `rng`, then trains with [`fit_from`].
pub fn fit(cfg: &ModelConfig, train: &[Sample], val: &[Sample], rng: &mut Rng) -> Result<(ParamSet, TrainHistory)> {
    let params = init_params(cfg, rng)?;
    fit_from(cfg, params, train, val, rng)
}

/// Mini-batch Adam with early stopping on validation loss.
///
/// The training set is reshuffled every epoch and the final short batch is
/// kept. Batch gradients are means over the batch. The best-validation
/// parameters are returned whether or not early stopping fired.
pub fn fit_from(
    cfg: &ModelConfig,
    mut params: ParamSet,
    train: &[Sample],
    val: &[Sample],
    rng: &mut Rng,
) -> Result<(ParamSet, TrainHistory)> {
    cfg.validate()?;
    check_samples(cfg, train, "training")?;
    check_samples(cfg, val, "validation")?;

    let mut adam = AdamState::new(&params);
    let mut stopper = EarlyStopState::new(cfg.patience);
    let mut records = Vec::new();
    let mut reason = StopReason::MaxEpochs;

    for epoch in 0..cfg.max_epochs {
        let order = rng.permutation(train.len());
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = params.zeros_like();
            let mut batch_loss = 0.0;
            for &i in batch {
                let s = &train[i];
                let tr = forward(cfg, &params, &s.window)?;
                batch_loss += cross_entropy(&tr.probs, s.label)?;
                grads.add_assign(&backward(cfg, &params, &tr, s.label)?)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            loss_sum += batch_loss;
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut params, &grads, &mut adam, cfg.learning_rate)?;
        }

        let (val_loss, val_acc) = evaluate_loss(cfg, &params, val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        records.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            val_acc,
        });
        if stopper.update(val_loss, &mut params) == StopDecision::Stop {
            reason = StopReason::EarlyStopping;
            break;
        }
    }
    stopper.restore(&mut params);

    let history = TrainHistory {
        stop_epoch: records.len(),
        stop_reason: reason,
        best_epoch: stopper.best_epoch().map_or(0, |e| e + 1),
        records,
    };
    Ok((params, history))
}
