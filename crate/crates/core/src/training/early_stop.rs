use crate::models::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Tracks the best validation loss seen so far.
///
/// Only a strictly lower loss counts as an improvement. After `patience`
/// non-improving epochs the next non-improving epoch stops training and
/// restores the best snapshot.
#[derive(Clone, Debug)]
pub struct EarlyStopState {
    best_loss: f64,
    best_epoch: Option<usize>,
    since_improvement: usize,
    patience: usize,
    epochs_seen: usize,
    best: Option<ParamSet>,
}

impl EarlyStopState {
    pub fn new(patience: usize) -> Self {
        Self {
            best_loss: f64::INFINITY,
            best_epoch: None,
            since_improvement: 0,
            patience,
            epochs_seen: 0,
            best: None,
        }
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    /// Zero-based epoch of the best snapshot.
    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn since_improvement(&self) -> usize {
        self.since_improvement
    }

    pub fn best_params(&self) -> Option<&ParamSet> {
        self.best.as_ref()
    }

    /// Records one epoch's validation loss. On [`StopDecision::Stop`],
    /// `params` has been overwritten with the best snapshot.
    pub fn update(&mut self, val_loss: f64, params: &mut ParamSet) -> StopDecision {
        let epoch = self.epochs_seen;
        self.epochs_seen += 1;
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.best_epoch = Some(epoch);
            self.since_improvement = 0;
            self.best = Some(params.clone());
            return StopDecision::Continue;
        }
        if self.since_improvement == self.patience {
            self.restore(params);
            return StopDecision::Stop;
        }
        self.since_improvement += 1;
        StopDecision::Continue
    }

    /// Copies the best snapshot into `params`, if one exists.
    pub fn restore(&self, params: &mut ParamSet) {
        if let Some(best) = &self.best {
            params.clone_from(best);
        }
    }
}
