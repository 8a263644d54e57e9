use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// `-ln(max(p[label], PROB_FLOOR))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = *probs.get(label).ok_or(Error::Index {
        index: label,
        len: probs.len(),
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Gradient of `cross_entropy(softmax(z), label)` with respect to the logits
/// `z`. Inside the clamped region the loss is flat, so the gradient is zero.
pub fn cross_entropy_logit_grad(probs: &[f64], label: usize) -> Result<Vec<f64>> {
    if label >= probs.len() {
        return Err(Error::Index {
            index: label,
            len: probs.len(),
        });
    }
    if probs[label] <= PROB_FLOOR {
        return Ok(vec![0.0; probs.len()]);
    }
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    Ok(g)
}
