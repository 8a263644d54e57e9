use crate::error::{Error, Result};
use crate::layers::{
    attention_backward, conv_backward, conv_embed, cross_entropy, cross_entropy_logit_grad, dense_backward,
    dense_softmax, flatten_scores, lstm_backward, lstm_forward, self_attention, AttentionTrace, LstmTrace,
    SampleWindow,
};
use crate::models::{Arch, Gradients, ModelConfig, ParamSet};
use crate::tensor::Matrix;

/// Activations from one forward pass, consumed by [`backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub input: Matrix,
    /// Convolution output `h_c`, `T×K`.
    pub conv: Matrix,
    pub lstm: Vec<LstmTrace>,
    pub attention: Option<AttentionTrace>,
    /// Input to the output layer: flattened `S` for the proposed model, the
    /// last hidden state for the baseline.
    pub features: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardTrace {
    /// Encoder output `h_e`, `T×E`.
    pub fn encoded(&self) -> &Matrix {
        &self.lstm.last().expect("at least one LSTM layer").hidden
    }
}

fn check_shapes(cfg: &ModelConfig, params: &ParamSet, x: &SampleWindow) -> Result<()> {
    if x.channels() != cfg.channels || x.len() != cfg.window {
        return Err(Error::config(format!(
            "window is {}x{}, model expects {}x{}",
            x.len(),
            x.channels(),
            cfg.window,
            cfg.channels
        )));
    }
    if (cfg.arch == Arch::Proposed) != params.attention.is_some() {
        return Err(Error::config(format!(
            "parameters do not match the `{}` architecture",
            cfg.arch
        )));
    }
    Ok(())
}

pub fn forward(cfg: &ModelConfig, params: &ParamSet, x: &SampleWindow) -> Result<ForwardTrace> {
    check_shapes(cfg, params, x)?;
    let input = x.values().clone();
    let conv = conv_embed(&input, &params.conv)?;

    let mut lstm = Vec::with_capacity(params.lstm.len());
    for layer in &params.lstm {
        let src = lstm.last().map_or(&conv, |t: &LstmTrace| &t.hidden);
        let trace = lstm_forward(src, layer)?;
        lstm.push(trace);
    }
    let encoded = &lstm.last().ok_or_else(|| Error::config("no LSTM layers"))?.hidden;

    let (attention, features) = match &params.attention {
        Some(att) => {
            let tr = self_attention(encoded, att)?;
            let s = flatten_scores(&tr.scores);
            (Some(tr), s)
        }
        None => (None, encoded.row(encoded.rows() - 1).to_vec()),
    };
    let (logits, probs) = dense_softmax(&features, &params.output)?;
    Ok(ForwardTrace {
        input,
        conv,
        lstm,
        attention,
        features,
        logits,
        probs,
    })
}

/// Gradient of `cross_entropy(forward(x), label)` for every parameter.
pub fn backward(cfg: &ModelConfig, params: &ParamSet, trace: &ForwardTrace, label: usize) -> Result<Gradients> {
    Ok(backward_scaled(cfg, params, trace, label, 1.0)?.0)
}

/// Gradient of `scale · loss`, plus the gradient with respect to the input
/// window.
pub fn backward_scaled(
    cfg: &ModelConfig,
    params: &ParamSet,
    trace: &ForwardTrace,
    label: usize,
    scale: f64,
) -> Result<(Gradients, Matrix)> {
    if label >= cfg.classes {
        return Err(Error::Index {
            index: label,
            len: cfg.classes,
        });
    }
    let mut d_logits = cross_entropy_logit_grad(&trace.probs, label)?;
    d_logits.iter_mut().for_each(|g| *g *= scale);

    let (output, d_features) = dense_backward(&trace.features, &params.output, &d_logits);
    let encoded = trace.encoded();
    let (steps, units) = encoded.shape();

    let (attention, mut d_hidden) = match (&params.attention, &trace.attention) {
        (Some(att), Some(tr)) => {
            let d_scores = Matrix::new(tr.scores.rows(), tr.scores.cols(), d_features)?;
            let (g, dh) = attention_backward(encoded, att, tr, &d_scores)?;
            (Some(g), dh)
        }
        (None, None) => {
            let mut dh = Matrix::zeros(steps, units);
            dh.row_mut(steps - 1).copy_from_slice(&d_features);
            (None, dh)
        }
        _ => return Err(Error::config("trace does not match parameters")),
    };

    let mut lstm = vec![None; params.lstm.len()];
    for (l, (layer, tr)) in params.lstm.iter().zip(&trace.lstm).enumerate().rev() {
        let (g, dx) = lstm_backward(tr, layer, &d_hidden)?;
        lstm[l] = Some(g);
        d_hidden = dx;
    }
    let (conv, d_input) = conv_backward(&trace.input, &params.conv, &d_hidden)?;

    Ok((
        ParamSet {
            conv,
            lstm: lstm.into_iter().map(|g| g.expect("filled above")).collect(),
            attention,
            output,
        },
        d_input,
    ))
}

/// Forward pass plus loss.
pub fn loss(cfg: &ModelConfig, params: &ParamSet, x: &SampleWindow, label: usize) -> Result<f64> {
    let tr = forward(cfg, params, x)?;
    cross_entropy(&tr.probs, label)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict(cfg: &ModelConfig, params: &ParamSet, x: &SampleWindow) -> Result<usize> {
    Ok(argmax(&forward(cfg, params, x)?.probs))
}
