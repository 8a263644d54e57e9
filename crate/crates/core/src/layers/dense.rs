use crate::error::{Error, Result};
use crate::tensor::{dot, softmax_in_place, Matrix};

/// Output layer: `weight` is `C×M`, `bias` is `1×C`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl DenseParams {
    pub fn zeros(inputs: usize, classes: usize) -> Self {
        Self {
            weight: Matrix::zeros(classes, inputs),
            bias: Matrix::zeros(1, classes),
        }
    }

    pub fn classes(&self) -> usize {
        self.weight.rows()
    }
}

/// Returns `(logits, probabilities)` for `softmax(W·s + b)`.
pub fn dense_softmax(s: &[f64], p: &DenseParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if s.len() != p.weight.cols() {
        return Err(Error::Dimension {
            op: "dense_softmax",
            lhs: p.weight.shape(),
            rhs: (s.len(), 1),
        });
    }
    let logits: Vec<f64> = (0..p.classes())
        .map(|c| dot(p.weight.row(c), s) + p.bias.as_slice()[c])
        .collect();
    let mut probs = logits.clone();
    softmax_in_place(&mut probs);
    Ok((logits, probs))
}

/// Row-major flattening of an `F×E` score matrix.
pub fn flatten_scores(scores: &Matrix) -> Vec<f64> {
    scores.as_slice().to_vec()
}

/// Gradients of the output layer and `∂L/∂s` from `∂L/∂logits`.
pub fn dense_backward(s: &[f64], p: &DenseParams, d_logits: &[f64]) -> (DenseParams, Vec<f64>) {
    let mut weight = Matrix::zeros(p.classes(), s.len());
    let mut ds = vec![0.0; s.len()];
    for (c, &g) in d_logits.iter().enumerate() {
        for (w, &x) in weight.row_mut(c).iter_mut().zip(s) {
            *w = g * x;
        }
        for (d, &w) in ds.iter_mut().zip(p.weight.row(c)) {
            *d += g * w;
        }
    }
    (
        DenseParams {
            weight,
            bias: Matrix::row_vector(d_logits),
        },
        ds,
    )
}
