use crate::error::{Error, Result};
use crate::tensor::{softmax_rows, Matrix};

/// Self-attention weights: `u` is `D×E`, `v` is `F×D`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub u: Matrix,
    pub v: Matrix,
}

impl AttentionParams {
    pub fn zeros(hidden: usize, length: usize, outputs: usize) -> Self {
        Self {
            u: Matrix::zeros(length, hidden),
            v: Matrix::zeros(outputs, length),
        }
    }

    pub fn outputs(&self) -> usize {
        self.v.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionTrace {
    /// `tanh(U · h_eᵀ)`, `D×T`.
    pub activations: Matrix,
    /// Attention weights, `F×T`; each row is a distribution over time points.
    pub alpha: Matrix,
    /// `S = α · h_e`, `F×E`.
    pub scores: Matrix,
}

/// `α = softmax_rows(V · tanh(U · h_eᵀ))`, `S = α · h_e`.
pub fn self_attention(h_e: &Matrix, p: &AttentionParams) -> Result<AttentionTrace> {
    if p.u.cols() != h_e.cols() || p.v.cols() != p.u.rows() {
        return Err(Error::Dimension {
            op: "self_attention",
            lhs: h_e.shape(),
            rhs: p.u.shape(),
        });
    }
    let activations = p.u.matmul_transposed(h_e)?.map(f64::tanh);
    let alpha = softmax_rows(&p.v.matmul(&activations)?)?;
    let scores = alpha.matmul(h_e)?;
    Ok(AttentionTrace {
        activations,
        alpha,
        scores,
    })
}

/// Returns parameter gradients and `∂L/∂h_e` given `∂L/∂S`.
pub fn attention_backward(
    h_e: &Matrix,
    p: &AttentionParams,
    trace: &AttentionTrace,
    d_scores: &Matrix,
) -> Result<(AttentionParams, Matrix)> {
    let alpha = &trace.alpha;
    // S = α h_e
    let d_alpha = d_scores.matmul_transposed(h_e)?;
    let mut d_h = alpha.transposed_matmul(d_scores)?;

    // row-wise softmax Jacobian
    let mut d_logits = Matrix::zeros(alpha.rows(), alpha.cols());
    for f in 0..alpha.rows() {
        let a = alpha.row(f);
        let da = d_alpha.row(f);
        let inner: f64 = a.iter().zip(da).map(|(x, y)| x * y).sum();
        for (out, (&ai, &dai)) in d_logits.row_mut(f).iter_mut().zip(a.iter().zip(da)) {
            *out = ai * (dai - inner);
        }
    }

    let d_v = d_logits.matmul_transposed(&trace.activations)?;
    let d_act = p.v.transposed_matmul(&d_logits)?;
    let d_pre = d_act.hadamard(&trace.activations.map(|z| 1.0 - z * z))?;
    let d_u = d_pre.matmul(h_e)?;
    d_h.add_assign(&d_pre.transposed_matmul(&p.u)?)?;
    Ok((AttentionParams { u: d_u, v: d_v }, d_h))
}
