use crate::error::{Error, Result};
use crate::tensor::{dot, Matrix};

/// Full-width filters over the channel axis, applied independently at every
/// time point. `weight` is `K×N` (one filter per row), `bias` is `1×K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl ConvParams {
    pub fn zeros(channels: usize, filters: usize) -> Self {
        Self {
            weight: Matrix::zeros(filters, channels),
            bias: Matrix::zeros(1, filters),
        }
    }

    pub fn filters(&self) -> usize {
        self.weight.rows()
    }

    pub fn channels(&self) -> usize {
        self.weight.cols()
    }
}

/// `h_c[t, k] = Σ_n x[t, n] · w_k[n] + bias_k`. Input is `T×N`, output `T×K`.
pub fn conv_embed(x: &Matrix, p: &ConvParams) -> Result<Matrix> {
    if x.cols() != p.channels() {
        return Err(Error::config(format!(
            "filter width {} does not match {} input channels",
            p.channels(),
            x.cols()
        )));
    }
    if p.filters() == 0 {
        return Err(Error::config("need at least one filter"));
    }
    let bias = p.bias.as_slice();
    Ok(Matrix::from_fn(x.rows(), p.filters(), |t, k| {
        dot(x.row(t), p.weight.row(k)) + bias[k]
    }))
}

/// Returns parameter gradients and the gradient with respect to the input.
pub fn conv_backward(x: &Matrix, p: &ConvParams, d_out: &Matrix) -> Result<(ConvParams, Matrix)> {
    let weight = d_out.transposed_matmul(x)?;
    let mut bias = Matrix::zeros(1, p.filters());
    for t in 0..d_out.rows() {
        for (b, &g) in bias.as_mut_slice().iter_mut().zip(d_out.row(t)) {
            *b += g;
        }
    }
    let dx = d_out.matmul(&p.weight)?;
    Ok((ConvParams { weight, bias }, dx))
}
