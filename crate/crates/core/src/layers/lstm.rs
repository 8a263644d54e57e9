use crate::error::{Error, Result};
use crate::tensor::{dot, Matrix};

/// One LSTM layer. Gate rows are stacked `[input, forget, candidate, output]`,
/// each block `E` rows tall.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    /// `4E × input`
    pub w_ih: Matrix,
    /// `4E × E`
    pub w_hh: Matrix,
    /// `1 × 4E`
    pub bias: Matrix,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_ih: Matrix::zeros(4 * hidden, input),
            w_hh: Matrix::zeros(4 * hidden, hidden),
            bias: Matrix::zeros(1, 4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.cols()
    }
}

/// Activations cached by [`lstm_forward`] for backpropagation through time.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmTrace {
    pub input: Matrix,
    /// `T × 4E` post-activation gates (sigmoid for i/f/o, tanh for candidate).
    pub gates: Matrix,
    /// `T × E` cell states.
    pub cells: Matrix,
    /// `T × E` `tanh(c_t)`.
    pub cells_tanh: Matrix,
    /// `T × E` hidden states, the layer output.
    pub hidden: Matrix,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Runs the recurrence from zero initial hidden and cell states.
pub fn lstm_forward(x: &Matrix, p: &LstmParams) -> Result<LstmTrace> {
    if x.cols() != p.input() {
        return Err(Error::Dimension {
            op: "lstm_forward",
            lhs: x.shape(),
            rhs: p.w_ih.shape(),
        });
    }
    let e = p.hidden();
    let steps = x.rows();
    let mut gates = Matrix::zeros(steps, 4 * e);
    let mut cells = Matrix::zeros(steps, e);
    let mut cells_tanh = Matrix::zeros(steps, e);
    let mut hidden = Matrix::zeros(steps, e);
    let mut h_prev = vec![0.0; e];
    let mut c_prev = vec![0.0; e];
    let bias = p.bias.as_slice();

    for t in 0..steps {
        let xt = x.row(t);
        let g = gates.row_mut(t);
        for (r, gr) in g.iter_mut().enumerate() {
            *gr = bias[r] + dot(p.w_ih.row(r), xt) + dot(p.w_hh.row(r), &h_prev);
        }
        for j in 0..e {
            g[j] = sigmoid(g[j]);
            g[e + j] = sigmoid(g[e + j]);
            g[2 * e + j] = g[2 * e + j].tanh();
            g[3 * e + j] = sigmoid(g[3 * e + j]);
        }
        for j in 0..e {
            let c = g[e + j] * c_prev[j] + g[j] * g[2 * e + j];
            let tc = c.tanh();
            cells[(t, j)] = c;
            cells_tanh[(t, j)] = tc;
            hidden[(t, j)] = g[3 * e + j] * tc;
        }
        h_prev.copy_from_slice(hidden.row(t));
        c_prev.copy_from_slice(cells.row(t));
    }

    Ok(LstmTrace {
        input: x.clone(),
        gates,
        cells,
        cells_tanh,
        hidden,
    })
}

/// Stacked hidden states `h_e(1..T)` as a `T×E` matrix.
pub fn lstm_encode(x: &Matrix, p: &LstmParams) -> Result<Matrix> {
    Ok(lstm_forward(x, p)?.hidden)
}

/// Backpropagation through time. `d_hidden` is the upstream gradient with
/// respect to every hidden state (`T×E`). Returns parameter gradients and
/// the gradient with respect to the layer input.
pub fn lstm_backward(trace: &LstmTrace, p: &LstmParams, d_hidden: &Matrix) -> Result<(LstmParams, Matrix)> {
    if d_hidden.shape() != trace.hidden.shape() {
        return Err(Error::Dimension {
            op: "lstm_backward",
            lhs: d_hidden.shape(),
            rhs: trace.hidden.shape(),
        });
    }
    let e = p.hidden();
    let steps = trace.hidden.rows();
    let mut grads = LstmParams::zeros(p.input(), e);
    let mut dx = Matrix::zeros(steps, p.input());
    let mut dh_next = vec![0.0; e];
    let mut dc_next = vec![0.0; e];
    let mut dz = vec![0.0; 4 * e];
    let zeros = vec![0.0; e];

    for t in (0..steps).rev() {
        let g = trace.gates.row(t);
        let tc = trace.cells_tanh.row(t);
        let (c_prev, h_prev) = if t == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (trace.cells.row(t - 1), trace.hidden.row(t - 1))
        };
        let upstream = d_hidden.row(t);
        for j in 0..e {
            let (i, f, cand, o) = (g[j], g[e + j], g[2 * e + j], g[3 * e + j]);
            let dh = upstream[j] + dh_next[j];
            let d_o = dh * tc[j];
            let dc = dh * o * (1.0 - tc[j] * tc[j]) + dc_next[j];
            let d_i = dc * cand;
            let d_cand = dc * i;
            let d_f = dc * c_prev[j];
            dc_next[j] = dc * f;
            dz[j] = d_i * i * (1.0 - i);
            dz[e + j] = d_f * f * (1.0 - f);
            dz[2 * e + j] = d_cand * (1.0 - cand * cand);
            dz[3 * e + j] = d_o * o * (1.0 - o);
        }

        let xt = trace.input.row(t);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        let dxt = dx.row_mut(t);
        for (r, &dzr) in dz.iter().enumerate() {
            if dzr == 0.0 {
                continue;
            }
            grads.bias.as_mut_slice()[r] += dzr;
            for (w, &xv) in grads.w_ih.row_mut(r).iter_mut().zip(xt) {
                *w += dzr * xv;
            }
            for (w, &hv) in grads.w_hh.row_mut(r).iter_mut().zip(h_prev) {
                *w += dzr * hv;
            }
            for (d, &w) in dxt.iter_mut().zip(p.w_ih.row(r)) {
                *d += dzr * w;
            }
            for (d, &w) in dh_next.iter_mut().zip(p.w_hh.row(r)) {
                *d += dzr * w;
            }
        }
    }
    Ok((grads, dx))
}
