use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::layers::{AttentionParams, ConvParams, DenseParams, LstmParams};
use crate::models::{Arch, ModelConfig};
use crate::tensor::{Matrix, Rng};

/// Every trainable tensor of one network.
///
/// The same type doubles as the gradient buffer and as Adam's moment
/// buffers, so shapes line up by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub conv: ConvParams,
    pub lstm: Vec<LstmParams>,
    pub attention: Option<AttentionParams>,
    pub output: DenseParams,
}

pub type Gradients = ParamSet;

impl ParamSet {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let lstm = (0..cfg.lstm_layers)
            .map(|l| {
                let input = if l == 0 { cfg.filters } else { cfg.lstm_units };
                LstmParams::zeros(input, cfg.lstm_units)
            })
            .collect();
        let attention = (cfg.arch == Arch::Proposed)
            .then(|| AttentionParams::zeros(cfg.lstm_units, cfg.attention_len, cfg.attention_out));
        Self {
            conv: ConvParams::zeros(cfg.channels, cfg.filters),
            lstm,
            attention,
            output: DenseParams::zeros(cfg.feature_len(), cfg.classes),
        }
    }

    /// Same structure, every entry zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    /// Named tensors in a stable order. This order defines the flat view and
    /// the on-disk layout.
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![
            ("conv.weight".to_string(), &self.conv.weight),
            ("conv.bias".to_string(), &self.conv.bias),
        ];
        for (i, l) in self.lstm.iter().enumerate() {
            out.push((format!("lstm{i}.w_ih"), &l.w_ih));
            out.push((format!("lstm{i}.w_hh"), &l.w_hh));
            out.push((format!("lstm{i}.bias"), &l.bias));
        }
        if let Some(a) = &self.attention {
            out.push(("attention.u".to_string(), &a.u));
            out.push(("attention.v".to_string(), &a.v));
        }
        out.push(("output.weight".to_string(), &self.output.weight));
        out.push(("output.bias".to_string(), &self.output.bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = vec![
            ("conv.weight".to_string(), &mut self.conv.weight),
            ("conv.bias".to_string(), &mut self.conv.bias),
        ];
        for (i, l) in self.lstm.iter_mut().enumerate() {
            out.push((format!("lstm{i}.w_ih"), &mut l.w_ih));
            out.push((format!("lstm{i}.w_hh"), &mut l.w_hh));
            out.push((format!("lstm{i}.bias"), &mut l.bias));
        }
        if let Some(a) = &mut self.attention {
            out.push(("attention.u".to_string(), &mut a.u));
            out.push(("attention.v".to_string(), &mut a.v));
        }
        out.push(("output.weight".to_string(), &mut self.output.weight));
        out.push(("output.bias".to_string(), &mut self.output.bias));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, m) in self.tensors() {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        let total = self.num_params();
        if flat.len() != total {
            return Err(Error::Dimension {
                op: "unflatten",
                lhs: (total, 1),
                rhs: (flat.len(), 1),
            });
        }
        let mut offset = 0;
        for (_, m) in self.tensors_mut() {
            let n = m.len();
            m.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        for (_, m) in self.tensors_mut() {
            m.fill(value);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (_, m) in self.tensors_mut() {
            m.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn add_assign(&mut self, other: &ParamSet) -> Result<()> {
        let theirs = other.tensors();
        let mine = self.tensors_mut();
        if mine.len() != theirs.len() {
            return Err(Error::config("parameter sets have different structure"));
        }
        for ((_, a), (_, b)) in mine.into_iter().zip(theirs) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    /// Parameters belonging to the attention module.
    pub fn attention_params(&self) -> usize {
        self.attention.as_ref().map_or(0, |a| a.u.len() + a.v.len())
    }
}

fn glorot(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Matrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-bound, bound))
}

/// Orthogonal `n×n` matrix: Q factor of a Gaussian matrix, with column signs
/// fixed by `diag(R)` so the draw is uniform over the orthogonal group.
fn orthogonal(n: usize, rng: &mut Rng) -> Matrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.normal());
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Matrix::from_fn(n, n, |i, j| q[(i, j)])
}

/// Glorot-uniform weights, orthogonal recurrent blocks, zero biases except a
/// forget-gate bias of one.
pub fn init_params(cfg: &ModelConfig, rng: &mut Rng) -> Result<ParamSet> {
    cfg.validate()?;
    let mut p = ParamSet::zeros(cfg);
    let (n, k, e) = (cfg.channels, cfg.filters, cfg.lstm_units);
    p.conv.weight = glorot(k, n, n, k, rng);
    for layer in p.lstm.iter_mut() {
        let input = layer.input();
        layer.w_ih = glorot(4 * e, input, input, 4 * e, rng);
        for gate in 0..4 {
            let block = orthogonal(e, rng);
            for i in 0..e {
                layer.w_hh.row_mut(gate * e + i).copy_from_slice(block.row(i));
            }
        }
        for j in e..2 * e {
            layer.bias.as_mut_slice()[j] = 1.0;
        }
    }
    if let Some(a) = p.attention.as_mut() {
        let (d, f) = (cfg.attention_len, cfg.attention_out);
        a.u = glorot(d, e, e, d, rng);
        a.v = glorot(f, d, d, f, rng);
    }
    let m = cfg.feature_len();
    p.output.weight = glorot(cfg.classes, m, m, cfg.classes, rng);
    Ok(p)
}

const MAGIC: &[u8; 8] = b"CVATPAR\0";
const VERSION: u32 = 1;

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r).map_err(|e| Error::Format(e.to_string()))? as usize;
    if len > 1 << 20 {
        return Err(Error::Format(format!("string length {len} too large")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Binary layout, all integers little-endian:
///
/// ```text
/// magic "CVATPAR\0" | version u32
/// header: count u32, then (key, value) string pairs
/// tensors: count u32, then name string, rows u64, cols u64, rows*cols f64
/// ```
/// Strings are a `u32` byte length followed by UTF-8 bytes.
pub fn encode_params(cfg: &ModelConfig, params: &ParamSet) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let header = cfg.to_pairs();
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    for (k, v) in &header {
        write_str(&mut buf, k).expect("vec write");
        write_str(&mut buf, v).expect("vec write");
    }
    let tensors = params.tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, m) in tensors {
        write_str(&mut buf, &name).expect("vec write");
        buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for v in m.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn decode_params(mut bytes: &[u8]) -> Result<(ModelConfig, ParamSet)> {
    let r = &mut bytes;
    let fmt = |e: std::io::Error| Error::Format(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(fmt)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(r).map_err(fmt)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_header = read_u32(r).map_err(fmt)?;
    let mut pairs = Vec::new();
    for _ in 0..n_header {
        pairs.push((read_str(r)?, read_str(r)?));
    }
    let cfg = ModelConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    let mut params = ParamSet::zeros(&cfg);
    let n_tensors = read_u32(r).map_err(fmt)? as usize;
    let mut slots = params.tensors_mut();
    if n_tensors != slots.len() {
        return Err(Error::Format(format!(
            "expected {} tensors, found {n_tensors}",
            slots.len()
        )));
    }
    for (expected, slot) in slots.iter_mut() {
        let name = read_str(r)?;
        if &name != expected {
            return Err(Error::Format(format!("expected tensor `{expected}`, found `{name}`")));
        }
        let rows = read_u64(r).map_err(fmt)? as usize;
        let cols = read_u64(r).map_err(fmt)? as usize;
        if (rows, cols) != slot.shape() {
            return Err(Error::Format(format!(
                "tensor `{name}` has shape {:?}, config implies {:?}",
                (rows, cols),
                slot.shape()
            )));
        }
        for v in slot.as_mut_slice() {
            *v = f64::from_le_bytes(read_u64(r).map_err(fmt)?.to_le_bytes());
        }
    }
    if !r.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", r.len())));
    }
    Ok((cfg, params))
}

pub fn save_params(path: &Path, cfg: &ModelConfig, params: &ParamSet) -> Result<()> {
    std::fs::write(path, encode_params(cfg, params)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: &Path) -> Result<(ModelConfig, ParamSet)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_params(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rng;
    use proptest::prelude::*;

    fn small(arch: Arch) -> ModelConfig {
        let mut c = ModelConfig::for_arch(arch, 3, 8, 3);
        c.filters = 3;
        c.lstm_units = 4;
        c.attention_len = 4;
        c.attention_out = 2;
        c
    }

    #[test]
    fn deterministic_init() {
        let cfg = small(Arch::Proposed);
        let a = init_params(&cfg, &mut Rng::new(5)).unwrap();
        let b = init_params(&cfg, &mut Rng::new(5)).unwrap();
        assert_eq!(a.flatten(), b.flatten());
        let c = init_params(&cfg, &mut Rng::new(6)).unwrap();
        assert_ne!(a.flatten(), c.flatten());
    }

    #[test]
    fn glorot_bound_for_three_by_three() {
        let cfg = small(Arch::Proposed);
        let p = init_params(&cfg, &mut Rng::new(1)).unwrap();
        assert!(p.conv.weight.as_slice().iter().all(|v| v.abs() <= 1.0));
        assert!(p.conv.weight.max_abs() > 0.0);
    }

    #[test]
    fn recurrent_blocks_are_orthogonal() {
        let cfg = small(Arch::Baseline);
        let p = init_params(&cfg, &mut Rng::new(2)).unwrap();
        let e = 4;
        for gate in 0..4 {
            let q = p.lstm[0].w_hh.slice_rows(gate * e, e).unwrap();
            let qtq = q.transposed_matmul(&q).unwrap();
            let eye = Matrix::identity(e);
            for (a, b) in qtq.as_slice().iter().zip(eye.as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn biases_zero_except_forget_gate() {
        let cfg = small(Arch::Proposed);
        let p = init_params(&cfg, &mut Rng::new(3)).unwrap();
        let b = p.lstm[0].bias.as_slice();
        for (j, &v) in b.iter().enumerate() {
            assert_eq!(v, if (4..8).contains(&j) { 1.0 } else { 0.0 });
        }
        assert!(p.conv.bias.as_slice().iter().all(|&v| v == 0.0));
        assert!(p.output.bias.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stacked_layers_take_hidden_input() {
        let mut cfg = small(Arch::Proposed);
        cfg.lstm_layers = 3;
        let p = ParamSet::zeros(&cfg);
        assert_eq!(p.lstm[0].input(), 3);
        assert_eq!(p.lstm[1].input(), 4);
        assert_eq!(p.lstm[2].input(), 4);
    }

    #[test]
    fn baseline_shares_conv_and_lstm_shapes() {
        let prop = ParamSet::zeros(&small(Arch::Proposed));
        let base = ParamSet::zeros(&small(Arch::Baseline));
        assert_eq!(prop.conv.weight.shape(), base.conv.weight.shape());
        assert_eq!(prop.lstm[0].w_ih.shape(), base.lstm[0].w_ih.shape());
        assert_eq!(prop.lstm[0].w_hh.shape(), base.lstm[0].w_hh.shape());
        assert!(base.attention.is_none());
        assert!(base.num_params() <= prop.num_params() - prop.attention_params());
    }

    #[test]
    fn file_round_trip() {
        let cfg = small(Arch::Proposed);
        let p = init_params(&cfg, &mut Rng::new(9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_params(&path, &cfg, &p).unwrap();
        let (cfg2, p2) = load_params(&path).unwrap();
        assert_eq!(cfg2, cfg);
        assert_eq!(p2, p);
    }

    #[test]
    fn rejects_corrupt_files() {
        let cfg = small(Arch::Baseline);
        let p = init_params(&cfg, &mut Rng::new(9)).unwrap();
        let bytes = encode_params(&cfg, &p);
        assert!(decode_params(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_params(&bad), Err(Error::Format(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_params(&extra).is_err());
    }

    proptest! {
        #[test]
        fn flat_view_round_trips(seed in any::<u64>(), baseline in any::<bool>()) {
            let cfg = small(if baseline { Arch::Baseline } else { Arch::Proposed });
            let p = init_params(&cfg, &mut Rng::new(seed)).unwrap();
            let mut q = ParamSet::zeros(&cfg);
            q.unflatten(&p.flatten()).unwrap();
            prop_assert_eq!(
                q.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                p.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
