//! Convolutional sentence classifier: parallel convolutions of several
//! widths, each followed by window max-pooling and max-over-time, then
//! dropout on the pooled features, a ReLU feed-forward layer and a softmax
//! output.

use serde::{Deserialize, Serialize};

use super::neural::Network;
use crate::corpus::Sentence;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nnkernel::{glorot, Graph, ParamId, Params, Tensor, Var};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    pub widths: Vec<usize>,
    pub filters: usize,
    pub pool: usize,
    /// Inputs are zero-padded or truncated to this many tokens.
    pub max_len: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            widths: vec![3, 4, 5],
            filters: 100,
            pool: 2,
            max_len: 64,
            hidden: 128,
            dropout: 0.3,
        }
    }
}

impl CnnConfig {
    pub(super) fn validate(&self, errs: &mut Vec<String>) {
        if self.widths.is_empty() || self.widths.contains(&0) {
            errs.push("cnn.widths must be a non-empty list of positive widths".to_string());
        }
        if self.widths.iter().any(|&w| w > self.max_len) {
            errs.push(format!("cnn.max_len {} is below a filter width", self.max_len));
        }
        for (name, v) in [("filters", self.filters), ("pool", self.pool), ("hidden", self.hidden)] {
            if v == 0 {
                errs.push(format!("cnn.{name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            errs.push(format!("cnn.dropout must lie in [0, 1), got {}", self.dropout));
        }
    }
}

#[derive(Clone, Debug)]
pub(super) struct Cnn {
    cfg: CnnConfig,
    conv: Vec<(ParamId, ParamId)>,
    ff: (ParamId, ParamId),
    out: (ParamId, ParamId),
}

fn lookup(params: &Params, name: &str) -> Result<ParamId> {
    params
        .id(name)
        .ok_or_else(|| Error::Data(format!("model file lacks parameter '{name}'")))
}

impl Cnn {
    pub(super) fn init(cfg: &CnnConfig, dim: usize, classes: usize, rng: &mut Rng) -> Params {
        let mut p = Params::new();
        let f = cfg.filters;
        for &w in &cfg.widths {
            p.add(format!("conv{w}.w"), glorot(rng, vec![f, w * dim], w * dim, f));
            p.add(format!("conv{w}.b"), Tensor::zeros(vec![1, f]));
        }
        let pooled = f * cfg.widths.len();
        p.add("ff.w", glorot(rng, vec![pooled, cfg.hidden], pooled, cfg.hidden));
        p.add("ff.b", Tensor::zeros(vec![1, cfg.hidden]));
        p.add("out.w", glorot(rng, vec![cfg.hidden, classes], cfg.hidden, classes));
        p.add("out.b", Tensor::zeros(vec![1, classes]));
        p
    }

    pub(super) fn bind(params: &Params, cfg: &CnnConfig) -> Result<Self> {
        let conv = cfg
            .widths
            .iter()
            .map(|w| Ok((lookup(params, &format!("conv{w}.w"))?, lookup(params, &format!("conv{w}.b"))?)))
            .collect::<Result<_>>()?;
        Ok(Cnn {
            cfg: cfg.clone(),
            conv,
            ff: (lookup(params, "ff.w")?, lookup(params, "ff.b")?),
            out: (lookup(params, "out.w")?, lookup(params, "out.b")?),
        })
    }

}

impl Cnn {
    /// Zero-pads or truncates an `[n, d]` matrix to `max_len` rows.
    pub(super) fn pad(&self, x: &Tensor) -> Tensor {
        let d = x.cols();
        let l = self.cfg.max_len;
        let mut data = vec![0.0; l * d];
        let keep = x.rows().min(l) * d;
        data[..keep].copy_from_slice(&x.data()[..keep]);
        Tensor::from_vec(vec![l, d], data)
    }
}

impl Network for Cnn {
    fn input(&self, emb: &EmbeddingTable, s: &Sentence) -> Tensor {
        let d = emb.dim();
        let l = self.cfg.max_len;
        let mut data = vec![0.0; l * d];
        for (row, t) in data.chunks_exact_mut(d).zip(&s.tokens) {
            row.copy_from_slice(emb.lookup(&t.surface));
        }
        Tensor::from_vec(vec![l, d], data)
    }

    fn logits(&self, g: &mut Graph, params: &Params, x: &Tensor, rng: Option<&mut Rng>) -> Result<Var> {
        let x = g.input(x.clone());
        let mut pooled = Vec::with_capacity(self.conv.len());
        for (&width, &(w, b)) in self.cfg.widths.iter().zip(&self.conv) {
            let (w, b) = (g.param(params, w), g.param(params, b));
            let c = g.conv1d(x, w, b, width)?;
            let c = g.relu(c);
            let c = g.maxpool1d(c, self.cfg.pool)?;
            pooled.push(g.max_over_time(c));
        }
        let h = g.concat_cols(&pooled)?;
        let h = g.dropout(h, self.cfg.dropout, rng);
        let (fw, fb) = (g.param(params, self.ff.0), g.param(params, self.ff.1));
        let h = g.matmul(h, fw)?;
        let h = g.add_bias(h, fb)?;
        let h = g.relu(h);
        let (ow, ob) = (g.param(params, self.out.0), g.param(params, self.out.1));
        let z = g.matmul(h, ow)?;
        g.add_bias(z, ob)
    }
}
