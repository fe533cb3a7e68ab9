//! Bidirectional LSTM classifier: the final hidden states of a forward and
//! a backward LSTM are concatenated, passed through dropout and a softmax
//! output layer.

use serde::{Deserialize, Serialize};

use super::neural::Network;
use crate::corpus::Sentence;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nnkernel::{glorot, Graph, ParamId, Params, Tensor, Var};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilstmConfig {
    /// Hidden size of each direction.
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for BilstmConfig {
    fn default() -> Self {
        BilstmConfig {
            hidden: 100,
            dropout: 0.3,
        }
    }
}

impl BilstmConfig {
    pub(super) fn validate(&self, errs: &mut Vec<String>) {
        if self.hidden == 0 {
            errs.push("bilstm.hidden must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            errs.push(format!("bilstm.dropout must lie in [0, 1), got {}", self.dropout));
        }
    }
}

/// Input, recurrent and bias parameters of one direction. Gates are laid
/// out as `[input, forget, cell, output]` blocks of `hidden` columns.
#[derive(Clone, Copy, Debug)]
struct Direction {
    wx: ParamId,
    wh: ParamId,
    b: ParamId,
}

#[derive(Clone, Debug)]
pub(super) struct Bilstm {
    cfg: BilstmConfig,
    fwd: Direction,
    bwd: Direction,
    out: (ParamId, ParamId),
}

fn lookup(params: &Params, name: &str) -> Result<ParamId> {
    params
        .id(name)
        .ok_or_else(|| Error::Data(format!("model file lacks parameter '{name}'")))
}

impl Bilstm {
    pub(super) fn init(cfg: &BilstmConfig, dim: usize, classes: usize, rng: &mut Rng) -> Params {
        let h = cfg.hidden;
        let mut p = Params::new();
        for dir in ["fwd", "bwd"] {
            p.add(format!("{dir}.wx"), glorot(rng, vec![dim, 4 * h], dim, 4 * h));
            p.add(format!("{dir}.wh"), glorot(rng, vec![h, 4 * h], h, 4 * h));
            let mut b = vec![0.0; 4 * h];
            b[h..2 * h].fill(1.0);
            p.add(format!("{dir}.b"), Tensor::from_vec(vec![1, 4 * h], b));
        }
        p.add("out.w", glorot(rng, vec![2 * h, classes], 2 * h, classes));
        p.add("out.b", Tensor::zeros(vec![1, classes]));
        p
    }

    pub(super) fn bind(params: &Params, cfg: &BilstmConfig) -> Result<Self> {
        let dir = |d: &str| -> Result<Direction> {
            Ok(Direction {
                wx: lookup(params, &format!("{d}.wx"))?,
                wh: lookup(params, &format!("{d}.wh"))?,
                b: lookup(params, &format!("{d}.b"))?,
            })
        };
        Ok(Bilstm {
            cfg: cfg.clone(),
            fwd: dir("fwd")?,
            bwd: dir("bwd")?,
            out: (lookup(params, "out.w")?, lookup(params, "out.b")?),
        })
    }

    /// Runs one direction over `x` and returns the last hidden state.
    fn run(&self, g: &mut Graph, params: &Params, x: Var, dir: Direction, reverse: bool) -> Result<Var> {
        let h = self.cfg.hidden;
        let n = g.value(x).rows();
        let (wx, wh, b) = (g.param(params, dir.wx), g.param(params, dir.wh), g.param(params, dir.b));
        let xp = g.matmul(x, wx)?;
        let xp = g.add_bias(xp, b)?;
        let mut state: Option<(Var, Var)> = None;
        for step in 0..n {
            let t = if reverse { n - 1 - step } else { step };
            let mut gates = g.row(xp, t)?;
            if let Some((hp, _)) = state {
                let rec = g.matmul(hp, wh)?;
                gates = g.add(gates, rec)?;
            }
            let i = g.slice_cols(gates, 0, h)?;
            let i = g.sigmoid(i);
            let f = g.slice_cols(gates, h, h)?;
            let f = g.sigmoid(f);
            let c_new = g.slice_cols(gates, 2 * h, h)?;
            let c_new = g.tanh(c_new);
            let o = g.slice_cols(gates, 3 * h, h)?;
            let o = g.sigmoid(o);
            let mut c = g.mul(i, c_new)?;
            if let Some((_, cp)) = state {
                let kept = g.mul(f, cp)?;
                c = g.add(c, kept)?;
            }
            let tc = g.tanh(c);
            let hn = g.mul(o, tc)?;
            state = Some((hn, c));
        }
        Ok(state.expect("non-empty sentence").0)
    }
}

impl Network for Bilstm {
    fn input(&self, emb: &EmbeddingTable, s: &Sentence) -> Tensor {
        emb.sentence_matrix(s)
    }

    fn logits(&self, g: &mut Graph, params: &Params, x: &Tensor, rng: Option<&mut Rng>) -> Result<Var> {
        if x.rows() == 0 {
            return Err(Error::shape("bilstm", "empty input sequence"));
        }
        let x = g.input(x.clone());
        let hf = self.run(g, params, x, self.fwd, false)?;
        let hb = self.run(g, params, x, self.bwd, true)?;
        let h = g.concat_cols(&[hf, hb])?;
        let h = g.dropout(h, self.cfg.dropout, rng);
        let (ow, ob) = (g.param(params, self.out.0), g.param(params, self.out.1));
        let z = g.matmul(h, ow)?;
        g.add_bias(z, ob)
    }
}
