//! One-vs-rest linear SVMs on averaged embeddings, trained with the
//! Pegasos subgradient method on the L2-regularized hinge loss.

use serde::{Deserialize, Serialize};

use super::{sentence_average, ClassifierConfig, ModelKind, ModelMeta, TrainedModel};
use crate::corpus::{Corpus, Task};
use crate::embedding::EmbeddingTable;
use crate::error::Result;
use crate::evalharness::macro_f1;
use crate::nnkernel::{Params, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Fixed regularization constant; when absent `c_grid` is searched.
    pub c: Option<f64>,
    pub c_grid: Vec<f64>,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: None,
            c_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            epochs: 1000,
        }
    }
}

impl SvmConfig {
    pub(super) fn validate(&self, errs: &mut Vec<String>) {
        let positive = |c: &f64| *c > 0.0 && c.is_finite();
        if let Some(c) = self.c {
            if !positive(&c) {
                errs.push(format!("svm.c must be positive, got {c}"));
            }
        } else if self.c_grid.is_empty() || !self.c_grid.iter().all(positive) {
            errs.push("svm.c_grid must be a non-empty list of positive values".to_string());
        }
        if self.epochs == 0 {
            errs.push("svm.epochs must be positive".to_string());
        }
    }

    fn candidates(&self) -> Vec<f64> {
        match self.c {
            Some(c) => vec![c],
            None => {
                let mut g = self.c_grid.clone();
                g.sort_by(f64::total_cmp);
                g.dedup();
                g
            }
        }
    }
}

fn features(emb: &EmbeddingTable, c: &Corpus) -> Vec<Vec<f64>> {
    c.sentences
        .iter()
        .map(|s| {
            let mut x = sentence_average(emb, s);
            x.push(1.0);
            x
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major `[classes, dim + 1]` weights.
fn pegasos(xs: &[Vec<f64>], ys: &[usize], classes: usize, c: f64, epochs: usize) -> Vec<f64> {
    let n = xs.len();
    let d = xs[0].len();
    let lambda = 1.0 / (c * n as f64);
    let mut w = vec![0.0; classes * d];
    for k in 0..classes {
        let wk = &mut w[k * d..(k + 1) * d];
        let mut t = 0u64;
        for _ in 0..epochs {
            for (x, &y) in xs.iter().zip(ys) {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let sign = if y == k { 1.0 } else { -1.0 };
                let violated = sign * dot(wk, x) < 1.0;
                let shrink = 1.0 - eta * lambda;
                for (wi, xi) in wk.iter_mut().zip(x) {
                    *wi *= shrink;
                    if violated {
                        *wi += eta * sign * xi;
                    }
                }
            }
        }
    }
    w
}

fn predict_with(w: &[f64], x: &[f64], classes: usize) -> usize {
    let d = x.len();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for k in 0..classes {
        let s = dot(&w[k * d..(k + 1) * d], x);
        if s > best_score {
            best = k;
            best_score = s;
        }
    }
    best
}

pub(super) fn scores(params: &Params, avg: &[f64]) -> Vec<f64> {
    let w = params.get(crate::nnkernel::ParamId(0));
    let d = w.cols();
    debug_assert_eq!(d, avg.len() + 1);
    (0..w.rows())
        .map(|k| {
            let row = w.row(k);
            dot(&row[..d - 1], avg) + row[d - 1]
        })
        .collect()
}

pub(super) fn train(
    train: &Corpus,
    dev: &Corpus,
    emb: &EmbeddingTable,
    task: Task,
    cfg: &ClassifierConfig,
) -> Result<TrainedModel> {
    let classes = task.num_classes();
    let xs = features(emb, train);
    let ys: Vec<usize> = train.sentences.iter().map(|s| task.class_of(s.label)).collect();
    let select = if dev.is_empty() {
        log::warn!("empty dev set; selecting the SVM constant on the training data");
        train
    } else {
        dev
    };
    let dev_xs = features(emb, select);
    let dev_ys: Vec<usize> = select.sentences.iter().map(|s| task.class_of(s.label)).collect();

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut history = Vec::new();
    for c in cfg.svm.candidates() {
        let w = pegasos(&xs, &ys, classes, c, cfg.svm.epochs);
        let pred: Vec<usize> = dev_xs.iter().map(|x| predict_with(&w, x, classes)).collect();
        let f = macro_f1(&dev_ys, &pred, classes)?;
        log::debug!("svm c={c}: dev macro-F1 {f:.4}");
        history.push(f);
        if best.as_ref().is_none_or(|(bf, _, _)| f > *bf) {
            best = Some((f, c, w));
        }
    }
    let (_, c, w) = best.expect("at least one candidate");
    let mut params = Params::new();
    params.add("svm.w", Tensor::from_vec(vec![classes, emb.dim() + 1], w));
    Ok(TrainedModel {
        meta: ModelMeta {
            kind: ModelKind::Svm,
            task,
            dim: emb.dim(),
            seed: 0,
            config: cfg.clone(),
            selected_epoch: 0,
            dev_history: history,
            svm_c: Some(c),
        },
        params,
    })
}
