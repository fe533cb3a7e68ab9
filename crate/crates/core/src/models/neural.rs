//! Shared training loop for the neural classifiers: minibatch Adam on the
//! cross-entropy loss with frozen embeddings, keeping the parameters of the
//! epoch with the best dev macro-F1.

use serde::{Deserialize, Serialize};

use super::bilstm::Bilstm;
use super::cnn::Cnn;
use super::{ClassifierConfig, ModelKind, ModelMeta, TrainedModel};
use crate::corpus::{Corpus, Sentence, Task};
use crate::embedding::EmbeddingTable;
use crate::error::Result;
use crate::evalharness::macro_f1;
use crate::nnkernel::{softmax_row, AdamConfig, AdamState, Grads, Graph, Params, Tensor, Var};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch: 32,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub(super) fn validate(&self, errs: &mut Vec<String>) {
        if self.epochs == 0 {
            errs.push("train.epochs must be positive".to_string());
        }
        if self.batch == 0 {
            errs.push("train.batch must be positive".to_string());
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            errs.push("train.adam needs lr > 0, betas in [0, 1) and eps > 0".to_string());
        }
    }
}

pub(super) trait Network {
    fn input(&self, emb: &EmbeddingTable, s: &Sentence) -> Tensor;

    /// Unnormalized class scores, `[1, classes]`. Dropout is active only
    /// when `rng` is given.
    fn logits(&self, g: &mut Graph, params: &Params, x: &Tensor, rng: Option<&mut Rng>) -> Result<Var>;
}

pub(super) fn probs<N: Network>(net: &N, params: &Params, emb: &EmbeddingTable, s: &Sentence) -> Result<Vec<f64>> {
    probs_of_input(net, params, &net.input(emb, s))
}

fn probs_of_input<N: Network>(net: &N, params: &Params, x: &Tensor) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let z = net.logits(&mut g, params, x, None)?;
    Ok(softmax_row(g.value(z).row(0)))
}

fn argmax(p: &[f64]) -> usize {
    super::Prediction::from_scores(p.to_vec()).label
}

/// Loss of one example and its parameter gradients, dropout disabled.
pub(super) fn loss_and_grads<N: Network>(net: &N, params: &Params, x: &Tensor, target: usize) -> Result<(f64, Grads)> {
    let mut g = Graph::new();
    let z = net.logits(&mut g, params, x, None)?;
    let loss = g.cross_entropy(z, target)?;
    let mut grads = Grads::zeros_like(params);
    g.backward(loss, &mut grads)?;
    Ok((g.value(loss).item(), grads))
}

pub(super) fn init(kind: ModelKind, cfg: &ClassifierConfig, dim: usize, classes: usize, seed: u64) -> Params {
    let mut r = rng::stream(seed, &format!("{kind}-init"));
    match kind {
        ModelKind::Cnn => Cnn::init(&cfg.cnn, dim, classes, &mut r),
        ModelKind::Bilstm => Bilstm::init(&cfg.bilstm, dim, classes, &mut r),
        ModelKind::Svm => unreachable!("the SVM is not a neural model"),
    }
}

pub(super) fn train(
    kind: ModelKind,
    train: &Corpus,
    dev: &Corpus,
    emb: &EmbeddingTable,
    task: Task,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    let params = init(kind, cfg, emb.dim(), task.num_classes(), seed);
    match kind {
        ModelKind::Cnn => {
            let net = Cnn::bind(&params, &cfg.cnn)?;
            run(&net, params, kind, train, dev, emb, task, cfg, seed)
        }
        ModelKind::Bilstm => {
            let net = Bilstm::bind(&params, &cfg.bilstm)?;
            run(&net, params, kind, train, dev, emb, task, cfg, seed)
        }
        ModelKind::Svm => unreachable!("the SVM is not a neural model"),
    }
}

#[allow(clippy::too_many_arguments)]
fn run<N: Network>(
    net: &N,
    mut params: Params,
    kind: ModelKind,
    train: &Corpus,
    dev: &Corpus,
    emb: &EmbeddingTable,
    task: Task,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    let classes = task.num_classes();
    let encode = |c: &Corpus| -> (Vec<Tensor>, Vec<usize>) {
        c.sentences
            .iter()
            .map(|s| (net.input(emb, s), task.class_of(s.label)))
            .unzip()
    };
    let (xs, ys) = encode(train);
    let select = if dev.is_empty() {
        log::warn!("empty dev set; selecting the epoch on the training data");
        train
    } else {
        dev
    };
    let (dev_xs, dev_ys) = encode(select);

    let mut adam = AdamState::new(cfg.train.adam, &params);
    let mut order_rng = rng::stream(seed, &format!("{kind}-order"));
    let mut drop_rng = rng::stream(seed, &format!("{kind}-dropout"));
    let mut grads = Grads::zeros_like(&params);
    let mut order: Vec<usize> = (0..xs.len()).collect();

    let mut best: Option<(f64, usize, Params)> = None;
    let mut history = Vec::with_capacity(cfg.train.epochs);
    for epoch in 1..=cfg.train.epochs {
        rng::shuffle(&mut order_rng, &mut order);
        let mut total = 0.0;
        for batch in order.chunks(cfg.train.batch) {
            grads.zero();
            for &i in batch {
                let mut g = Graph::new();
                let z = net.logits(&mut g, &params, &xs[i], Some(&mut drop_rng))?;
                let loss = g.cross_entropy(z, ys[i])?;
                total += g.value(loss).item();
                g.backward(loss, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut params, &grads)?;
        }
        let pred = dev_xs
            .iter()
            .map(|x| probs_of_input(net, &params, x).map(|p| argmax(&p)))
            .collect::<Result<Vec<_>>>()?;
        let f = macro_f1(&dev_ys, &pred, classes)?;
        log::debug!(
            "{kind} seed {seed} epoch {epoch}: train loss {:.4}, dev macro-F1 {f:.4}",
            total / xs.len() as f64
        );
        history.push(f);
        if best.as_ref().is_none_or(|(bf, _, _)| f > *bf) {
            best = Some((f, epoch, params.clone()));
        }
    }
    let (_, epoch, params) = best.expect("at least one epoch");
    Ok(TrainedModel {
        meta: ModelMeta {
            kind,
            task,
            dim: emb.dim(),
            seed,
            config: cfg.clone(),
            selected_epoch: epoch,
            dev_history: history,
            svm_c: None,
        },
        params,
    })
}
