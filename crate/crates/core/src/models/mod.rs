//! Sentence classifiers over frozen word embeddings: a bag-of-embeddings
//! linear SVM, a CNN and a BiLSTM, behind one trained-model type.

mod bilstm;
mod cnn;
mod neural;
mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Task};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nnkernel::{self, Grads, Params, Tensor};

pub use neural::TrainConfig;
pub use svm::SvmConfig;

pub use bilstm::BilstmConfig;
pub use cnn::CnnConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Cnn,
    Bilstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Svm, ModelKind::Cnn, ModelKind::Bilstm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Cnn => "cnn",
            ModelKind::Bilstm => "bilstm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Svm => "SVM",
            ModelKind::Cnn => "CNN",
            ModelKind::Bilstm => "BiLSTM",
        }
    }

    pub fn is_neural(self) -> bool {
        self != ModelKind::Svm
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown model '{s}' (expected svm, cnn or bilstm)")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub svm: SvmConfig,
    pub cnn: CnnConfig,
    pub bilstm: BilstmConfig,
    pub train: TrainConfig,
}

impl ClassifierConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        self.svm.validate(&mut errs);
        self.cnn.validate(&mut errs);
        self.bilstm.validate(&mut errs);
        self.train.validate(&mut errs);
        errs
    }
}

/// Class scores and the winning class index. Ties go to the lower index,
/// so labels in the order StrongPos, Pos, Neg, StrongNeg win in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub label: usize,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut label = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[label] {
                label = i;
            }
        }
        Prediction { scores, label }
    }

    pub fn label_name(&self, task: Task) -> &'static str {
        task.class_names()[self.label]
    }
}

/// Provenance of a trained model, stored in its file header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub kind: ModelKind,
    pub task: Task,
    pub dim: usize,
    pub seed: u64,
    pub config: ClassifierConfig,
    /// 1-based epoch whose parameters were kept (0 for the SVM).
    pub selected_epoch: usize,
    /// Dev macro-F1 after each epoch, or per grid value for the SVM.
    pub dev_history: Vec<f64>,
    /// Regularization constant picked on the dev set (SVM only).
    pub svm_c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub meta: ModelMeta,
    pub params: Params,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.meta.kind
    }

    pub fn task(&self) -> Task {
        self.meta.task
    }

    pub fn selected_epoch(&self) -> usize {
        self.meta.selected_epoch
    }

    /// The same parameter path serves source and mapped target sentences.
    pub fn predict(&self, emb: &EmbeddingTable, s: &Sentence) -> Result<Prediction> {
        if emb.dim() != self.meta.dim {
            return Err(Error::Dim {
                expected: self.meta.dim,
                got: emb.dim(),
            });
        }
        let scores = match self.meta.kind {
            ModelKind::Svm => svm::scores(&self.params, &sentence_average(emb, s)),
            ModelKind::Cnn => {
                let net = cnn::Cnn::bind(&self.params, &self.meta.config.cnn)?;
                neural::probs(&net, &self.params, emb, s)?
            }
            ModelKind::Bilstm => {
                let net = bilstm::Bilstm::bind(&self.params, &self.meta.config.bilstm)?;
                neural::probs(&net, &self.params, emb, s)?
            }
        };
        Ok(Prediction::from_scores(scores))
    }

    pub fn predict_all(&self, emb: &EmbeddingTable, c: &Corpus) -> Result<Vec<Prediction>> {
        c.sentences.iter().map(|s| self.predict(emb, s)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = serde_json::to_value(&self.meta).expect("model metadata serializes");
        nnkernel::save_params(path, &self.params, meta)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (params, meta) = nnkernel::load_params(path)?;
        let meta: ModelMeta = serde_json::from_value(meta)
            .map_err(|e| Error::parse(path.display().to_string(), 1, format!("bad model header: {e}")))?;
        Ok(TrainedModel { meta, params })
    }
}

/// Componentwise mean of the sentence's token vectors. Rows are summed in
/// sorted surface order, which makes the result bitwise independent of
/// token order.
pub fn sentence_average(emb: &EmbeddingTable, s: &Sentence) -> Vec<f64> {
    let mut surfaces: Vec<&str> = s.surfaces().collect();
    surfaces.sort_unstable();
    let mut acc = vec![0.0; emb.dim()];
    for w in &surfaces {
        for (a, x) in acc.iter_mut().zip(emb.lookup(w)) {
            *a += x;
        }
    }
    let n = surfaces.len().max(1) as f64;
    for a in &mut acc {
        *a /= n;
    }
    acc
}

fn check_training_data(train: &Corpus, task: Task) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Data("training corpus is empty".into()));
    }
    let first = task.class_of(train.sentences[0].label);
    if train.sentences.iter().all(|s| task.class_of(s.label) == first) {
        return Err(Error::Data(format!(
            "training corpus '{}' has a single class",
            train.name
        )));
    }
    Ok(())
}

pub fn train_svm(
    train: &Corpus,
    dev: &Corpus,
    emb: &EmbeddingTable,
    task: Task,
    cfg: &ClassifierConfig,
) -> Result<TrainedModel> {
    check_training_data(train, task)?;
    svm::train(train, dev, emb, task, cfg)
}

pub fn train_cnn(
    train: &Corpus,
    dev: &Corpus,
    emb: &EmbeddingTable,
    task: Task,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    check_training_data(train, task)?;
    neural::train(ModelKind::Cnn, train, dev, emb, task, cfg, seed)
}

pub fn train_bilstm(
    train: &Corpus,
    dev: &Corpus,
    emb: &EmbeddingTable,
    task: Task,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    check_training_data(train, task)?;
    neural::train(ModelKind::Bilstm, train, dev, emb, task, cfg, seed)
}

pub fn train_model(
    kind: ModelKind,
    train: &Corpus,
    dev: &Corpus,
    emb: &EmbeddingTable,
    task: Task,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    match kind {
        ModelKind::Svm => train_svm(train, dev, emb, task, cfg),
        ModelKind::Cnn => train_cnn(train, dev, emb, task, cfg, seed),
        ModelKind::Bilstm => train_bilstm(train, dev, emb, task, cfg, seed),
    }
}

/// Freshly initialised parameters of a neural model, as training starts.
pub fn init_params(kind: ModelKind, cfg: &ClassifierConfig, dim: usize, task: Task, seed: u64) -> Result<Params> {
    if !kind.is_neural() {
        return Err(Error::config("the SVM has no neural parameters"));
    }
    Ok(neural::init(kind, cfg, dim, task.num_classes(), seed))
}

/// Cross-entropy of one `[n, dim]` input and its parameter gradients, with
/// dropout off; the CNN pads or truncates `x` the way it does at training.
pub fn loss_and_grads(
    kind: ModelKind,
    cfg: &ClassifierConfig,
    params: &Params,
    x: &Tensor,
    target: usize,
) -> Result<(f64, Grads)> {
    match kind {
        ModelKind::Cnn => {
            let net = cnn::Cnn::bind(params, &cfg.cnn)?;
            neural::loss_and_grads(&net, params, &net.pad(x), target)
        }
        ModelKind::Bilstm => {
            let net = bilstm::Bilstm::bind(params, &cfg.bilstm)?;
            neural::loss_and_grads(&net, params, x, target)
        }
        ModelKind::Svm => Err(Error::config("the SVM has no differentiable loss here")),
    }
}
