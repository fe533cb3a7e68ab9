//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use wordorder::corpus::{Corpus, Label4, Sentence, Token, Upos};
use wordorder::models::{loss_and_grads, ClassifierConfig, ModelKind};
use wordorder::nnkernel::{Graph, Params, Tensor, Var};
use wordorder::rng::{self, Rng};

pub const H: f64 = 1e-5;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn random_tensor(rng: &mut Rng, shape: Vec<usize>) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng::normal(rng)).collect())
}

/// Distinct values at least 0.1 apart, so max and relu have no kinks within
/// a finite-difference step.
pub fn spaced_tensor(rng: &mut Rng, shape: Vec<usize>) -> Tensor {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 - n as f64 * 0.05 + 0.013).collect();
    rng::shuffle(rng, &mut vals);
    Tensor::from_vec(shape, vals)
}

/// Worst relative error between backprop and central differences over every
/// input element of `f`, which must build a scalar.
pub fn fd_inputs(inputs: &[Tensor], f: &dyn Fn(&mut Graph, &[Var]) -> Var) -> f64 {
    let eval = |xs: &[Tensor]| {
        let mut g = Graph::new();
        let vars: Vec<Var> = xs.iter().map(|t| g.input(t.clone())).collect();
        let l = f(&mut g, &vars);
        g.value(l).item()
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
    let loss = f(&mut g, &vars);
    let grads = g.gradients(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (k, v) in vars.iter().enumerate() {
        let analytic = Graph::grad_of(&grads, &g, *v);
        for i in 0..inputs[k].len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[i] += H;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[i] -= H;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * H);
            worst = worst.max(rel_err(analytic.data()[i], numeric));
        }
    }
    worst
}

/// Reduces any tensor to a scalar with distinct per-element weights.
pub fn weighted_sum(g: &mut Graph, x: Var, seed: u64) -> Var {
    let mut rng = rng::stream(seed, "weights");
    let shape = g.value(x).shape().to_vec();
    let w = g.input(random_tensor(&mut rng, shape));
    let p = g.mul(x, w).unwrap();
    g.sum(p)
}

/// Worst relative error of a model's parameter gradients against central
/// differences of its loss, over every parameter value.
pub fn fd_model(kind: ModelKind, cfg: &ClassifierConfig, params: &Params, x: &Tensor, target: usize) -> f64 {
    let (_, grads) = loss_and_grads(kind, cfg, params, x, target).unwrap();
    let loss = |p: &Params| loss_and_grads(kind, cfg, p, x, target).unwrap().0;
    let mut worst: f64 = 0.0;
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        for i in 0..params.get(id).len() {
            let mut plus = params.clone();
            plus.get_mut(id).data_mut()[i] += H;
            let mut minus = params.clone();
            minus.get_mut(id).data_mut()[i] -= H;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * H);
            worst = worst.max(rel_err(grads.get(id).data()[i], numeric));
        }
    }
    worst
}

/// Macro-F1 by direct counting over the prediction pairs, one class at a
/// time, with no confusion matrix.
pub fn brute_force_macro_f1(gold: &[usize], pred: &[usize], n: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..n {
        let mut tp = 0usize;
        let mut predicted = 0usize;
        let mut actual = 0usize;
        for (g, p) in gold.iter().zip(pred) {
            if *p == c {
                predicted += 1;
            }
            if *g == c {
                actual += 1;
            }
            if *g == c && *p == c {
                tp += 1;
            }
        }
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if actual == 0 { 0.0 } else { tp as f64 / actual as f64 };
        total += if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
    }
    total / n as f64
}

pub fn sentence(id: &str, label: Label4, words: &[(&str, Upos)]) -> Sentence {
    Sentence {
        id: id.into(),
        label,
        tokens: words.iter().map(|(w, p)| Token::new(*w, *p)).collect(),
    }
}

pub fn corpus(name: &str, sentences: Vec<Sentence>) -> Corpus {
    Corpus::new(name, "xx", sentences).unwrap()
}

/// Rows of a two-column `key<TAB>tokens` fixture.
pub fn tsv_rows(text: &str) -> Vec<(String, Vec<String>)> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('\t').expect("two columns");
            (k.to_string(), v.split_whitespace().map(String::from).collect())
        })
        .collect()
}
