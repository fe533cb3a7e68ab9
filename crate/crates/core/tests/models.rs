mod common;

use common::*;
use wordorder::corpus::{generate_order_task, Corpus, OrderTaskConfig, Task};
use wordorder::embedding::EmbeddingTable;
use wordorder::evalharness::macro_f1;
use wordorder::models::{init_params, train_model, ClassifierConfig, ModelKind, TrainedModel};
use wordorder::rng;

fn small_config() -> ClassifierConfig {
    let mut cfg = ClassifierConfig::default();
    cfg.cnn.widths = vec![2, 3];
    cfg.cnn.filters = 8;
    cfg.cnn.max_len = 12;
    cfg.cnn.hidden = 8;
    cfg.bilstm.hidden = 8;
    cfg.train.epochs = 12;
    cfg
}

struct OrderData {
    train: Corpus,
    dev: Corpus,
    emb: EmbeddingTable,
}

fn order_data(seed: u64) -> OrderData {
    let (c, emb) = generate_order_task(&OrderTaskConfig {
        seed,
        ..OrderTaskConfig::default()
    })
    .unwrap();
    let (a, b) = c.sentences.split_at(480);
    OrderData {
        train: corpus("train", a.to_vec()),
        dev: corpus("dev", b.to_vec()),
        emb,
    }
}

fn dev_f1(m: &TrainedModel, d: &OrderData) -> f64 {
    let gold: Vec<usize> = d.dev.sentences.iter().map(|s| Task::Binary.class_of(s.label)).collect();
    let pred: Vec<usize> = m.predict_all(&d.emb, &d.dev).unwrap().iter().map(|p| p.label).collect();
    macro_f1(&gold, &pred, 2).unwrap()
}

fn train(kind: ModelKind, d: &OrderData, seed: u64) -> TrainedModel {
    train_model(kind, &d.train, &d.dev, &d.emb, Task::Binary, &small_config(), seed).unwrap()
}

#[test]
fn sequence_models_learn_order_the_svm_cannot() {
    let d = order_data(1);
    let svm = dev_f1(&train(ModelKind::Svm, &d, 1), &d);
    for kind in [ModelKind::Cnn, ModelKind::Bilstm] {
        let f = dev_f1(&train(kind, &d, 1), &d);
        assert!(f > svm + 0.10, "{}: {f:.3} vs SVM {svm:.3}", kind.display_name());
    }
}

#[test]
fn reversal_changes_sequence_model_predictions() {
    let d = order_data(2);
    for kind in [ModelKind::Cnn, ModelKind::Bilstm] {
        let m = train(kind, &d, 3);
        let mut changed = 0;
        for s in d.dev.sentences.iter().take(100) {
            let mut r = s.clone();
            r.tokens.reverse();
            if m.predict(&d.emb, s).unwrap().label != m.predict(&d.emb, &r).unwrap().label {
                changed += 1;
            }
        }
        assert!(changed >= 50, "{}: only {changed}/100 flipped", kind.display_name());
    }
}

#[test]
fn same_seed_same_model() {
    let d = order_data(3);
    for kind in ModelKind::ALL {
        let a = train(kind, &d, 7);
        let b = train(kind, &d, 7);
        assert_eq!(a.selected_epoch(), b.selected_epoch());
        assert_eq!(a.params, b.params, "{}", kind.display_name());
        assert_eq!(a.predict_all(&d.emb, &d.dev).unwrap(), b.predict_all(&d.emb, &d.dev).unwrap());
    }
}

#[test]
fn selected_epoch_has_best_dev_score() {
    let d = order_data(4);
    for kind in [ModelKind::Cnn, ModelKind::Bilstm] {
        let m = train(kind, &d, 2);
        let h = &m.meta.dev_history;
        assert_eq!(h.len(), small_config().train.epochs);
        let best = h[m.selected_epoch() - 1];
        assert!(h.iter().all(|&x| x <= best));
        assert_eq!(h.iter().position(|&x| x == best).unwrap() + 1, m.selected_epoch(), "earliest best wins");
        assert!((dev_f1(&m, &d) - best).abs() < 1e-12);
    }
}

#[test]
fn neural_outputs_are_distributions() {
    let d = order_data(5);
    for kind in [ModelKind::Cnn, ModelKind::Bilstm] {
        let m = train(kind, &d, 1);
        for p in m.predict_all(&d.emb, &d.dev).unwrap() {
            assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.scores.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}

#[test]
fn saved_models_predict_identically() {
    let d = order_data(6);
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let m = train(kind, &d, 4);
        let path = dir.path().join(kind.as_str());
        m.save(&path).unwrap();
        let back = TrainedModel::load(&path).unwrap();
        assert_eq!(back.meta, m.meta);
        assert_eq!(back.predict_all(&d.emb, &d.dev).unwrap(), m.predict_all(&d.emb, &d.dev).unwrap());
    }
}

#[test]
fn bilstm_three_token_gradients() {
    let mut cfg = ClassifierConfig::default();
    cfg.bilstm.hidden = 4;
    let mut r = rng::stream(11, "bilstm-3");
    for seed in 0..5 {
        let params = init_params(ModelKind::Bilstm, &cfg, 3, Task::FourClass, seed).unwrap();
        let x = random_tensor(&mut r, vec![3, 3]);
        let e = fd_model(ModelKind::Bilstm, &cfg, &params, &x, seed as usize % 4);
        assert!(e <= 1e-4, "seed {seed}: {e:e}");
    }
}

#[test]
fn short_inputs_pad_for_the_cnn() {
    let cfg = small_config();
    let mut params = init_params(ModelKind::Cnn, &cfg, 4, Task::Binary, 1).unwrap();
    let mut r = rng::stream(12, "cnn-short");
    // Zero-initialised biases would put the padded windows on the relu kink.
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        for v in params.get_mut(id).data_mut() {
            *v += 0.3 * rng::normal(&mut r);
        }
    }
    let x = random_tensor(&mut r, vec![1, 4]);
    let e = fd_model(ModelKind::Cnn, &cfg, &params, &x, 1);
    assert!(e <= 1e-4, "{e:e}");
}
