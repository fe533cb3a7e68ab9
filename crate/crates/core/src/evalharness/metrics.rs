use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gold-by-predicted counts over class indices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            n: num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_predictions(gold: &[usize], pred: &[usize], num_classes: usize) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::Data(format!(
                "{} gold labels but {} predictions",
                gold.len(),
                pred.len()
            )));
        }
        let mut m = ConfusionMatrix::new(num_classes);
        for (&g, &p) in gold.iter().zip(pred) {
            if g >= num_classes || p >= num_classes {
                return Err(Error::Data(format!("class index out of range for {num_classes} classes")));
            }
            m.counts[g * num_classes + p] += 1;
        }
        Ok(m)
    }

    pub fn num_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, gold: usize, pred: usize) -> usize {
        self.counts[gold * self.n + pred]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn precision(&self, c: usize) -> f64 {
        let predicted: usize = (0..self.n).map(|g| self.get(g, c)).sum();
        Self::ratio(self.get(c, c), predicted)
    }

    pub fn recall(&self, c: usize) -> f64 {
        let gold: usize = (0..self.n).map(|p| self.get(c, p)).sum();
        Self::ratio(self.get(c, c), gold)
    }

    pub fn f1(&self, c: usize) -> f64 {
        let (p, r) = (self.precision(c), self.recall(c));
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Unweighted mean of per-class F1 over every class, present in the gold
    /// labels or not.
    pub fn macro_f1(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (0..self.n).map(|c| self.f1(c)).sum::<f64>() / self.n as f64
    }
}

pub fn macro_f1(gold: &[usize], pred: &[usize], num_classes: usize) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Data("macro-F1 of an empty label sequence".into()));
    }
    Ok(ConfusionMatrix::from_predictions(gold, pred, num_classes)?.macro_f1())
}

/// Mean and population standard deviation.
pub fn aggregate_seeds(results: &[f64]) -> Result<(f64, f64)> {
    if results.is_empty() {
        return Err(Error::Data("no per-seed results to aggregate".into()));
    }
    let mut sorted = results.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}
