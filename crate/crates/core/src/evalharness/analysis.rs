//! Corpus statistics and the sentence-length breakdown.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::metrics::macro_f1;
use crate::corpus::{Corpus, Upos};
use crate::error::{Error, Result};
use crate::transform::SentimentLexicon;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosPairStats {
    /// Adjacent `NOUN ADJ` occurrences.
    pub noun_adj: usize,
    /// Occurrences whose surfaces also appear adjacently in `adj noun` order.
    pub also_adj_noun: usize,
    pub percent: f64,
}

pub fn pos_pair_stats(c: &Corpus) -> PosPairStats {
    let mut bigrams: HashSet<(&str, &str)> = HashSet::new();
    let mut noun_adj = Vec::new();
    for s in &c.sentences {
        for w in s.tokens.windows(2) {
            bigrams.insert((w[0].surface.as_str(), w[1].surface.as_str()));
            if w[0].pos == Upos::Noun && w[1].pos == Upos::Adj {
                noun_adj.push((w[0].surface.as_str(), w[1].surface.as_str()));
            }
        }
    }
    let also = noun_adj.iter().filter(|(n, a)| bigrams.contains(&(*a, *n))).count();
    let percent = if noun_adj.is_empty() {
        0.0
    } else {
        100.0 * also as f64 / noun_adj.len() as f64
    };
    PosPairStats {
        noun_adj: noun_adj.len(),
        also_adj_noun: also,
        percent,
    }
}

/// Share of sentences without a single lexicon token, i.e. sentences the
/// keep-only filter turns entirely into `UNK`.
pub fn lexicon_coverage(c: &Corpus, lex: &SentimentLexicon) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let none = c
        .sentences
        .iter()
        .filter(|s| s.surfaces().all(|w| !lex.contains(w)))
        .count();
    none as f64 / c.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LengthBucket {
    #[serde(rename = "<8")]
    Short,
    #[serde(rename = "8-10")]
    Medium,
    #[serde(rename = ">10")]
    Long,
}

impl LengthBucket {
    pub const ALL: [LengthBucket; 3] = [LengthBucket::Short, LengthBucket::Medium, LengthBucket::Long];

    pub fn of(len: usize) -> Self {
        match len {
            0..=7 => LengthBucket::Short,
            8..=10 => LengthBucket::Medium,
            _ => LengthBucket::Long,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LengthBucket::Short => "<8",
            LengthBucket::Medium => "8-10",
            LengthBucket::Long => ">10",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketResult {
    pub bucket: LengthBucket,
    pub sentences: usize,
    pub original: f64,
    pub reordered: f64,
    /// `reordered - original`.
    pub delta: f64,
}

/// Macro-F1 of two prediction sets over the same sentences, per length
/// bucket. Buckets without sentences are left out.
pub fn length_bucket_analysis(
    lengths: &[usize],
    gold: &[usize],
    original: &[usize],
    reordered: &[usize],
    num_classes: usize,
) -> Result<Vec<BucketResult>> {
    let n = lengths.len();
    if gold.len() != n || original.len() != n || reordered.len() != n {
        return Err(Error::Data("length analysis inputs differ in size".into()));
    }
    let mut out = Vec::new();
    for bucket in LengthBucket::ALL {
        let idx: Vec<usize> = (0..n).filter(|&i| LengthBucket::of(lengths[i]) == bucket).collect();
        if idx.is_empty() {
            continue;
        }
        let pick = |v: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let g = pick(gold);
        let o = macro_f1(&g, &pick(original), num_classes)?;
        let r = macro_f1(&g, &pick(reordered), num_classes)?;
        out.push(BucketResult {
            bucket,
            sentences: idx.len(),
            original: o,
            reordered: r,
            delta: r - o,
        });
    }
    Ok(out)
}
