//! Learning reordering rules from word-aligned parallel text.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Upos};
use crate::error::{Error, Result};

use super::rules::{ReorderRule, RuleSet};

/// One Pharaoh line: `(source index, target index)` links, 0-based.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment(pub Vec<(usize, usize)>);

impl Alignment {
    pub fn links(&self) -> &[(usize, usize)] {
        &self.0
    }

    /// Swaps the two sides.
    pub fn inverted(&self) -> Alignment {
        let mut links: Vec<_> = self.0.iter().map(|&(i, j)| (j, i)).collect();
        links.sort_unstable();
        Alignment(links)
    }

    pub fn to_line(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|(i, j)| format!("{i}-{j}")).collect();
        parts.join(" ")
    }
}

pub fn parse_alignment(line: &str) -> std::result::Result<Alignment, String> {
    let mut links = Vec::new();
    for item in line.split_whitespace() {
        let (i, j) = item
            .split_once('-')
            .ok_or_else(|| format!("bad alignment link '{item}'"))?;
        let i = i.parse().map_err(|_| format!("bad alignment link '{item}'"))?;
        let j = j.parse().map_err(|_| format!("bad alignment link '{item}'"))?;
        links.push((i, j));
    }
    Ok(Alignment(links))
}

pub fn load_alignments(path: &Path) -> Result<Vec<Alignment>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source = path.display().to_string();
    text.lines()
        .enumerate()
        .map(|(i, l)| parse_alignment(l).map_err(|m| Error::parse(&source, i + 1, m)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub min_count: usize,
    pub min_prob: f64,
    pub max_len: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            min_count: 1,
            min_prob: 0.0,
            max_len: 5,
        }
    }
}

/// Source positions listed in target order. A token's anchor is its first
/// aligned target position; an unaligned token inherits the anchor of the
/// token before it, so it travels with its left neighbour.
fn target_order(n: usize, links: &[(usize, usize)]) -> Vec<usize> {
    let mut first: Vec<Option<usize>> = vec![None; n];
    for &(i, j) in links {
        first[i] = Some(first[i].map_or(j, |f| f.min(j)));
    }
    let mut anchor = -1i64;
    let mut keys = Vec::with_capacity(n);
    for (i, f) in first.iter().enumerate() {
        if let Some(j) = f {
            anchor = *j as i64;
        }
        keys.push((anchor, i));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| keys[i]);
    order
}

fn self_mapping(order: &[usize], a: usize, b: usize) -> bool {
    order[a..b].iter().all(|&x| x >= a && x < b)
}

fn is_identity(order: &[usize], a: usize, b: usize) -> bool {
    (a..b).all(|k| order[k] == k)
}

/// Non-identity self-mapping spans `[a, b)` with no smaller such span inside.
fn minimal_spans(order: &[usize], max_len: usize) -> Vec<(usize, usize)> {
    let n = order.len();
    let candidate = |a: usize, b: usize| self_mapping(order, a, b) && !is_identity(order, a, b);
    let mut out = Vec::new();
    for len in 2..=max_len.min(n) {
        for a in 0..=n - len {
            let b = a + len;
            if !candidate(a, b) {
                continue;
            }
            let contains_smaller = out
                .iter()
                .any(|&(c, d): &(usize, usize)| c >= a && d <= b);
            if !contains_smaller {
                out.push((a, b));
            }
        }
    }
    out
}

/// Learns POS-pattern rules from tagged source sentences aligned to a
/// target side. `target_lens`, when given, bounds the target indices.
///
/// A rule's count is the number of extracted spans with that pattern and
/// permutation, and its score that count divided by the number of times the
/// pattern occurs anywhere in the source sentences. Only the best
/// permutation per pattern is kept.
pub fn extract_rules(
    source: &[Sentence],
    target_lens: Option<&[usize]>,
    alignments: &[Alignment],
    cfg: &ExtractConfig,
) -> Result<RuleSet> {
    if alignments.len() != source.len() {
        return Err(Error::Data(format!(
            "{} alignment lines for {} sentence pairs",
            alignments.len(),
            source.len()
        )));
    }
    if let Some(lens) = target_lens {
        if lens.len() != source.len() {
            return Err(Error::Data(format!(
                "{} target sentences for {} source sentences",
                lens.len(),
                source.len()
            )));
        }
    }
    let max_len = cfg.max_len.clamp(2, 5);
    let mut pattern_counts: BTreeMap<Vec<Upos>, usize> = BTreeMap::new();
    let mut perm_counts: BTreeMap<(Vec<Upos>, Vec<usize>), usize> = BTreeMap::new();

    for (k, (s, al)) in source.iter().zip(alignments).enumerate() {
        let n = s.len();
        for &(i, j) in al.links() {
            let tgt_bad = target_lens.is_some_and(|l| j >= l[k]);
            if i >= n || tgt_bad {
                return Err(Error::Data(format!(
                    "alignment line {}: link {i}-{j} out of range for sentence '{}'",
                    k + 1,
                    s.id
                )));
            }
        }
        let tags: Vec<Upos> = s.tokens.iter().map(|t| t.pos).collect();
        for len in 2..=max_len.min(n) {
            for w in tags.windows(len) {
                *pattern_counts.entry(w.to_vec()).or_default() += 1;
            }
        }
        let order = target_order(n, al.links());
        for (a, b) in minimal_spans(&order, max_len) {
            let perm = order[a..b].iter().map(|&x| x - a).collect();
            *perm_counts.entry((tags[a..b].to_vec(), perm)).or_default() += 1;
        }
    }

    let mut best: BTreeMap<Vec<Upos>, (f64, usize, Vec<usize>)> = BTreeMap::new();
    for ((pattern, perm), count) in perm_counts {
        let prob = count as f64 / pattern_counts[&pattern] as f64;
        let better = match best.get(&pattern) {
            None => true,
            Some((p, c, q)) => {
                prob > *p || (prob == *p && (count > *c || (count == *c && perm < *q)))
            }
        };
        if better {
            best.insert(pattern, (prob, count, perm));
        }
    }

    let mut rules = Vec::new();
    for (pattern, (prob, count, perm)) in best {
        if count >= cfg.min_count && prob >= cfg.min_prob {
            rules.push(ReorderRule::new(pattern, perm, prob, count)?);
        }
    }
    RuleSet::new(rules)
}
