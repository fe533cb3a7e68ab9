//! POS-pattern rewrite rules and their text format:
//!
//! ```text
//! NOUN ADJ -> 1 0  # prob=0.93 count=412
//! ```
//!
//! A rule's permutation lists, for each output slot, the index of the window
//! token placed there, so `NOUN ADV ADJ -> 1 2 0` turns
//! `madera tan típicas` into `tan típicas madera`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::corpus::{Sentence, Upos};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ReorderRule {
    pub pattern: Vec<Upos>,
    pub permutation: Vec<usize>,
    /// Conditional probability of the permutation given the pattern.
    pub score: f64,
    pub count: usize,
}

impl ReorderRule {
    pub fn new(pattern: Vec<Upos>, permutation: Vec<usize>, score: f64, count: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Data("rule pattern is empty".into()));
        }
        if permutation.len() != pattern.len() {
            return Err(Error::Data(format!(
                "permutation of length {} for pattern of length {}",
                permutation.len(),
                pattern.len()
            )));
        }
        let mut seen = vec![false; permutation.len()];
        for &p in &permutation {
            if p >= seen.len() || seen[p] {
                return Err(Error::Data(format!("{permutation:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if permutation.iter().enumerate().all(|(i, &p)| i == p) {
            return Err(Error::Data("identity permutation is not a rule".into()));
        }
        if !(score > 0.0 && score <= 1.0) {
            return Err(Error::Data(format!("rule score {score} outside (0, 1]")));
        }
        Ok(ReorderRule {
            pattern,
            permutation,
            score,
            count,
        })
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    fn matches(&self, tags: &[Upos]) -> bool {
        tags.len() >= self.pattern.len() && tags[..self.pattern.len()] == self.pattern[..]
    }

    pub fn to_line(&self) -> String {
        let pattern: Vec<&str> = self.pattern.iter().map(|t| t.as_str()).collect();
        let perm: Vec<String> = self.permutation.iter().map(usize::to_string).collect();
        format!(
            "{} -> {}  # prob={} count={}",
            pattern.join(" "),
            perm.join(" "),
            self.score,
            self.count
        )
    }
}

/// Rules in application priority: longer patterns first, then higher score,
/// then original order. Patterns are unique.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleSet {
    rules: Vec<ReorderRule>,
}

impl RuleSet {
    pub fn new(mut rules: Vec<ReorderRule>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rules {
            if !seen.insert(r.pattern.clone()) {
                let tags: Vec<&str> = r.pattern.iter().map(|t| t.as_str()).collect();
                return Err(Error::Data(format!("duplicate rule pattern '{}'", tags.join(" "))));
            }
        }
        rules.sort_by(|a, b| b.len().cmp(&a.len()).then(b.score.total_cmp(&a.score)));
        Ok(RuleSet { rules })
    }

    pub fn empty() -> Self {
        RuleSet::default()
    }

    pub fn rules(&self) -> &[ReorderRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn find(&self, pattern: &[Upos]) -> Option<&ReorderRule> {
        self.rules.iter().find(|r| r.pattern == pattern)
    }

    pub fn to_text(&self) -> String {
        self.rules.iter().map(|r| r.to_line() + "\n").collect()
    }
}

/// One left-to-right pass; at each position the first rule in priority
/// order whose pattern matches is applied and the scan jumps past its window.
pub fn apply_rules(rs: &RuleSet, s: &Sentence) -> Sentence {
    let tags: Vec<Upos> = s.tokens.iter().map(|t| t.pos).collect();
    let mut out = Vec::with_capacity(s.len());
    let mut i = 0;
    while i < s.len() {
        match rs.rules.iter().find(|r| r.matches(&tags[i..])) {
            Some(rule) => {
                out.extend(rule.permutation.iter().map(|&p| s.tokens[i + p].clone()));
                i += rule.len();
            }
            None => {
                out.push(s.tokens[i].clone());
                i += 1;
            }
        }
    }
    Sentence {
        tokens: out,
        ..s.clone()
    }
}

pub fn parse_rules(text: &str, source: &str) -> Result<RuleSet> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        if body.trim().is_empty() {
            continue;
        }
        let (lhs, rhs) = body
            .split_once("->")
            .ok_or_else(|| Error::parse(source, lineno, "expected 'TAGS -> PERMUTATION'"))?;
        let pattern = lhs
            .split_whitespace()
            .map(|t| t.parse::<Upos>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        let permutation = rhs
            .split_whitespace()
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| Error::parse(source, lineno, format!("bad index '{p}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut score = 1.0;
        let mut count = 0;
        for kv in comment.unwrap_or("").split_whitespace() {
            if let Some(v) = kv.strip_prefix("prob=") {
                score = v
                    .parse()
                    .map_err(|_| Error::parse(source, lineno, format!("bad prob '{v}'")))?;
            } else if let Some(v) = kv.strip_prefix("count=") {
                count = v
                    .parse()
                    .map_err(|_| Error::parse(source, lineno, format!("bad count '{v}'")))?;
            }
        }
        let rule = ReorderRule::new(pattern, permutation, score, count)
            .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        rules.push(rule);
    }
    RuleSet::new(rules).map_err(|e| Error::parse(source, 0, e.to_string()))
}

pub fn load_rules(path: &Path) -> Result<RuleSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules(&text, &path.display().to_string())
}

pub fn save_rules(rs: &RuleSet, path: &Path) -> Result<()> {
    fs::write(path, rs.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label4, Token};
    use proptest::prelude::*;

    fn sentence(tags: &[Upos]) -> Sentence {
        Sentence {
            id: "s".into(),
            label: Label4::Pos,
            tokens: tags
                .iter()
                .enumerate()
                .map(|(i, &t)| Token::new(format!("w{i}"), t))
                .collect(),
        }
    }

    #[test]
    fn empty_rule_set_is_identity() {
        let s = sentence(&[Upos::Noun, Upos::Adj]);
        assert_eq!(apply_rules(&RuleSet::empty(), &s), s);
    }

    #[test]
    fn longest_match_wins() {
        let rs = parse_rules("NOUN ADJ -> 1 0\nNOUN ADJ ADJ -> 2 1 0\n", "m").unwrap();
        let s = sentence(&[Upos::Noun, Upos::Adj, Upos::Adj, Upos::Noun, Upos::Adj]);
        assert_eq!(apply_rules(&rs, &s).text(), "w2 w1 w0 w4 w3");
    }

    #[test]
    fn higher_score_wins_among_equal_length() {
        let rs = parse_rules("NOUN ADJ -> 1 0  # prob=0.4\nADJ NOUN -> 1 0  # prob=0.9\n", "m").unwrap();
        assert_eq!(rs.rules()[0].pattern, vec![Upos::Adj, Upos::Noun]);
        // ADJ NOUN ADJ: position 0 matches only ADJ NOUN.
        let s = sentence(&[Upos::Adj, Upos::Noun, Upos::Adj]);
        assert_eq!(apply_rules(&rs, &s).text(), "w1 w0 w2");
    }

    #[test]
    fn rejects_bad_permutations_and_duplicates() {
        assert!(matches!(parse_rules("NOUN ADJ -> 0 1\n", "m"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_rules("NOUN ADJ -> 1 1\n", "m").is_err());
        assert!(parse_rules("NOUN ADJ -> 1 0 2\n", "m").is_err());
        assert!(parse_rules("NOUN ADJ -> 1 0\nNOUN ADJ -> 1 0\n", "m").is_err());
        assert!(parse_rules("NOUN FOO -> 1 0\n", "m").is_err());
    }

    #[test]
    fn parses_documented_example() {
        let rs = parse_rules("# header comment\nNOUN ADJ -> 1 0  # prob=0.93 count=412\n", "m").unwrap();
        let r = &rs.rules()[0];
        assert_eq!(r.score, 0.93);
        assert_eq!(r.count, 412);
        assert_eq!(r.to_line(), "NOUN ADJ -> 1 0  # prob=0.93 count=412");
    }

    fn arb_rule() -> impl Strategy<Value = ReorderRule> {
        (2usize..=5)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(prop::sample::select(Upos::ALL.to_vec()), n),
                    Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                    1u32..=1000,
                    0usize..10_000,
                )
            })
            .prop_filter("non-identity", |(_, p, _, _)| p.iter().enumerate().any(|(i, &x)| i != x))
            .prop_map(|(pattern, perm, s, c)| {
                ReorderRule::new(pattern, perm, s as f64 / 1000.0, c).unwrap()
            })
    }

    proptest! {
        #[test]
        fn save_load_round_trip(rules in prop::collection::vec(arb_rule(), 0..8)) {
            let mut uniq = Vec::new();
            for r in rules {
                if !uniq.iter().any(|u: &ReorderRule| u.pattern == r.pattern) {
                    uniq.push(r);
                }
            }
            let rs = RuleSet::new(uniq).unwrap();
            let back = parse_rules(&rs.to_text(), "m").unwrap();
            prop_assert_eq!(back, rs);
        }
    }
}
