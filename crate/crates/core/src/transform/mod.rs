//! Test-time sentence transformations: word-order changes (rule-based
//! reordering, noun-adjective swap, random permutation) and lexicon
//! filters that replace surfaces with `UNK` in place.

mod extract;
mod rules;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Token, Upos};
use crate::embedding::UNK;
use crate::error::{Error, Result};
use crate::rng;

pub use extract::{extract_rules, load_alignments, parse_alignment, Alignment, ExtractConfig};
pub use rules::{apply_rules, load_rules, parse_rules, save_rules, ReorderRule, RuleSet};

/// Polarity word list; membership is case-insensitive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentimentLexicon {
    words: BTreeSet<String>,
    pub language: String,
}

impl SentimentLexicon {
    pub fn new<I, S>(words: I, language: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::Data("sentiment lexicon is empty".into()));
        }
        Ok(SentimentLexicon {
            words,
            language: language.into(),
        })
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.words.contains(&surface.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        self.words.iter().map(|w| format!("{w}\n")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// One word per line; blank lines and `#` comments are ignored.
pub fn load_lexicon(path: &Path, language: &str) -> Result<SentimentLexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SentimentLexicon::new(
        text.lines().filter(|l| !l.trim_start().starts_with('#')),
        language,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Original,
    Reordered,
    #[serde(rename = "nounadj")]
    NounAdj,
    Random,
    #[serde(rename = "onlylex")]
    OnlyLexicon,
    #[serde(rename = "nolex")]
    NoLexicon,
}

impl TransformKind {
    pub const ALL: [TransformKind; 6] = [
        TransformKind::Original,
        TransformKind::Reordered,
        TransformKind::NounAdj,
        TransformKind::Random,
        TransformKind::OnlyLexicon,
        TransformKind::NoLexicon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Original => "original",
            TransformKind::Reordered => "reordered",
            TransformKind::NounAdj => "nounadj",
            TransformKind::Random => "random",
            TransformKind::OnlyLexicon => "onlylex",
            TransformKind::NoLexicon => "nolex",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            TransformKind::Original => "Original",
            TransformKind::Reordered => "Reordered",
            TransformKind::NounAdj => "N-ADJ",
            TransformKind::Random => "Random",
            TransformKind::OnlyLexicon => "Only-Lexicon",
            TransformKind::NoLexicon => "No-Lexicon",
        }
    }

    pub fn changes_order(self) -> bool {
        matches!(
            self,
            TransformKind::Reordered | TransformKind::NounAdj | TransformKind::Random
        )
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransformKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown transform '{s}' (original|reordered|nounadj|random|onlylex|nolex)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransformSpec {
    Original,
    Reordered(RuleSet),
    NounAdj,
    Random { seed: u64 },
    OnlyLexicon(SentimentLexicon),
    NoLexicon(SentimentLexicon),
}

impl TransformSpec {
    pub fn kind(&self) -> TransformKind {
        match self {
            TransformSpec::Original => TransformKind::Original,
            TransformSpec::Reordered(_) => TransformKind::Reordered,
            TransformSpec::NounAdj => TransformKind::NounAdj,
            TransformSpec::Random { .. } => TransformKind::Random,
            TransformSpec::OnlyLexicon(_) => TransformKind::OnlyLexicon,
            TransformSpec::NoLexicon(_) => TransformKind::NoLexicon,
        }
    }
}

pub fn apply_transform(spec: &TransformSpec, s: &Sentence) -> Sentence {
    match spec {
        TransformSpec::Original => s.clone(),
        TransformSpec::Reordered(rules) => apply_rules(rules, s),
        TransformSpec::NounAdj => noun_adj_swap(s),
        TransformSpec::Random { seed } => random_permute(s, *seed),
        TransformSpec::OnlyLexicon(lex) => lexicon_filter(s, lex, LexiconMode::KeepOnly),
        TransformSpec::NoLexicon(lex) => lexicon_filter(s, lex, LexiconMode::Remove),
    }
}

pub fn transform_corpus(spec: &TransformSpec, c: &Corpus) -> Corpus {
    Corpus {
        name: c.name.clone(),
        language: c.language.clone(),
        sentences: c.sentences.iter().map(|s| apply_transform(spec, s)).collect(),
    }
}

/// Swaps every non-overlapping adjacent `NOUN ADJ` pair in one left-to-right
/// pass; the scan resumes after a swapped pair.
pub fn noun_adj_swap(s: &Sentence) -> Sentence {
    let mut tokens = s.tokens.clone();
    let mut i = 0;
    while i + 1 < tokens.len() {
        if tokens[i].pos == Upos::Noun && tokens[i + 1].pos == Upos::Adj {
            tokens.swap(i, i + 1);
            i += 2;
        } else {
            i += 1;
        }
    }
    Sentence {
        tokens,
        ..s.clone()
    }
}

/// Fisher-Yates shuffle keyed by `(seed, sentence id)`, so the result does
/// not depend on which other sentences are processed or in what order.
pub fn random_permute(s: &Sentence, seed: u64) -> Sentence {
    let mut rng = rng::stream(seed, &format!("random-permute:{}", s.id));
    let mut tokens = s.tokens.clone();
    rng::shuffle(&mut rng, &mut tokens);
    Sentence {
        tokens,
        ..s.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LexiconMode {
    /// Non-lexicon tokens become `UNK`.
    KeepOnly,
    /// Lexicon tokens become `UNK`.
    Remove,
}

pub fn lexicon_filter(s: &Sentence, lex: &SentimentLexicon, mode: LexiconMode) -> Sentence {
    let tokens = s
        .tokens
        .iter()
        .map(|t| {
            let member = lex.contains(&t.surface);
            let unk = match mode {
                LexiconMode::KeepOnly => !member,
                LexiconMode::Remove => member,
            };
            if unk {
                Token {
                    surface: UNK.to_string(),
                    pos: t.pos,
                }
            } else {
                t.clone()
            }
        })
        .collect();
    Sentence {
        tokens,
        ..s.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label4;
    use proptest::prelude::*;

    pub(crate) fn tagged(words: &[(&str, Upos)]) -> Sentence {
        Sentence {
            id: "t".into(),
            label: Label4::Neg,
            tokens: words.iter().map(|&(w, p)| Token::new(w, p)).collect(),
        }
    }

    fn text(s: &Sentence) -> String {
        s.text()
    }

    #[test]
    fn noun_adj_basic_cases() {
        use Upos::*;
        let s = tagged(&[("punto", Noun), ("negativo", Adj)]);
        assert_eq!(text(&noun_adj_swap(&s)), "negativo punto");
        let s = tagged(&[("el", Det), ("hotel", Noun), ("es", Aux)]);
        assert_eq!(noun_adj_swap(&s), s);
        let s = tagged(&[("casa", Noun), ("roja", Adj), ("grande", Adj)]);
        assert_eq!(text(&noun_adj_swap(&s)), "roja casa grande");
    }

    /// Index-scanning reference for the single-pass swap.
    fn swap_oracle(s: &Sentence) -> Vec<String> {
        let n = s.len();
        let mut out: Vec<String> = Vec::with_capacity(n);
        let mut skip = false;
        for i in 0..n {
            if skip {
                skip = false;
                continue;
            }
            if i + 1 < n && s.tokens[i].pos == Upos::Noun && s.tokens[i + 1].pos == Upos::Adj {
                out.push(s.tokens[i + 1].surface.clone());
                out.push(s.tokens[i].surface.clone());
                skip = true;
            } else {
                out.push(s.tokens[i].surface.clone());
            }
        }
        out
    }

    fn arb_sentence() -> impl Strategy<Value = Sentence> {
        let tags = prop::sample::select(vec![Upos::Noun, Upos::Adj, Upos::Adv, Upos::Det, Upos::Part, Upos::Verb]);
        (prop::collection::vec(tags, 1..14), "[a-z]{1,6}").prop_map(|(tags, id)| Sentence {
            id,
            label: Label4::Pos,
            tokens: tags
                .into_iter()
                .enumerate()
                .map(|(i, p)| Token::new(format!("w{i}"), p))
                .collect(),
        })
    }

    fn sorted_surfaces(s: &Sentence) -> Vec<String> {
        let mut v: Vec<String> = s.surfaces().map(str::to_string).collect();
        v.sort();
        v
    }

    #[test]
    fn random_basic_cases() {
        let one = tagged(&[("solo", Upos::Adj)]);
        assert_eq!(random_permute(&one, 4), one);
        let s = tagged(&[("a", Upos::X), ("b", Upos::X), ("c", Upos::X), ("d", Upos::X), ("e", Upos::X)]);
        assert_eq!(random_permute(&s, 4), random_permute(&s, 4));
    }

    #[test]
    fn lexicon_filters_are_complementary() {
        let lex = SentimentLexicon::new(["bueno"], "es").unwrap();
        let s = tagged(&[("Bueno", Upos::Adj), ("hotel", Upos::Noun)]);
        assert_eq!(text(&lexicon_filter(&s, &lex, LexiconMode::KeepOnly)), "Bueno UNK");
        assert_eq!(text(&lexicon_filter(&s, &lex, LexiconMode::Remove)), "UNK hotel");
        assert!(SentimentLexicon::new(Vec::<String>::new(), "es").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn noun_adj_matches_oracle(s in arb_sentence()) {
            let out = noun_adj_swap(&s);
            prop_assert_eq!(out.surfaces().map(str::to_string).collect::<Vec<_>>(), swap_oracle(&s));
        }

        #[test]
        fn order_transforms_permute_and_keep_metadata(s in arb_sentence(), seed in 0u64..1000) {
            let rules = parse_rules("NOUN ADJ -> 1 0\nNOUN ADV ADJ -> 1 2 0\n", "m").unwrap();
            for spec in [TransformSpec::NounAdj, TransformSpec::Random { seed }, TransformSpec::Reordered(rules.clone())] {
                let out = apply_transform(&spec, &s);
                prop_assert_eq!(sorted_surfaces(&out), sorted_surfaces(&s));
                prop_assert_eq!(&out.id, &s.id);
                prop_assert_eq!(out.label, s.label);
            }
        }

        #[test]
        fn lexicon_transforms_keep_length_tags_and_partition(s in arb_sentence(), pick in prop::collection::vec(any::<bool>(), 14)) {
            let members: Vec<String> = s.surfaces().zip(&pick).filter(|(_, &p)| p).map(|(w, _)| w.to_string()).collect();
            prop_assume!(!members.is_empty());
            let lex = SentimentLexicon::new(&members, "es").unwrap();
            let keep = apply_transform(&TransformSpec::OnlyLexicon(lex.clone()), &s);
            let drop = apply_transform(&TransformSpec::NoLexicon(lex), &s);
            prop_assert_eq!(keep.len(), s.len());
            prop_assert_eq!(drop.len(), s.len());
            for i in 0..s.len() {
                prop_assert_eq!(keep.tokens[i].pos, s.tokens[i].pos);
                prop_assert_eq!(drop.tokens[i].pos, s.tokens[i].pos);
                let a = keep.tokens[i].surface == UNK;
                let b = drop.tokens[i].surface == UNK;
                prop_assert!(a != b);
            }
        }

        #[test]
        fn rule_noun_adj_equals_swap(s in arb_sentence()) {
            let rules = parse_rules("NOUN ADJ -> 1 0\n", "m").unwrap();
            prop_assert_eq!(apply_rules(&rules, &s), noun_adj_swap(&s));
        }
    }

    #[test]
    fn original_is_identity() {
        let s = tagged(&[("a", Upos::Noun), ("b", Upos::Adj)]);
        assert_eq!(apply_transform(&TransformSpec::Original, &s), s);
    }
}
