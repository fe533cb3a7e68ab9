//! Synthetic parallel sentiment data.
//!
//! Source sentences are built from a toy English-like grammar: filler chunks
//! around one opinion phrase `DET [not] ADJ NOUN` whose adjective is a
//! polarity keyword. A negator directly before the keyword flips the
//! polarity. The target side relexicalizes every source word and, when
//! order divergence is on, swaps every `ADJ NOUN` bigram into `NOUN ADJ`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Corpus, Label4, Sentence, Token, Upos};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::projection::BilingualDictionary;
use crate::rng::{self, Rng};
use crate::transform::{Alignment, SentimentLexicon};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Number of distinct source word types.
    pub vocab_size: usize,
    pub n_sentences: usize,
    pub divergence: bool,
    /// Probability that a sentence's polarity is flipped after generation.
    pub noise: f64,
    pub seed: u64,
    pub dim: usize,
    /// Scale of the per-word perturbation applied before rotating the
    /// source space into the target space.
    pub embedding_noise: f64,
    pub negation_rate: f64,
    /// Probability that the opinion phrase has no determiner, so the
    /// keyword can follow any token.
    pub bare_rate: f64,
    /// Probability of a label-correlated cue verb (not a lexicon word).
    pub cue_rate: f64,
    /// Probability that a cue verb agrees with the label.
    pub cue_fidelity: f64,
    /// Probability that an emitted cue verb is negated, `not cuepos` then
    /// signalling a negative sentence.
    pub cue_negation_rate: f64,
    /// Probability of a two-verb chunk whose order alone carries the label:
    /// `ordx ordy` for positive, `ordy ordx` for negative, right with
    /// probability `cue_fidelity`.
    pub order_cue_rate: f64,
    /// Probability of an extra `not VERB` chunk that negates nothing.
    pub distractor_rate: f64,
    pub source_language: String,
    pub target_language: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            vocab_size: 200,
            n_sentences: 1000,
            divergence: true,
            noise: 0.0,
            seed: 1,
            dim: 32,
            embedding_noise: 0.1,
            negation_rate: 0.35,
            bare_rate: 0.0,
            cue_rate: 0.5,
            cue_fidelity: 0.8,
            cue_negation_rate: 0.0,
            order_cue_rate: 0.0,
            distractor_rate: 0.0,
            source_language: "en".into(),
            target_language: "es".into(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.vocab_size < 20 {
            errs.push(format!("vocab_size must be at least 20, got {}", self.vocab_size));
        }
        if self.n_sentences < 10 {
            errs.push(format!("n_sentences must be at least 10, got {}", self.n_sentences));
        }
        if self.dim == 0 {
            errs.push("dim must be positive".to_string());
        }
        for (name, p) in [
            ("noise", self.noise),
            ("negation_rate", self.negation_rate),
            ("bare_rate", self.bare_rate),
            ("cue_rate", self.cue_rate),
            ("cue_fidelity", self.cue_fidelity),
            ("cue_negation_rate", self.cue_negation_rate),
            ("order_cue_rate", self.order_cue_rate),
            ("distractor_rate", self.distractor_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                errs.push(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.embedding_noise >= 0.0 && self.embedding_noise.is_finite()) {
            errs.push(format!("embedding_noise must be non-negative, got {}", self.embedding_noise));
        }
        if self.source_language == self.target_language {
            errs.push("source and target languages must differ".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Everything the generator produces. Sentence `k` of `source`, `target`
/// and `alignments` describe the same pair, with a shared id.
#[derive(Clone, Debug)]
pub struct SyntheticTask {
    pub source: Corpus,
    pub target: Corpus,
    pub dictionary: BilingualDictionary,
    pub source_lexicon: SentimentLexicon,
    pub target_lexicon: SentimentLexicon,
    pub alignments: Vec<Alignment>,
    pub source_embeddings: EmbeddingTable,
    pub target_embeddings: EmbeddingTable,
    pub source_keywords: BTreeMap<String, Label4>,
    pub target_keywords: BTreeMap<String, Label4>,
    pub source_negator: String,
    pub target_negator: String,
    /// Number of `ADJ NOUN` bigrams in the source side.
    pub adj_noun_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Cat {
    Negator,
    Det,
    Punct,
    Adp,
    Adv,
    Pron,
    Verb,
    CuePos,
    CueNeg,
    OrderX,
    OrderY,
    NeutralAdj,
    Noun,
    Polar(Label4),
}

impl Cat {
    fn pos(self) -> Upos {
        match self {
            Cat::Negator => Upos::Part,
            Cat::Det => Upos::Det,
            Cat::Punct => Upos::Punct,
            Cat::Adp => Upos::Adp,
            Cat::Adv => Upos::Adv,
            Cat::Pron => Upos::Pron,
            Cat::Verb | Cat::CuePos | Cat::CueNeg | Cat::OrderX | Cat::OrderY => Upos::Verb,
            Cat::NeutralAdj | Cat::Polar(_) => Upos::Adj,
            Cat::Noun => Upos::Noun,
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Cat::Negator => "not",
            Cat::Det => "det",
            Cat::Punct => "punct",
            Cat::Adp => "adp",
            Cat::Adv => "adv",
            Cat::Pron => "pron",
            Cat::Verb => "verb",
            Cat::CuePos => "cuepos",
            Cat::CueNeg => "cueneg",
            Cat::OrderX => "ordx",
            Cat::OrderY => "ordy",
            Cat::NeutralAdj => "adj",
            Cat::Noun => "noun",
            Cat::Polar(Label4::StrongPos) => "great",
            Cat::Polar(Label4::Pos) => "good",
            Cat::Polar(Label4::Neg) => "bad",
            Cat::Polar(Label4::StrongNeg) => "awful",
        }
    }
}

struct Vocab {
    by_cat: BTreeMap<Cat, Vec<String>>,
    /// Source words in a fixed order, with their category.
    words: Vec<(String, Cat)>,
}

impl Vocab {
    fn new(v: usize) -> Self {
        let mut sizes: Vec<(Cat, usize)> = vec![
            (Cat::Negator, 1),
            (Cat::Det, 1),
            (Cat::Punct, 1),
            (Cat::Adp, (v / 40).max(1)),
            (Cat::Adv, (v / 40).max(1)),
            (Cat::Pron, (v / 40).max(1)),
            (Cat::Verb, (v / 12).max(1)),
            (Cat::CuePos, (v / 24).max(1)),
            (Cat::CueNeg, (v / 24).max(1)),
            (Cat::OrderX, (v / 40).max(1)),
            (Cat::OrderY, (v / 40).max(1)),
            (Cat::NeutralAdj, (v / 20).max(1)),
        ];
        for l in Label4::ALL {
            sizes.push((Cat::Polar(l), (v / 12).max(1)));
        }
        let used: usize = sizes.iter().map(|(_, n)| n).sum();
        sizes.push((Cat::Noun, v - used));
        let mut by_cat = BTreeMap::new();
        let mut words = Vec::new();
        for (cat, n) in sizes {
            let list: Vec<String> = if cat == Cat::Negator {
                vec!["not".to_string()]
            } else {
                (0..n).map(|i| format!("{}{i}", cat.stem())).collect()
            };
            for w in &list {
                words.push((w.clone(), cat));
            }
            by_cat.insert(cat, list);
        }
        Vocab { by_cat, words }
    }

    fn pick(&self, rng: &mut Rng, cat: Cat) -> Token {
        let list = &self.by_cat[&cat];
        Token::new(list[rng::below(rng, list.len())].clone(), cat.pos())
    }
}

fn flip(l: Label4) -> Label4 {
    match l {
        Label4::StrongPos => Label4::StrongNeg,
        Label4::Pos => Label4::Neg,
        Label4::Neg => Label4::Pos,
        Label4::StrongNeg => Label4::StrongPos,
    }
}

fn translate(word: &str, lang: &str) -> String {
    format!("{word}_{lang}")
}

fn filler_chunk(rng: &mut Rng, vocab: &Vocab) -> Vec<Token> {
    match rng::below(rng, 7) {
        0 => vec![vocab.pick(rng, Cat::Det), vocab.pick(rng, Cat::Noun)],
        1 => vec![
            vocab.pick(rng, Cat::Det),
            vocab.pick(rng, Cat::NeutralAdj),
            vocab.pick(rng, Cat::Noun),
        ],
        2 => vec![vocab.pick(rng, Cat::Verb)],
        3 => vec![
            vocab.pick(rng, Cat::Adp),
            vocab.pick(rng, Cat::Det),
            vocab.pick(rng, Cat::Noun),
        ],
        4 => vec![vocab.pick(rng, Cat::Pron), vocab.pick(rng, Cat::Verb)],
        5 => vec![vocab.pick(rng, Cat::Adv)],
        _ => vec![vocab.pick(rng, Cat::Punct)],
    }
}

fn source_sentence(rng: &mut Rng, vocab: &Vocab, cfg: &SyntheticConfig, id: String) -> Sentence {
    let polar = Label4::ALL[rng::below(rng, 4)];
    let negated = rng::unit(rng) < cfg.negation_rate;
    let clean = if negated { flip(polar) } else { polar };

    let bare = cfg.bare_rate > 0.0 && rng::unit(rng) < cfg.bare_rate;
    let mut opinion = if bare { Vec::new() } else { vec![vocab.pick(rng, Cat::Det)] };
    if negated {
        opinion.push(vocab.pick(rng, Cat::Negator));
    }
    opinion.push(vocab.pick(rng, Cat::Polar(polar)));
    opinion.push(vocab.pick(rng, Cat::Noun));

    let mut chunks: Vec<Vec<Token>> = (0..1 + rng::below(rng, 4)).map(|_| filler_chunk(rng, vocab)).collect();
    if rng::unit(rng) < cfg.cue_rate {
        let agrees = rng::unit(rng) < cfg.cue_fidelity;
        let positive = matches!(clean, Label4::StrongPos | Label4::Pos) == agrees;
        let negated_cue = cfg.cue_negation_rate > 0.0 && rng::unit(rng) < cfg.cue_negation_rate;
        let cat = if positive != negated_cue { Cat::CuePos } else { Cat::CueNeg };
        let cue = vocab.pick(rng, cat);
        chunks.push(if negated_cue { vec![vocab.pick(rng, Cat::Negator), cue] } else { vec![cue] });
    }
    if cfg.order_cue_rate > 0.0 && rng::unit(rng) < cfg.order_cue_rate {
        let agrees = rng::unit(rng) < cfg.cue_fidelity;
        let positive = matches!(clean, Label4::StrongPos | Label4::Pos) == agrees;
        let (x, y) = (vocab.pick(rng, Cat::OrderX), vocab.pick(rng, Cat::OrderY));
        chunks.push(if positive { vec![x, y] } else { vec![y, x] });
    }
    if rng::unit(rng) < cfg.distractor_rate {
        chunks.push(vec![vocab.pick(rng, Cat::Negator), vocab.pick(rng, Cat::Verb)]);
    }
    rng::shuffle(rng, &mut chunks);
    let at = rng::below(rng, chunks.len() + 1);
    chunks.insert(at, opinion);

    let label = if rng::unit(rng) < cfg.noise { flip(clean) } else { clean };
    Sentence {
        id,
        label,
        tokens: chunks.into_iter().flatten().collect(),
    }
}

/// Relexicalizes `s` and, with divergence, swaps each `ADJ NOUN` bigram.
/// Returns the target sentence and the source-to-target alignment.
fn target_sentence(s: &Sentence, lang: &str, divergence: bool) -> (Sentence, Alignment) {
    let n = s.len();
    let mut order: Vec<usize> = (0..n).collect();
    if divergence {
        let mut i = 0;
        while i + 1 < n {
            if s.tokens[i].pos == Upos::Adj && s.tokens[i + 1].pos == Upos::Noun {
                order.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
    }
    let tokens = order
        .iter()
        .map(|&i| Token::new(translate(&s.tokens[i].surface, lang), s.tokens[i].pos))
        .collect();
    let mut links: Vec<(usize, usize)> = order.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    links.sort_unstable();
    (
        Sentence {
            id: s.id.clone(),
            label: s.label,
            tokens,
        },
        Alignment(links),
    )
}

fn gaussian(rng: &mut Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng::normal(rng)).collect()
}

/// Random orthogonal matrix from the QR factorization of a Gaussian one.
pub(crate) fn random_orthogonal(rng: &mut Rng, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng::normal(rng));
    g.qr().q()
}

fn embeddings(vocab: &Vocab, cfg: &SyntheticConfig) -> Result<(EmbeddingTable, EmbeddingTable)> {
    let d = cfg.dim;
    let unit = 1.0 / (d as f64).sqrt();
    let mut rng = rng::stream(cfg.seed, "synthetic-embeddings");
    let mut centers: BTreeMap<Cat, Vec<f64>> = BTreeMap::new();
    for cat in vocab.by_cat.keys() {
        centers.insert(*cat, gaussian(&mut rng, d, unit));
    }
    let q = random_orthogonal(&mut rng, d);
    let mut src_rows = Vec::new();
    let mut tgt_rows = Vec::new();
    for (w, cat) in &vocab.words {
        let own = gaussian(&mut rng, d, 0.7 * unit);
        let v: Vec<f64> = centers[cat].iter().zip(&own).map(|(c, o)| c + o).collect();
        let noisy: Vec<f64> = v
            .iter()
            .map(|x| x + cfg.embedding_noise * unit * rng::normal(&mut rng))
            .collect();
        let rotated: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|i| noisy[i] * q[(i, j)]).sum())
            .collect();
        src_rows.push((w.clone(), v));
        tgt_rows.push((translate(w, &cfg.target_language), rotated));
    }
    Ok((EmbeddingTable::from_rows(d, src_rows)?, EmbeddingTable::from_rows(d, tgt_rows)?))
}

pub fn generate_synthetic_task(cfg: &SyntheticConfig) -> Result<SyntheticTask> {
    cfg.validate()?;
    let vocab = Vocab::new(cfg.vocab_size);
    let mut rng = rng::stream(cfg.seed, "synthetic-sentences");
    let tl = cfg.target_language.as_str();

    let mut src = Vec::with_capacity(cfg.n_sentences);
    let mut tgt = Vec::with_capacity(cfg.n_sentences);
    let mut alignments = Vec::with_capacity(cfg.n_sentences);
    let mut adj_noun_count = 0;
    for k in 0..cfg.n_sentences {
        let s = source_sentence(&mut rng, &vocab, cfg, format!("s{k:05}"));
        adj_noun_count += s
            .tokens
            .windows(2)
            .filter(|w| w[0].pos == Upos::Adj && w[1].pos == Upos::Noun)
            .count();
        let (t, a) = target_sentence(&s, tl, cfg.divergence);
        src.push(s);
        tgt.push(t);
        alignments.push(a);
    }

    let mut source_keywords = BTreeMap::new();
    let mut target_keywords = BTreeMap::new();
    for l in Label4::ALL {
        for w in &vocab.by_cat[&Cat::Polar(l)] {
            source_keywords.insert(w.clone(), l);
            target_keywords.insert(translate(w, tl), l);
        }
    }
    let (source_embeddings, target_embeddings) = embeddings(&vocab, cfg)?;
    let dictionary = BilingualDictionary::from_pairs(
        vocab.words.iter().map(|(w, _)| (w.clone(), translate(w, tl))),
    )?;
    let name = format!("synthetic-{}", cfg.seed);
    Ok(SyntheticTask {
        source: Corpus::new(format!("{name}.{}", cfg.source_language), cfg.source_language.clone(), src)?,
        target: Corpus::new(format!("{name}.{tl}"), tl, tgt)?,
        dictionary,
        source_lexicon: SentimentLexicon::new(source_keywords.keys(), cfg.source_language.clone())?,
        target_lexicon: SentimentLexicon::new(target_keywords.keys(), tl)?,
        alignments,
        source_embeddings,
        target_embeddings,
        source_keywords,
        target_keywords,
        source_negator: "not".into(),
        target_negator: translate("not", tl),
        adj_noun_count,
    })
}

/// Bag-of-words classifier over planted keywords: the first keyword's
/// polarity, flipped when the negator occurs anywhere in the sentence.
/// `None` when the sentence holds no keyword.
pub fn keyword_oracle(keywords: &BTreeMap<String, Label4>, negator: &str, s: &Sentence) -> Option<Label4> {
    let polar = s.surfaces().find_map(|w| keywords.get(w).copied())?;
    let negated = s.surfaces().any(|w| w == negator);
    Some(if negated { flip(polar) } else { polar })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderTaskConfig {
    pub n_sentences: usize,
    /// Number of filler word types.
    pub vocab_size: usize,
    pub dim: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for OrderTaskConfig {
    fn default() -> Self {
        OrderTaskConfig {
            n_sentences: 600,
            vocab_size: 40,
            dim: 16,
            min_len: 4,
            max_len: 10,
            seed: 1,
        }
    }
}

/// Sentences holding the adjacent pair `good bad` (label Pos) or
/// `bad good` (label Neg) among fillers, so both classes have identical
/// token multiset distributions.
pub fn generate_order_task(cfg: &OrderTaskConfig) -> Result<(Corpus, EmbeddingTable)> {
    let mut errs = Vec::new();
    if cfg.n_sentences < 10 {
        errs.push(format!("n_sentences must be at least 10, got {}", cfg.n_sentences));
    }
    if cfg.vocab_size == 0 || cfg.dim == 0 {
        errs.push("vocab_size and dim must be positive".to_string());
    }
    if cfg.min_len < 2 || cfg.max_len < cfg.min_len {
        errs.push(format!("need 2 <= min_len <= max_len, got {}..{}", cfg.min_len, cfg.max_len));
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let mut rng = rng::stream(cfg.seed, "order-task");
    let fillers: Vec<String> = (0..cfg.vocab_size).map(|i| format!("filler{i}")).collect();
    let mut sentences = Vec::with_capacity(cfg.n_sentences);
    for k in 0..cfg.n_sentences {
        let len = cfg.min_len + rng::below(&mut rng, cfg.max_len - cfg.min_len + 1);
        let mut tokens: Vec<Token> = (0..len - 2)
            .map(|_| Token::new(fillers[rng::below(&mut rng, fillers.len())].clone(), Upos::Noun))
            .collect();
        let forward = rng::below(&mut rng, 2) == 0;
        let at = rng::below(&mut rng, tokens.len() + 1);
        let (a, b) = if forward { ("good", "bad") } else { ("bad", "good") };
        tokens.insert(at, Token::new(b, Upos::Adj));
        tokens.insert(at, Token::new(a, Upos::Adj));
        sentences.push(Sentence {
            id: format!("o{k:05}"),
            label: if forward { Label4::Pos } else { Label4::Neg },
            tokens,
        });
    }
    let d = cfg.dim;
    let scale = 1.0 / (d as f64).sqrt();
    let rows = fillers
        .iter()
        .map(String::as_str)
        .chain(["good", "bad"])
        .map(|w| (w.to_string(), gaussian(&mut rng, d, scale)))
        .collect();
    let table = EmbeddingTable::from_rows(d, rows)?;
    Ok((Corpus::new(format!("order-{}", cfg.seed), "en", sentences)?, table))
}
