//! POS-tagged sentence-level sentiment corpora.
//!
//! The on-disk format is a small CoNLL-like layout: every sentence block
//! starts with `# id = ...` and `# label = ...` header comments followed by
//! one `surface<TAB>UPOS` line per token, and a blank line ends the block.

mod synthetic;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use synthetic::{
    generate_order_task, generate_synthetic_task, keyword_oracle, OrderTaskConfig, SyntheticConfig,
    SyntheticTask,
};

/// Universal POS tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }
}

impl FromStr for Upos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Upos::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Tag(s.to_string()))
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub pos: Upos,
}

impl Token {
    /// Panics on an empty surface or one containing whitespace.
    pub fn new(surface: impl Into<String>, pos: Upos) -> Self {
        let surface = surface.into();
        assert!(
            !surface.is_empty() && !surface.chars().any(char::is_whitespace),
            "invalid token surface {surface:?}"
        );
        Token { surface, pos }
    }
}

/// Four-way sentence sentiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label4 {
    StrongPos,
    Pos,
    Neg,
    StrongNeg,
}

impl Label4 {
    pub const ALL: [Label4; 4] = [Label4::StrongPos, Label4::Pos, Label4::Neg, Label4::StrongNeg];

    pub fn as_str(self) -> &'static str {
        match self {
            Label4::StrongPos => "strpos",
            Label4::Pos => "pos",
            Label4::Neg => "neg",
            Label4::StrongNeg => "strneg",
        }
    }

    pub fn collapse(self) -> Label2 {
        match self {
            Label4::StrongPos | Label4::Pos => Label2::Pos,
            Label4::Neg | Label4::StrongNeg => Label2::Neg,
        }
    }
}

impl FromStr for Label4 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label4::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Label(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label2 {
    Pos,
    Neg,
}

/// Classification task; fixes the label set and its tie-breaking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "binary")]
    Binary,
    #[serde(rename = "4class")]
    FourClass,
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::FourClass => 4,
        }
    }

    /// Class index of a gold label under this task.
    pub fn class_of(self, label: Label4) -> usize {
        match self {
            Task::Binary => match label.collapse() {
                Label2::Pos => 0,
                Label2::Neg => 1,
            },
            Task::FourClass => label as usize,
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::Binary => &["pos", "neg"],
            Task::FourClass => &["strpos", "pos", "neg", "strneg"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::FourClass => "4class",
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Task::Binary),
            "4class" | "4-class" => Ok(Task::FourClass),
            other => Err(Error::config(format!("unknown task '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub label: Label4,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    pub fn text(&self) -> String {
        self.surfaces().collect::<Vec<_>>().join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub language: String,
    pub sentences: Vec<Sentence>,
}

/// Supported corpus file layouts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CorpusFormat {
    #[default]
    Tagged,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tagged" | "conll" => Ok(CorpusFormat::Tagged),
            other => Err(Error::config(format!("unknown corpus format '{other}'"))),
        }
    }
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and empty sentences.
    pub fn new(
        name: impl Into<String>,
        language: impl Into<String>,
        sentences: Vec<Sentence>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &sentences {
            if s.tokens.is_empty() {
                return Err(Error::Data(format!("sentence '{}' has no tokens", s.id)));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Data(format!("duplicate sentence id '{}'", s.id)));
            }
        }
        Ok(Corpus {
            name: name.into(),
            language: language.into(),
            sentences,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str("# id = ");
            out.push_str(&s.id);
            out.push_str("\n# label = ");
            out.push_str(s.label.as_str());
            out.push('\n');
            for t in &s.tokens {
                out.push_str(&t.surface);
                out.push('\t');
                out.push_str(t.pos.as_str());
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat, language: &str) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match format {
        CorpusFormat::Tagged => parse_corpus(&text, &path.display().to_string(), &name, language),
    }
}

/// Parses the tagged block format. `source` names the input in error messages.
pub fn parse_corpus(text: &str, source: &str, name: &str, language: &str) -> Result<Corpus> {
    struct Block {
        start: usize,
        id: Option<String>,
        label: Option<Label4>,
        tokens: Vec<Token>,
    }

    fn finish(block: Block, source: &str) -> Result<Sentence> {
        let id = block
            .id
            .ok_or_else(|| Error::parse(source, block.start, "sentence block without '# id'"))?;
        let label = block
            .label
            .ok_or_else(|| Error::parse(source, block.start, "sentence block without '# label'"))?;
        if block.tokens.is_empty() {
            return Err(Error::parse(source, block.start, "sentence block without tokens"));
        }
        Ok(Sentence {
            id,
            label,
            tokens: block.tokens,
        })
    }

    let mut sentences = Vec::new();
    let mut current: Option<Block> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(block) = current.take() {
                sentences.push(finish(block, source)?);
            }
            continue;
        }
        let block = current.get_or_insert_with(|| Block {
            start: lineno,
            id: None,
            label: None,
            tokens: Vec::new(),
        });
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "id" => block.id = Some(value.trim().to_string()),
                    "label" => block.label = Some(value.trim().parse()?),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected 2 tab-separated columns, found {}", cols.len()),
            ));
        }
        let surface = cols[0];
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(Error::parse(source, lineno, "empty or whitespace-bearing surface"));
        }
        let pos: Upos = cols[1].trim().parse()?;
        block.tokens.push(Token {
            surface: surface.to_string(),
            pos,
        });
    }
    if let Some(block) = current.take() {
        sentences.push(finish(block, source)?);
    }
    Corpus::new(name, language, sentences)
}

/// The binary view of a corpus: one collapsed label per sentence, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryView<'a> {
    pub corpus: &'a Corpus,
    pub labels: Vec<Label2>,
}

pub fn collapse_labels(c: &Corpus) -> BinaryView<'_> {
    BinaryView {
        corpus: c,
        labels: c.sentences.iter().map(|s| s.label.collapse()).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub task: Task,
    /// Counts in the task's class order.
    pub counts: Vec<usize>,
    pub total: usize,
}

impl CorpusStats {
    pub fn from_labels(task: Task, labels: impl IntoIterator<Item = Label4>) -> Self {
        let mut counts = vec![0; task.num_classes()];
        let mut total = 0;
        for l in labels {
            counts[task.class_of(l)] += 1;
            total += 1;
        }
        CorpusStats {
            task,
            counts,
            total,
        }
    }
}

pub fn corpus_stats(c: &Corpus, task: Task) -> CorpusStats {
    CorpusStats::from_labels(task, c.sentences.iter().map(|s| s.label))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

/// Stratified, seeded train/dev/test split. Split sizes are
/// `floor(r_train * n)`, `floor(r_dev * n)` and the remainder; per class the
/// quotas are apportioned by largest remainder. Each split keeps corpus order.
pub fn split_corpus(c: &Corpus, ratios: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (rt, rd, rs) = ratios;
    if (rt + rd + rs - 1.0).abs() > 1e-9 || rt < 0.0 || rd < 0.0 || rs < 0.0 {
        return Err(Error::config(format!(
            "split ratios must be non-negative and sum to 1, got ({rt}, {rd}, {rs})"
        )));
    }
    if c.is_empty() {
        return Err(Error::config("cannot split an empty corpus"));
    }
    let n = c.len();
    let n_train = (rt * n as f64 + 1e-9).floor() as usize;
    let n_dev = ((rd * n as f64 + 1e-9).floor() as usize).min(n - n_train);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for (i, s) in c.sentences.iter().enumerate() {
        members[s.label as usize].push(i);
    }
    let class_sizes: Vec<usize> = members.iter().map(Vec::len).collect();

    let train_q = apportion(
        &class_sizes.iter().map(|&k| rt * k as f64).collect::<Vec<_>>(),
        &class_sizes,
        n_train,
    );
    let left: Vec<usize> = class_sizes.iter().zip(&train_q).map(|(k, t)| k - t).collect();
    let dev_q = apportion(
        &class_sizes.iter().map(|&k| rd * k as f64).collect::<Vec<_>>(),
        &left,
        n_dev,
    );

    let mut assign = vec![2u8; n];
    let mut rng = rng::stream(seed, "split");
    for (class, idx) in members.iter_mut().enumerate() {
        rng::shuffle(&mut rng, idx);
        for (k, &i) in idx.iter().enumerate() {
            assign[i] = if k < train_q[class] {
                0
            } else if k < train_q[class] + dev_q[class] {
                1
            } else {
                2
            };
        }
    }
    let part = |which: u8, suffix: &str| Corpus {
        name: format!("{}.{suffix}", c.name),
        language: c.language.clone(),
        sentences: c
            .sentences
            .iter()
            .zip(&assign)
            .filter(|(_, &a)| a == which)
            .map(|(s, _)| s.clone())
            .collect(),
    };
    Ok(Split {
        train: part(0, "train"),
        dev: part(1, "dev"),
        test: part(2, "test"),
    })
}

/// Integer quotas summing to `total`, each the floor or ceiling of its ideal
/// share and never above `caps`. Extra units go to the largest fractional
/// parts, ties to the lower index.
fn apportion(ideal: &[f64], caps: &[usize], total: usize) -> Vec<usize> {
    let mut q: Vec<usize> = ideal
        .iter()
        .zip(caps)
        .map(|(&x, &cap)| ((x + 1e-9).floor() as usize).min(cap))
        .collect();
    let mut order: Vec<usize> = (0..ideal.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut assigned: usize = q.iter().sum();
    // Round-robin over the priority order until the total is met.
    while assigned < total {
        let before = assigned;
        for &i in &order {
            if assigned == total {
                break;
            }
            if q[i] < caps[i] {
                q[i] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sent(id: &str, label: Label4, words: &[(&str, Upos)]) -> Sentence {
        Sentence {
            id: id.into(),
            label,
            tokens: words.iter().map(|&(w, p)| Token::new(w, p)).collect(),
        }
    }

    fn corpus_with_counts(counts: [usize; 4]) -> Corpus {
        let mut sentences = Vec::new();
        for (label, &k) in Label4::ALL.iter().zip(&counts) {
            for i in 0..k {
                sentences.push(sent(
                    &format!("{}-{i}", label.as_str()),
                    *label,
                    &[("w", Upos::Noun)],
                ));
            }
        }
        Corpus::new("c", "en", sentences).unwrap()
    }

    #[test]
    fn loads_two_blocks() {
        let text = "# id = a\n# label = strpos\ngood\tADJ\nhotel\tNOUN\n\n# id = b\n# label = neg\nbad\tADJ\n";
        let c = parse_corpus(text, "mem", "mem", "en").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.sentences[0].label, Label4::StrongPos);
        assert_eq!(c.sentences[1].label, Label4::Neg);
        assert_eq!(c.sentences[0].tokens[1], Token::new("hotel", Upos::Noun));
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let c = parse_corpus("", "mem", "mem", "en").unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn unknown_label_is_named() {
        let err = parse_corpus("# id = a\n# label = maybe\nx\tX\n", "mem", "mem", "en").unwrap_err();
        assert!(matches!(&err, Error::Label(l) if l == "maybe"), "{err}");
    }

    #[test]
    fn bad_column_count_reports_line() {
        let err = parse_corpus("# id = a\n# label = pos\nx\tX\textra\n", "f.conll", "f", "en")
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_tag_rejected() {
        let err = parse_corpus("# id = a\n# label = pos\nx\tFOO\n", "mem", "mem", "en").unwrap_err();
        assert!(matches!(&err, Error::Tag(t) if t == "FOO"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "# id = a\n# label = pos\nx\tX\n\n# id = a\n# label = neg\ny\tX\n";
        assert!(matches!(parse_corpus(text, "m", "m", "en"), Err(Error::Data(_))));
    }

    #[test]
    fn collapse_matches_published_counts() {
        for (four, two, total) in [
            ([379, 879, 399, 74], [1258, 473], 1731),
            ([370, 846, 218, 38], [1216, 256], 1472),
            ([256, 426, 409, 58], [682, 467], 1149),
        ] {
            let c = corpus_with_counts(four);
            let binary = corpus_stats(&c, Task::Binary);
            assert_eq!(binary.counts, two);
            assert_eq!(binary.total, total);
            let view = collapse_labels(&c);
            assert_eq!(view.labels.iter().filter(|&&l| l == Label2::Pos).count(), two[0]);
        }
        let empty = corpus_with_counts([0; 4]);
        assert_eq!(corpus_stats(&empty, Task::Binary).counts, vec![0, 0]);
        assert_eq!(corpus_stats(&empty, Task::FourClass).total, 0);
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let c = corpus_with_counts([0, 10, 0, 0]);
        let s = split_corpus(&c, (0.7, 0.1, 0.2), 1).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (7, 1, 2));
    }

    #[test]
    fn split_is_deterministic() {
        let c = corpus_with_counts([20, 30, 40, 10]);
        let a = split_corpus(&c, (0.7, 0.1, 0.2), 1).unwrap();
        let b = split_corpus(&c, (0.7, 0.1, 0.2), 1).unwrap();
        assert_eq!(a, b);
        let other = split_corpus(&c, (0.7, 0.1, 0.2), 2).unwrap();
        assert_ne!(a.train, other.train);
    }

    #[test]
    fn split_stratifies_balanced_corpus_for_seeds_1_to_100() {
        let c = corpus_with_counts([0, 50, 50, 0]);
        for seed in 1..=100 {
            let s = split_corpus(&c, (0.7, 0.1, 0.2), seed).unwrap();
            for (part, ratio) in [(&s.train, 0.7), (&s.dev, 0.1), (&s.test, 0.2)] {
                let pos = part.sentences.iter().filter(|x| x.label == Label4::Pos).count();
                let neg = part.len() - pos;
                for k in [pos, neg] {
                    assert!((k as f64 - ratio * 50.0).abs() <= 1.0, "seed {seed}: {k}");
                }
            }
        }
    }

    #[test]
    fn bad_ratios_rejected() {
        let c = corpus_with_counts([1, 1, 1, 1]);
        assert!(matches!(split_corpus(&c, (0.7, 0.2, 0.2), 1), Err(Error::Config(_))));
        let e = corpus_with_counts([0; 4]);
        assert!(split_corpus(&e, (0.7, 0.1, 0.2), 1).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        let token = ("[a-z]{1,6}", prop::sample::select(Upos::ALL.to_vec()));
        let sentence = (
            prop::sample::select(Label4::ALL.to_vec()),
            prop::collection::vec(token, 1..6),
        );
        prop::collection::vec(sentence, 0..40).prop_map(|items| {
            let sentences = items
                .into_iter()
                .enumerate()
                .map(|(i, (label, toks))| Sentence {
                    id: format!("s{i}"),
                    label,
                    tokens: toks.into_iter().map(|(w, p)| Token::new(w, p)).collect(),
                })
                .collect();
            Corpus::new("rand", "es", sentences).unwrap()
        })
    }

    proptest! {
        #[test]
        fn binary_stats_sum_four_class_pairwise(c in arb_corpus()) {
            let four = corpus_stats(&c, Task::FourClass);
            let two = corpus_stats(&c, Task::Binary);
            prop_assert_eq!(two.counts[0], four.counts[0] + four.counts[1]);
            prop_assert_eq!(two.counts[1], four.counts[2] + four.counts[3]);
            prop_assert_eq!(two.total, c.len());
        }

        #[test]
        fn save_then_load_is_identity(c in arb_corpus()) {
            let back = parse_corpus(&c.to_text(), "mem", "rand", "es").unwrap();
            prop_assert_eq!(back, c);
        }

        #[test]
        fn split_partitions_ids(c in arb_corpus(), seed in 0u64..1000) {
            prop_assume!(!c.is_empty());
            let s = split_corpus(&c, (0.7, 0.1, 0.2), seed).unwrap();
            let mut ids: Vec<&str> = s.train.sentences.iter()
                .chain(&s.dev.sentences)
                .chain(&s.test.sentences)
                .map(|x| x.id.as_str())
                .collect();
            prop_assert_eq!(ids.len(), c.len());
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), c.len());
            let n = c.len();
            prop_assert_eq!(s.train.len(), (0.7 * n as f64 + 1e-9).floor() as usize);
            prop_assert_eq!(s.dev.len(), (0.1 * n as f64 + 1e-9).floor() as usize);
            for (part, ratio) in [(&s.train, 0.7), (&s.dev, 0.1)] {
                for label in Label4::ALL {
                    let k = part.sentences.iter().filter(|x| x.label == label).count() as f64;
                    let total = c.sentences.iter().filter(|x| x.label == label).count() as f64;
                    prop_assert!((k - ratio * total).abs() < 1.0 + 1e-9);
                }
            }
        }
    }
}
