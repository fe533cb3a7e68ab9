//! Word-embedding tables in word2vec text format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::nnkernel::Tensor;

/// Placeholder surface produced by the lexicon filters.
pub const UNK: &str = "UNK";

/// Word vectors of a fixed dimension with a mean-vector fallback for
/// out-of-vocabulary words.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    unk: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` rows; the UNK vector is the
    /// componentwise mean of all rows.
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("embedding dimension must be positive".into()));
        }
        let mut words = Vec::with_capacity(rows.len());
        let mut index = HashMap::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (word, v) in rows {
            if v.len() != dim {
                return Err(Error::Dim {
                    expected: dim,
                    got: v.len(),
                });
            }
            if index.insert(word.clone(), words.len()).is_some() {
                return Err(Error::Data(format!("duplicate embedding word '{word}'")));
            }
            words.push(word);
            data.extend(v);
        }
        let mut table = EmbeddingTable {
            dim,
            words,
            index,
            data,
            unk: vec![0.0; dim],
        };
        table.recompute_unk();
        Ok(table)
    }

    pub(crate) fn recompute_unk(&mut self) {
        let n = self.words.len();
        let mut mean = vec![0.0; self.dim];
        if n > 0 {
            for row in self.data.chunks_exact(self.dim) {
                for (m, x) in mean.iter_mut().zip(row) {
                    *m += x;
                }
            }
            for m in &mut mean {
                *m /= n as f64;
            }
        }
        self.unk = mean;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn unk_vector(&self) -> &[f64] {
        &self.unk
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Exact-match vector, no casing fallback and no UNK.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.dim)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    /// Vector for a token surface: the lowercased form if present, else the
    /// surface as written, else the UNK vector. The literal `UNK` always
    /// yields the UNK vector.
    pub fn lookup(&self, word: &str) -> &[f64] {
        if word == UNK {
            return &self.unk;
        }
        let lower = word.to_lowercase();
        self.get(&lower)
            .or_else(|| self.get(word))
            .unwrap_or(&self.unk)
    }

    /// `n x dim` matrix of token vectors in sentence order.
    pub fn sentence_matrix(&self, s: &Sentence) -> Tensor {
        let mut data = Vec::with_capacity(s.len() * self.dim);
        for t in &s.tokens {
            data.extend_from_slice(self.lookup(&t.surface));
        }
        Tensor::from_vec(vec![s.len(), self.dim], data)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (w, v) in self.iter() {
            out.push_str(w);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text, &path.display().to_string())
}

/// Parses word2vec text. A missing `<count> <dim>` header is tolerated, in
/// which case the dimension is taken from the first row.
pub fn parse_embeddings(text: &str, source: &str) -> Result<EmbeddingTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let mut expected_count = None;
    let mut dim = None;
    if let Some(&(_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split_whitespace().collect();
        if fields.len() == 2 {
            if let (Ok(count), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                expected_count = Some(count);
                dim = Some(d);
                lines.next();
            }
        }
        if dim.is_none() {
            log::warn!("{source}: no word2vec header, inferring dimension from the first row");
        }
    }

    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::parse(source, lineno, "empty row"))?;
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(source, lineno, format!("bad number '{f}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let d = *dim.get_or_insert(values.len());
        if values.len() != d {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected {d} values, found {}", values.len()),
            ));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(source, lineno, "non-finite value"));
        }
        rows.push((word.to_string(), values));
    }
    if let Some(count) = expected_count {
        if count != rows.len() {
            return Err(Error::parse(
                source,
                1,
                format!("header announces {count} rows, found {}", rows.len()),
            ));
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(source, 1, "no embedding rows"))?;
    EmbeddingTable::from_rows(dim, rows).map_err(|e| match e {
        Error::Data(msg) => Error::parse(source, 0, msg),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label4, Token, Upos};

    fn small() -> EmbeddingTable {
        parse_embeddings("2 3\na 1 0 0\nb 0 1 0\n", "mem").unwrap()
    }

    fn sentence(words: &[&str]) -> Sentence {
        Sentence {
            id: "s".into(),
            label: Label4::Pos,
            tokens: words.iter().map(|w| Token::new(*w, Upos::X)).collect(),
        }
    }

    #[test]
    fn unk_is_mean() {
        let t = small();
        assert_eq!(t.unk_vector(), &[0.5, 0.5, 0.0]);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn lookup_present_absent_and_literal_unk() {
        let mut rows = vec![("a".to_string(), vec![1.0, 0.0, 0.0])];
        rows.push(("UNK".to_string(), vec![9.0, 9.0, 9.0]));
        let t = EmbeddingTable::from_rows(3, rows).unwrap();
        assert_eq!(t.lookup("a"), &[1.0, 0.0, 0.0]);
        assert_eq!(t.lookup("zzz"), t.unk_vector());
        assert_eq!(t.lookup("UNK"), t.unk_vector());
    }

    #[test]
    fn lookup_prefers_lowercase_then_original() {
        let t = EmbeddingTable::from_rows(
            1,
            vec![("hotel".into(), vec![1.0]), ("Madrid".into(), vec![2.0])],
        )
        .unwrap();
        assert_eq!(t.lookup("Hotel"), &[1.0]);
        assert_eq!(t.lookup("Madrid"), &[2.0]);
    }

    #[test]
    fn short_row_names_line() {
        let err = parse_embeddings("2 3\na 1 0 0\nb 0 1\n", "f.vec").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_word_rejected() {
        assert!(parse_embeddings("2 1\na 1\na 2\n", "m").is_err());
    }

    #[test]
    fn headerless_file_infers_dim() {
        let t = parse_embeddings("a 1 2\nb 3 4\n", "m").unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.lookup("b"), &[3.0, 4.0]);
    }

    #[test]
    fn sentence_matrix_rows() {
        let t = small();
        let one = t.sentence_matrix(&sentence(&["a"]));
        assert_eq!(one.shape(), &[1, 3]);
        assert_eq!(one.data(), t.lookup("a"));

        let unk = t.sentence_matrix(&sentence(&["x", "y", "UNK"]));
        assert_eq!(unk.shape(), &[3, 3]);
        for r in 0..3 {
            assert_eq!(unk.row(r), t.unk_vector());
        }

        let words = ["b", "q", "A", "a"];
        let m = t.sentence_matrix(&sentence(&words));
        for (r, w) in words.iter().enumerate() {
            assert_eq!(m.row(r), t.lookup(w));
        }
    }

    #[test]
    fn text_round_trip() {
        let t = EmbeddingTable::from_rows(
            2,
            vec![("x".into(), vec![0.1, -1e-7]), ("y".into(), vec![1.0 / 3.0, 2.5])],
        )
        .unwrap();
        assert_eq!(parse_embeddings(&t.to_text(), "m").unwrap(), t);
    }
}
