//! Orthogonal bilingual mapping between two monolingual embedding spaces,
//! fitted in closed form from a seed dictionary.
//!
//! The fitted matrix `W` minimises `||XW - Y||_F` over orthogonal matrices,
//! where the rows of `X` and `Y` are the normalised source and target vectors
//! of the dictionary pairs. Classifiers are trained in the source space, so
//! [`apply_map`] moves *target* vectors into it with `y W^T`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilingualDictionary {
    pairs: Vec<(String, String)>,
}

impl BilingualDictionary {
    /// Deduplicates while keeping first-occurrence order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let pairs: Vec<_> = pairs.into_iter().filter(|p| seen.insert(p.clone())).collect();
        if pairs.is_empty() {
            return Err(Error::Data("bilingual dictionary is empty".into()));
        }
        Ok(BilingualDictionary { pairs })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.pairs.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn parse_dictionary(text: &str, source: &str) -> Result<BilingualDictionary> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(Error::parse(
                source,
                i + 1,
                format!("expected 'source<TAB>target', found {} fields", fields.len()),
            ));
        }
        pairs.push((fields[0].trim().to_string(), fields[1].trim().to_string()));
    }
    BilingualDictionary::from_pairs(pairs)
}

pub fn load_dictionary(path: &Path) -> Result<BilingualDictionary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dictionary(&text, &path.display().to_string())
}

fn unit_normalize(t: &mut EmbeddingTable) -> Result<()> {
    let words = t.words().to_vec();
    for (word, row) in words.iter().zip(t.rows_mut()) {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numeric(format!("zero-length vector for '{word}'")));
        }
        for x in row {
            *x /= norm;
        }
    }
    Ok(())
}

/// Per-dimension mean of all stored vectors.
fn center(t: &mut EmbeddingTable) {
    t.recompute_unk();
    let mean = t.unk_vector().to_vec();
    for row in t.rows_mut() {
        for (x, m) in row.iter_mut().zip(&mean) {
            *x -= m;
        }
    }
}

/// Length-normalises every vector, then (when `mean_center` is set)
/// subtracts the per-dimension vocabulary mean and length-normalises again.
/// The UNK vector is recomputed from the result.
pub fn normalize_table(t: &EmbeddingTable, mean_center: bool) -> Result<EmbeddingTable> {
    let mut out = t.clone();
    unit_normalize(&mut out)?;
    if mean_center {
        center(&mut out);
        unit_normalize(&mut out)?;
    }
    out.recompute_unk();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub pairs_used: usize,
    pub pairs_skipped: usize,
    /// `||XW - Y||_F` over the pairs used.
    pub residual: f64,
}

/// `dim x dim` orthogonal matrix taking source vectors to target vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMap {
    dim: usize,
    matrix: Vec<f64>,
    pub fit_stats: FitStats,
}

impl OrthogonalMap {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        OrthogonalMap {
            dim,
            matrix,
            fit_stats: FitStats {
                pairs_used: 0,
                pairs_skipped: 0,
                residual: 0.0,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    /// `max |W^T W - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let s: f64 = (0..d).map(|k| self.entry(k, i) * self.entry(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// `y W^T`: a target-space vector expressed in the source space.
    pub fn target_to_source(&self, y: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| dot(&self.matrix[i * self.dim..(i + 1) * self.dim], y))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header = serde_json::to_string(&self.fit_stats).expect("stats serialize");
        let _ = writeln!(out, "# {header}");
        let _ = writeln!(out, "{}", self.dim);
        for row in self.matrix.chunks_exact(self.dim) {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut stats = None;
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(h) = line.strip_prefix('#') {
                stats = Some(
                    serde_json::from_str(h.trim())
                        .map_err(|e| Error::parse(source, i + 1, format!("bad header: {e}")))?,
                );
            } else if !line.trim().is_empty() {
                lines.push((i + 1, line));
            }
        }
        let (first_line, first) = *lines
            .first()
            .ok_or_else(|| Error::parse(source, 1, "empty map file"))?;
        let dim: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::parse(source, first_line, "expected dimension"))?;
        if lines.len() != dim + 1 {
            return Err(Error::parse(
                source,
                first_line,
                format!("expected {dim} rows, found {}", lines.len() - 1),
            ));
        }
        let mut matrix = Vec::with_capacity(dim * dim);
        for &(lineno, line) in &lines[1..] {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse().map_err(|_| Error::parse(source, lineno, "bad number")))
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(Error::parse(source, lineno, format!("expected {dim} values")));
            }
            matrix.extend(row);
        }
        Ok(OrthogonalMap {
            dim,
            matrix,
            fit_stats: stats.ok_or_else(|| Error::parse(source, 1, "missing fit-stats header"))?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closed-form orthogonal Procrustes: `W = U V^T` for `X^T Y = U S V^T`.
/// Pairs with a word missing from either table are skipped; tables are used
/// as given, so normalise them first.
pub fn fit_orthogonal_map(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    dict: &BilingualDictionary,
) -> Result<OrthogonalMap> {
    if src.dim() != tgt.dim() {
        return Err(Error::Dim {
            expected: src.dim(),
            got: tgt.dim(),
        });
    }
    let d = src.dim();
    let usable: Vec<(&[f64], &[f64])> = dict
        .pairs()
        .iter()
        .filter_map(|(s, t)| Some((src.get(s)?, tgt.get(t)?)))
        .collect();
    let skipped = dict.len() - usable.len();
    if usable.len() < 2 {
        return Err(Error::Fit(format!(
            "{} usable dictionary pairs, at least 2 required",
            usable.len()
        )));
    }
    if usable.len() < d {
        log::warn!("only {} usable dictionary pairs for dimension {d}", usable.len());
    }

    let mut xty = DMatrix::<f64>::zeros(d, d);
    for (x, y) in &usable {
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                xty[(i, j)] += x[i] * y[j];
            }
        }
    }
    let svd = xty
        .try_svd(true, true, 1e-14, 10_000)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numeric("SVD returned no singular vectors".into())),
    };
    let w = u * v_t;

    let mut matrix = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            matrix.push(w[(i, j)]);
        }
    }
    let mut residual = 0.0;
    for (x, y) in &usable {
        for j in 0..d {
            let xw: f64 = (0..d).map(|i| x[i] * matrix[i * d + j]).sum();
            residual += (xw - y[j]).powi(2);
        }
    }
    Ok(OrthogonalMap {
        dim: d,
        matrix,
        fit_stats: FitStats {
            pairs_used: usable.len(),
            pairs_skipped: skipped,
            residual: residual.sqrt(),
        },
    })
}

/// Moves every vector of a target-language table into the source space.
pub fn apply_map(m: &OrthogonalMap, t: &EmbeddingTable) -> Result<EmbeddingTable> {
    if m.dim() != t.dim() {
        return Err(Error::Dim {
            expected: m.dim(),
            got: t.dim(),
        });
    }
    let mut out = t.clone();
    for row in out.rows_mut() {
        let mapped = m.target_to_source(row);
        row.copy_from_slice(&mapped);
    }
    out.recompute_unk();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub precision: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Precision@k of translation retrieval: for each held-out pair, whether the
/// gold target word is among the `k` mapped target vectors closest (by
/// cosine) to the source word's vector. Pairs with an OOV word are skipped.
pub fn translation_precision(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    m: &OrthogonalMap,
    heldout: &BilingualDictionary,
    k: usize,
) -> Result<PrecisionReport> {
    let mapped = apply_map(m, tgt)?;
    let norms: Vec<f64> = mapped
        .iter()
        .map(|(_, v)| dot(v, v).sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let mut hits = 0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for (s, t) in heldout.pairs() {
        let (Some(q), Some(_)) = (src.get(s), tgt.get(t)) else {
            skipped += 1;
            continue;
        };
        evaluated += 1;
        let qn = dot(q, q).sqrt().max(f64::MIN_POSITIVE);
        let mut scored: Vec<(f64, usize)> = mapped
            .iter()
            .zip(&norms)
            .enumerate()
            .map(|(i, ((_, v), n))| (dot(q, v) / (qn * n), i))
            .collect();
        let k = k.min(scored.len());
        if k == 0 {
            continue;
        }
        scored.select_nth_unstable_by(k - 1, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        if scored[..k].iter().any(|&(_, i)| mapped.words()[i] == *t) {
            hits += 1;
        }
    }
    if evaluated == 0 {
        return Err(Error::Data(
            "no held-out pair has both words in vocabulary".into(),
        ));
    }
    Ok(PrecisionReport {
        precision: hits as f64 / evaluated as f64,
        evaluated,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn random_table(seed: u64, n: usize, d: usize, prefix: &str) -> EmbeddingTable {
        let mut r = rng::stream(seed, "table");
        let rows = (0..n)
            .map(|i| {
                (
                    format!("{prefix}{i}"),
                    (0..d).map(|_| rng::normal(&mut r)).collect(),
                )
            })
            .collect();
        EmbeddingTable::from_rows(d, rows).unwrap()
    }

    /// Orthogonal matrix from Gram-Schmidt on a random Gaussian matrix.
    fn random_rotation(seed: u64, d: usize) -> Vec<f64> {
        let mut r = rng::stream(seed, "rotation");
        let m = DMatrix::<f64>::from_fn(d, d, |_, _| rng::normal(&mut r));
        let q = m.qr().q();
        (0..d * d).map(|k| q[(k / d, k % d)]).collect()
    }

    fn rotated(t: &EmbeddingTable, rot: &[f64], prefix: &str) -> EmbeddingTable {
        let d = t.dim();
        let rows = t
            .iter()
            .enumerate()
            .map(|(i, (_, x))| {
                let y = (0..d).map(|j| (0..d).map(|k| x[k] * rot[k * d + j]).sum()).collect();
                (format!("{prefix}{i}"), y)
            })
            .collect();
        EmbeddingTable::from_rows(d, rows).unwrap()
    }

    fn identity_dict(n: usize) -> BilingualDictionary {
        BilingualDictionary::from_pairs((0..n).map(|i| (format!("s{i}"), format!("t{i}")))).unwrap()
    }

    #[test]
    fn dictionary_parsing() {
        let d = parse_dictionary("a\tx\nb\ty\nc\tz\n", "m").unwrap();
        assert_eq!(d.len(), 3);
        let d = parse_dictionary("a\tx\na\tx\n", "m").unwrap();
        assert_eq!(d.len(), 1);
        assert!(parse_dictionary("", "m").is_err());
        assert!(matches!(parse_dictionary("a\tb\tc\n", "m"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn normalized_vectors_are_unit_and_centered() {
        let t = random_table(1, 40, 6, "w");
        let n = normalize_table(&t, true).unwrap();
        for (_, v) in n.iter() {
            assert!((dot(v, v).sqrt() - 1.0).abs() <= 1e-9);
        }
        let mut mid = t.clone();
        unit_normalize(&mut mid).unwrap();
        center(&mut mid);
        mid.recompute_unk();
        assert!(mid.unk_vector().iter().all(|m| m.abs() <= 1e-9));
    }

    #[test]
    fn second_normalization_changes_vectors_only_by_recentering() {
        let t = random_table(2, 30, 5, "w");
        let once = normalize_table(&t, true).unwrap();
        let twice = normalize_table(&once, true).unwrap();
        // once is already unit length, so the second pass is centre + renormalise.
        let mut expected = once.clone();
        center(&mut expected);
        unit_normalize(&mut expected).unwrap();
        for ((_, a), (_, b)) in twice.iter().zip(expected.iter()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
        assert_ne!(once, twice);
    }

    #[test]
    fn zero_vector_named() {
        let t = EmbeddingTable::from_rows(2, vec![("ok".into(), vec![1.0, 0.0]), ("nil".into(), vec![0.0, 0.0])]).unwrap();
        let err = normalize_table(&t, true).unwrap_err();
        assert!(err.to_string().contains("nil"));
    }

    #[test]
    fn recovers_random_rotation() {
        let d = 20;
        let src = random_table(3, 200, d, "s");
        let rot = random_rotation(4, d);
        let tgt = rotated(&src, &rot, "t");
        let m = fit_orthogonal_map(&src, &tgt, &identity_dict(200)).unwrap();
        for k in 0..d * d {
            assert!((m.matrix()[k] - rot[k]).abs() <= 1e-4);
        }
        assert!(m.orthogonality_error() <= 1e-6);
        assert!(m.fit_stats.residual < 1e-8);
        assert_eq!(m.fit_stats.pairs_used, 200);
    }

    #[test]
    fn identical_spaces_give_identity() {
        let src = random_table(5, 50, 8, "s");
        let tgt = rotated(&src, &OrthogonalMap::identity(8).matrix, "t");
        let m = fit_orthogonal_map(&src, &tgt, &identity_dict(50)).unwrap();
        let id = OrthogonalMap::identity(8);
        for (a, b) in m.matrix().iter().zip(id.matrix()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn fit_is_deterministic_and_skips_oov() {
        let src = random_table(6, 30, 4, "s");
        let tgt = rotated(&src, &random_rotation(7, 4), "t");
        let mut pairs: Vec<_> = identity_dict(30).pairs().to_vec();
        pairs.push(("nope".into(), "t1".into()));
        let dict = BilingualDictionary::from_pairs(pairs).unwrap();
        let a = fit_orthogonal_map(&src, &tgt, &dict).unwrap();
        let b = fit_orthogonal_map(&src, &tgt, &dict).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fit_stats.pairs_skipped, 1);
    }

    #[test]
    fn too_few_pairs_is_fit_error() {
        let src = random_table(6, 3, 4, "s");
        let tgt = random_table(7, 3, 4, "t");
        let dict = BilingualDictionary::from_pairs([("s0".into(), "t0".into()), ("s9".into(), "t1".into())]).unwrap();
        assert!(matches!(fit_orthogonal_map(&src, &tgt, &dict), Err(Error::Fit(_))));
    }

    #[test]
    fn apply_map_identity_and_dim_check() {
        let t = random_table(8, 10, 3, "w");
        assert_eq!(apply_map(&OrthogonalMap::identity(3), &t).unwrap(), t);
        assert!(matches!(apply_map(&OrthogonalMap::identity(4), &t), Err(Error::Dim { .. })));
    }

    #[test]
    fn apply_map_preserves_norms_and_cosines() {
        let d = 10;
        let t = random_table(9, 100, d, "w");
        let mut m = OrthogonalMap::identity(d);
        m.matrix = random_rotation(10, d);
        let mapped = apply_map(&m, &t).unwrap();
        for ((_, a), (_, b)) in t.iter().zip(mapped.iter()) {
            assert!((dot(a, a).sqrt() - dot(b, b).sqrt()).abs() <= 1e-9);
        }
        let mut r = rng::stream(11, "pairs");
        let cos = |x: &[f64], y: &[f64]| dot(x, y) / (dot(x, x) * dot(y, y)).sqrt();
        for _ in 0..1000 {
            let (i, j) = (rng::below(&mut r, 100), rng::below(&mut r, 100));
            let before = cos(t.row(i), t.row(j));
            let after = cos(mapped.row(i), mapped.row(j));
            assert!((before - after).abs() <= 1e-9);
        }
    }

    #[test]
    fn precision_on_exact_rotation() {
        let d = 10;
        let src = random_table(12, 120, d, "s");
        let tgt = rotated(&src, &random_rotation(13, d), "t");
        let train = BilingualDictionary::from_pairs((0..60).map(|i| (format!("s{i}"), format!("t{i}")))).unwrap();
        let held = BilingualDictionary::from_pairs((60..120).map(|i| (format!("s{i}"), format!("t{i}")))).unwrap();
        let m = fit_orthogonal_map(&src, &tgt, &train).unwrap();
        let p = translation_precision(&src, &tgt, &m, &held, 1).unwrap();
        assert_eq!(p.precision, 1.0);
        assert_eq!(p.evaluated, 60);

        let wrong = OrthogonalMap::identity(d);
        let all = translation_precision(&src, &tgt, &wrong, &held, 1000).unwrap();
        assert_eq!(all.precision, 1.0);

        let oov = BilingualDictionary::from_pairs([("zz".into(), "yy".into())]).unwrap();
        assert!(translation_precision(&src, &tgt, &m, &oov, 1).is_err());
    }

    #[test]
    fn map_file_round_trip() {
        let src = random_table(14, 30, 4, "s");
        let tgt = rotated(&src, &random_rotation(15, 4), "t");
        let m = fit_orthogonal_map(&src, &tgt, &identity_dict(30)).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("# {"));
        assert_eq!(OrthogonalMap::parse(&text, "m").unwrap(), m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn fitted_maps_are_orthogonal(seed in 0u64..1_000_000, d in 2usize..12) {
            let src = random_table(seed, 3 * d, d, "s");
            let tgt = random_table(seed.wrapping_add(1), 3 * d, d, "t");
            let m = fit_orthogonal_map(&src, &tgt, &identity_dict(3 * d)).unwrap();
            prop_assert!(m.orthogonality_error() <= 1e-6);
        }
    }
}
