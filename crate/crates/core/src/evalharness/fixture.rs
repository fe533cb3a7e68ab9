//! Writes a generated task to disk as a self-contained experiment directory.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{PairConfig, RunConfig, Setup, SourceConfig, SplitConfig};
use serde::{Deserialize, Serialize};

use crate::corpus::{generate_synthetic_task, Corpus, SyntheticConfig, SyntheticTask, Task};
use crate::error::{Error, Result};
use crate::models::{ClassifierConfig, ModelKind};
use crate::transform::{extract_rules, Alignment, ExtractConfig, RuleSet, TransformKind};

/// How a generated task is cut up on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureOptions {
    /// Leading sentence pairs used as the source training corpus and as
    /// parallel data for rule extraction. The rest become the target corpus.
    pub n_source: usize,
    pub seeds: Vec<u64>,
    pub classifier: ClassifierConfig,
    pub rules: ExtractConfig,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            n_source: 500,
            seeds: vec![1, 2, 3, 4, 5],
            classifier: ClassifierConfig::default(),
            rules: ExtractConfig::default(),
        }
    }
}

/// A generator config plus fixture layout, as read by `synth`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub task: SyntheticConfig,
    pub fixture: FixtureOptions,
}

impl SynthSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))
    }

    /// Generates the task and writes the fixture into `dir`.
    pub fn materialize(&self, dir: &Path) -> Result<RunConfig> {
        let task = generate_synthetic_task(&self.task)?;
        write_synthetic_fixture(&task, dir, &self.fixture)
    }
}

/// Rules that reorder the target side into source order, learnt from the
/// given sentence pairs.
pub fn target_rules(task: &SyntheticTask, range: std::ops::Range<usize>, cfg: &ExtractConfig) -> Result<RuleSet> {
    let tgt = &task.target.sentences[range.clone()];
    let inverted: Vec<Alignment> = task.alignments[range.clone()].iter().map(Alignment::inverted).collect();
    let lens: Vec<usize> = task.source.sentences[range].iter().map(|s| s.len()).collect();
    extract_rules(tgt, Some(&lens), &inverted, cfg)
}

fn sub(c: &Corpus, range: std::ops::Range<usize>, name: &str, language: &str) -> Result<Corpus> {
    Corpus::new(name, language, c.sentences[range].to_vec())
}

/// Writes corpora, embeddings, dictionary, lexicons, alignments, rules and
/// a `run.json` covering the full matrix. Returns the config as written.
pub fn write_synthetic_fixture(task: &SyntheticTask, dir: &Path, opts: &FixtureOptions) -> Result<RunConfig> {
    let n = task.source.len();
    if opts.n_source == 0 || opts.n_source >= n {
        return Err(Error::config(format!(
            "n_source must lie in 1..{n}, got {}",
            opts.n_source
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sl = task.source.language.clone();
    let tl = task.target.language.clone();
    let file = |name: &str| PathBuf::from(name);
    let write = |name: &PathBuf, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(p, e))
    };

    let train = 0..opts.n_source;
    let rest = opts.n_source..n;
    let src_corpus = file(&format!("{sl}.conll"));
    let tgt_corpus = file(&format!("{tl}.conll"));
    let translated = file(&format!("{tl}.translated.conll"));
    write(&src_corpus, sub(&task.source, train.clone(), &task.source.name, &sl)?.to_text())?;
    write(&tgt_corpus, sub(&task.target, rest.clone(), &task.target.name, &tl)?.to_text())?;
    write(&translated, sub(&task.source, rest, &format!("{}.translated", task.target.name), &sl)?.to_text())?;

    let parallel_src = file(&format!("parallel.{sl}.conll"));
    let parallel_tgt = file(&format!("parallel.{tl}.conll"));
    write(&parallel_src, sub(&task.source, train.clone(), "parallel", &sl)?.to_text())?;
    write(&parallel_tgt, sub(&task.target, train.clone(), "parallel", &tl)?.to_text())?;
    let lines = |al: &mut dyn Iterator<Item = Alignment>| al.map(|a| a.to_line() + "\n").collect::<String>();
    write(
        &file(&format!("parallel.{sl}-{tl}.align")),
        lines(&mut task.alignments[train.clone()].iter().cloned()),
    )?;
    write(
        &file(&format!("parallel.{tl}-{sl}.align")),
        lines(&mut task.alignments[train.clone()].iter().map(Alignment::inverted)),
    )?;

    let rules = file(&format!("{tl}.rules"));
    write(&rules, target_rules(task, train, &opts.rules)?.to_text())?;

    let src_vec = file(&format!("{sl}.vec"));
    let tgt_vec = file(&format!("{tl}.vec"));
    write(&src_vec, task.source_embeddings.to_text())?;
    write(&tgt_vec, task.target_embeddings.to_text())?;
    let dict = file(&format!("{sl}-{tl}.dict"));
    write(&dict, task.dictionary.to_text())?;
    let src_lex = file(&format!("{sl}.lex"));
    let tgt_lex = file(&format!("{tl}.lex"));
    write(&src_lex, task.source_lexicon.to_text())?;
    write(&tgt_lex, task.target_lexicon.to_text())?;

    let cfg = RunConfig {
        output_dir: PathBuf::from("out"),
        source: SourceConfig {
            language: sl,
            corpus: src_corpus,
            embeddings: src_vec,
            lexicon: Some(src_lex),
        },
        pairs: vec![PairConfig {
            language: tl,
            corpus: tgt_corpus,
            embeddings: Some(tgt_vec),
            dictionary: Some(dict),
            lexicon: Some(tgt_lex),
            rules: Some(rules),
            translated: Some(translated),
        }],
        setups: Setup::ALL.to_vec(),
        tasks: vec![Task::Binary, Task::FourClass],
        transforms: TransformKind::ALL.to_vec(),
        models: ModelKind::ALL.to_vec(),
        seeds: opts.seeds.clone(),
        split: SplitConfig::default(),
        mean_center: true,
        classifier: opts.classifier.clone(),
    };
    write(&PathBuf::from("run.json"), cfg.to_json())?;
    Ok(cfg)
}
