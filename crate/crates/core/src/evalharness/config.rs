//! Declarative description of an experiment matrix, read from JSON.
//!
//! Relative paths are resolved against the directory holding the config.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Task;
use crate::error::{Error, Result};
use crate::models::{ClassifierConfig, ModelKind};
use crate::transform::TransformKind;

/// How the classifier meets target-language data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    /// Source-trained model on target vectors mapped into the source space.
    Bwe,
    /// Source-trained model on target data translated into the source language.
    Mt,
    /// Model trained and tested on target data.
    Mono,
}

impl Setup {
    pub const ALL: [Setup; 3] = [Setup::Bwe, Setup::Mt, Setup::Mono];

    pub fn as_str(self) -> &'static str {
        match self {
            Setup::Bwe => "bwe",
            Setup::Mt => "mt",
            Setup::Mono => "mono",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Setup::Bwe => "BWE",
            Setup::Mt => "MT",
            Setup::Mono => "Mono",
        }
    }

    /// Only the bilingual-embedding setup is tested with reorderings that
    /// need target-language syntax.
    pub fn admits(self, t: TransformKind) -> bool {
        match self {
            Setup::Bwe => true,
            Setup::Mt | Setup::Mono => matches!(
                t,
                TransformKind::Original
                    | TransformKind::Random
                    | TransformKind::OnlyLexicon
                    | TransformKind::NoLexicon
            ),
        }
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setup::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown setup '{s}' (expected bwe, mt or mono)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub language: String,
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    /// Needed by the lexicon transforms in the MT setup.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub language: String,
    pub corpus: PathBuf,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    /// Source-to-target word pairs for fitting the map.
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    /// The target corpus translated into the source language, ids kept.
    #[serde(default)]
    pub translated: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: (0.7, 0.1, 0.2),
            seed: 1,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub source: SourceConfig,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    #[serde(default)]
    pub setups: Vec<Setup>,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub transforms: Vec<TransformKind>,
    #[serde(default)]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub split: SplitConfig,
    /// Mean-center embeddings between the two unit-length normalizations.
    #[serde(default = "default_true")]
    pub mean_center: bool,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(source, e.line(), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    fn needs(&self, setup: Setup) -> bool {
        self.setups.contains(&setup) && !self.models.is_empty() && !self.tasks.is_empty()
    }

    fn wants(&self, setup: Setup, t: TransformKind) -> bool {
        self.needs(setup) && self.transforms.contains(&t)
    }

    /// Every problem with the config and the files it references, at once.
    pub fn validate(&self, base: &Path) -> Result<()> {
        let mut errs = self.classifier.validate();
        let (a, b, c) = self.split.ratios;
        if (a + b + c - 1.0).abs() > 1e-9 || a <= 0.0 || b < 0.0 || c < 0.0 {
            errs.push(format!("split.ratios must be non-negative and sum to 1, got ({a}, {b}, {c})"));
        }
        if self.seeds.is_empty() && self.models.iter().any(|m| m.is_neural()) {
            errs.push("seeds must not be empty".to_string());
        }
        let mut seen = BTreeMap::new();
        for (i, p) in self.pairs.iter().enumerate() {
            if let Some(j) = seen.insert(p.language.clone(), i) {
                errs.push(format!("pairs[{j}] and pairs[{i}] both target '{}'", p.language));
            }
            if p.language == self.source.language {
                errs.push(format!("pairs[{i}] targets the source language '{}'", p.language));
            }
        }
        if self.pairs.is_empty() && !self.models.is_empty() && !self.tasks.is_empty() && !self.setups.is_empty() {
            errs.push("no language pairs configured".to_string());
        }

        let mut file = |what: String, p: Option<&PathBuf>| match p {
            None => errs.push(format!("{what} is required by the requested cells")),
            Some(p) => {
                let full = base.join(p);
                if !full.is_file() {
                    errs.push(format!("{what}: file not found: {}", full.display()));
                }
            }
        };
        let planned = !self.models.is_empty() && !self.tasks.is_empty() && !self.setups.is_empty();
        if planned {
            file("source.corpus".into(), Some(&self.source.corpus));
        }
        if self.needs(Setup::Bwe) || self.needs(Setup::Mt) {
            file("source.embeddings".into(), Some(&self.source.embeddings));
        }
        let lex_transforms = [TransformKind::OnlyLexicon, TransformKind::NoLexicon];
        if lex_transforms.iter().any(|&t| self.wants(Setup::Mt, t)) {
            file("source.lexicon".into(), self.source.lexicon.as_ref());
        }
        for (i, p) in self.pairs.iter().enumerate() {
            let name = |f: &str| format!("pairs[{i}] ({}).{f}", p.language);
            if self.needs(Setup::Bwe) || self.needs(Setup::Mono) {
                file(name("corpus"), Some(&p.corpus));
                file(name("embeddings"), p.embeddings.as_ref());
            }
            if self.needs(Setup::Bwe) {
                file(name("dictionary"), p.dictionary.as_ref());
            }
            if self.needs(Setup::Mt) {
                file(name("translated"), p.translated.as_ref());
            }
            if self.wants(Setup::Bwe, TransformKind::Reordered) {
                file(name("rules"), p.rules.as_ref());
            }
            if lex_transforms
                .iter()
                .any(|&t| self.wants(Setup::Bwe, t) || self.wants(Setup::Mono, t))
            {
                file(name("lexicon"), p.lexicon.as_ref());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"output_dir": "out", "source": {"language": "en", "corpus": "en.conll", "embeddings": "en.vec"}}"#;

    #[test]
    fn minimal_config_is_an_empty_plan() {
        let c = RunConfig::parse(MINIMAL, "run.json").unwrap();
        assert_eq!(c.seeds, vec![1, 2, 3, 4, 5]);
        assert!(c.mean_center);
        c.validate(Path::new("/nonexistent")).unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"output_dir\"", "\"colour\": 1, \"output_dir\"");
        assert!(matches!(RunConfig::parse(&text, "run.json"), Err(Error::Parse { .. })));
        let text = MINIMAL.replace("\"corpus\"", "\"corpse\": \"x\", \"corpus\"");
        assert!(RunConfig::parse(&text, "run.json").is_err());
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut c = RunConfig::parse(MINIMAL, "run.json").unwrap();
        c.setups = vec![Setup::Bwe, Setup::Mt];
        c.tasks = vec![Task::Binary];
        c.models = vec![ModelKind::Svm];
        c.transforms = vec![TransformKind::Reordered, TransformKind::OnlyLexicon];
        c.split.ratios = (0.5, 0.5, 0.5);
        c.pairs.push(PairConfig {
            language: "es".into(),
            corpus: "es.conll".into(),
            embeddings: None,
            dictionary: None,
            lexicon: None,
            rules: None,
            translated: None,
        });
        match c.validate(Path::new("/nonexistent")) {
            Err(Error::Config(errs)) => {
                let joined = errs.join("\n");
                for needle in ["split.ratios", "source.corpus", "source.embeddings", "source.lexicon", "embeddings", "dictionary", "translated", "rules", "lexicon"] {
                    assert!(joined.contains(needle), "missing {needle} in {joined}");
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn admissible_transforms() {
        assert!(Setup::Bwe.admits(TransformKind::Reordered));
        assert!(!Setup::Mt.admits(TransformKind::Reordered));
        assert!(!Setup::Mono.admits(TransformKind::NounAdj));
        assert!(Setup::Mono.admits(TransformKind::Random));
    }
}
