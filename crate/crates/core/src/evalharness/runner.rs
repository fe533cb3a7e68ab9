//! Executes an experiment plan: prepares embedding spaces, trains every
//! distinct model once, evaluates each cell on its transformed test data
//! and aggregates macro-F1 over seeds.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::analysis::{length_bucket_analysis, lexicon_coverage, pos_pair_stats, BucketResult, PosPairStats};
use super::config::{RunConfig, Setup, SplitConfig};
use super::metrics::{aggregate_seeds, macro_f1};
use crate::corpus::{load_corpus, split_corpus, Corpus, CorpusFormat, Split, Task};
use crate::embedding::{load_embeddings, EmbeddingTable};
use crate::error::{Error, Result};
use crate::models::{train_model, ClassifierConfig, ModelKind, TrainedModel};
use crate::projection::{apply_map, fit_orthogonal_map, load_dictionary, normalize_table, BilingualDictionary, FitStats};
use crate::rng::RNG_VERSION;
use crate::transform::{load_lexicon, load_rules, transform_corpus, RuleSet, SentimentLexicon, TransformKind, TransformSpec};

/// One (setup, language pair, task, transform, model, seed) run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub setup: Setup,
    pub pair: String,
    pub task: Task,
    pub transform: TransformKind,
    pub model: ModelKind,
    pub seed: u64,
}

impl ExperimentCell {
    /// `setup/pair/task/transform/model`, shared by all seeds of a cell.
    pub fn key(&self) -> String {
        format!(
            "{}/{}/{}/{}/{}",
            self.setup,
            self.pair,
            self.task.as_str(),
            self.transform.as_str(),
            self.model
        )
    }

    /// The report column the cell belongs to: everything but the transform.
    pub fn column(&self) -> String {
        format!("{}/{}/{}/{}", self.setup, self.pair, self.task.as_str(), self.model)
    }
}

/// The Cartesian plan of a config, restricted to admissible setup and
/// transform combinations. The SVM is deterministic and runs only with the
/// first seed.
pub fn plan(cfg: &RunConfig) -> Vec<ExperimentCell> {
    let mut cells = Vec::new();
    for &setup in &cfg.setups {
        for pair in &cfg.pairs {
            for &task in &cfg.tasks {
                for &transform in &cfg.transforms {
                    if !setup.admits(transform) {
                        continue;
                    }
                    for &model in &cfg.models {
                        let seeds = if model.is_neural() {
                            &cfg.seeds[..]
                        } else {
                            &cfg.seeds[..cfg.seeds.len().min(1)]
                        };
                        let seeds: &[u64] = if seeds.is_empty() { &[1] } else { seeds };
                        for &seed in seeds {
                            cells.push(ExperimentCell {
                                setup,
                                pair: pair.language.clone(),
                                task,
                                transform,
                                model,
                                seed,
                            });
                        }
                    }
                }
            }
        }
    }
    cells
}

pub struct SourceData {
    pub language: String,
    pub corpus: Corpus,
    pub embeddings: Option<EmbeddingTable>,
    pub lexicon: Option<SentimentLexicon>,
}

pub struct PairData {
    pub language: String,
    pub corpus: Corpus,
    pub embeddings: Option<EmbeddingTable>,
    pub dictionary: Option<BilingualDictionary>,
    pub lexicon: Option<SentimentLexicon>,
    pub rules: Option<RuleSet>,
    pub translated: Option<Corpus>,
}

/// All inputs of a matrix run, in memory.
pub struct Sources {
    pub source: SourceData,
    pub pairs: Vec<PairData>,
}

impl Sources {
    /// Loads whatever files the config names. Validate the config first to
    /// get every missing file reported at once.
    pub fn load(cfg: &RunConfig, base: &Path) -> Result<Self> {
        let fmt = CorpusFormat::Tagged;
        let exists = |p: &Path| base.join(p).is_file();
        let src = &cfg.source;
        let source = SourceData {
            language: src.language.clone(),
            corpus: if exists(&src.corpus) {
                load_corpus(&base.join(&src.corpus), fmt, &src.language)?
            } else {
                Corpus::new(src.language.clone(), src.language.clone(), Vec::new())?
            },
            embeddings: match exists(&src.embeddings) {
                true => Some(load_embeddings(&base.join(&src.embeddings))?),
                false => None,
            },
            lexicon: src
                .lexicon
                .as_ref()
                .map(|p| load_lexicon(&base.join(p), &src.language))
                .transpose()?,
        };
        let mut pairs = Vec::new();
        for p in &cfg.pairs {
            let lang = &p.language;
            pairs.push(PairData {
                language: lang.clone(),
                corpus: if exists(&p.corpus) {
                    load_corpus(&base.join(&p.corpus), fmt, lang)?
                } else {
                    Corpus::new(lang.clone(), lang.clone(), Vec::new())?
                },
                embeddings: p.embeddings.as_ref().map(|f| load_embeddings(&base.join(f))).transpose()?,
                dictionary: p.dictionary.as_ref().map(|f| load_dictionary(&base.join(f))).transpose()?,
                lexicon: p.lexicon.as_ref().map(|f| load_lexicon(&base.join(f), lang)).transpose()?,
                rules: p.rules.as_ref().map(|f| load_rules(&base.join(f))).transpose()?,
                translated: p
                    .translated
                    .as_ref()
                    .map(|f| load_corpus(&base.join(f), fmt, &src.language))
                    .transpose()?,
            });
        }
        Ok(Sources { source, pairs })
    }

    fn pair(&self, lang: &str) -> Result<&PairData> {
        self.pairs
            .iter()
            .find(|p| p.language == lang)
            .ok_or_else(|| Error::config(format!("no data for language pair '{lang}'")))
    }
}

#[derive(Clone, Debug)]
pub struct RunSettings {
    pub classifier: ClassifierConfig,
    pub split: SplitConfig,
    pub mean_center: bool,
    /// Number of worker threads for model training.
    pub jobs: usize,
}

impl RunSettings {
    pub fn from_config(cfg: &RunConfig, jobs: usize) -> Self {
        RunSettings {
            classifier: cfg.classifier.clone(),
            split: cfg.split.clone(),
            mean_center: cfg.mean_center,
            jobs: jobs.max(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub setup: Setup,
    pub pair: String,
    pub task: Task,
    pub transform: TransformKind,
    pub model: ModelKind,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over seeds; absent for the SVM.
    pub std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub selected_epoch: usize,
    pub dev_macro_f1: f64,
    pub svm_c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub noun_adj: PosPairStats,
    /// Share of target sentences with no lexicon word at all.
    pub fully_unked: Option<f64>,
    pub map: Option<FitStats>,
}

/// Everything a run produces except wall-clock times, so that reruns with
/// the same inputs serialize to identical bytes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rng: String,
    pub source_language: String,
    pub cells: BTreeMap<String, CellResult>,
    /// Best transform per `setup/pair/task/model` column.
    pub best: BTreeMap<String, TransformKind>,
    pub training: BTreeMap<String, TrainingSummary>,
    pub pairs: BTreeMap<String, PairSummary>,
    /// Keyed by `pair/task/model` for the BWE setup.
    pub length_buckets: BTreeMap<String, Vec<BucketResult>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub training_seconds: BTreeMap<String, f64>,
    pub evaluation_seconds: f64,
    pub total_seconds: f64,
}

pub struct Outcome {
    pub report: Report,
    pub timing: Timing,
}

/// Which data a model is trained on. Source models serve both the BWE and
/// the MT setups of every pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum TrainData {
    Source,
    Mono(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TrainKey {
    data: TrainData,
    task: Task,
    model: ModelKind,
    seed: u64,
}

impl TrainKey {
    fn of(cell: &ExperimentCell) -> Self {
        TrainKey {
            data: match cell.setup {
                Setup::Bwe | Setup::Mt => TrainData::Source,
                Setup::Mono => TrainData::Mono(cell.pair.clone()),
            },
            task: cell.task,
            model: cell.model,
            seed: if cell.model.is_neural() { cell.seed } else { 0 },
        }
    }

    fn name(&self) -> String {
        let data = match &self.data {
            TrainData::Source => "source".to_string(),
            TrainData::Mono(l) => format!("mono-{l}"),
        };
        format!("{data}/{}/{}/{}", self.task.as_str(), self.model, self.seed)
    }
}

struct Spaces {
    source_split: Option<Split>,
    source_space: Option<EmbeddingTable>,
    mapped: BTreeMap<String, (EmbeddingTable, FitStats)>,
    mono: BTreeMap<String, (Split, EmbeddingTable)>,
}

fn need<'a, T>(x: Option<&'a T>, what: &str) -> Result<&'a T> {
    x.ok_or_else(|| Error::config(format!("{what} is required by the plan")))
}

fn prepare(plan: &[ExperimentCell], sources: &Sources, settings: &RunSettings) -> Result<Spaces> {
    let setups: BTreeSet<(Setup, &str)> = plan.iter().map(|c| (c.setup, c.pair.as_str())).collect();
    let cross = setups.iter().any(|(s, _)| *s != Setup::Mono);
    let ratios = settings.split.ratios;
    let mut spaces = Spaces {
        source_split: None,
        source_space: None,
        mapped: BTreeMap::new(),
        mono: BTreeMap::new(),
    };
    if cross {
        spaces.source_split = Some(split_corpus(&sources.source.corpus, ratios, settings.split.seed)?);
        let emb = need(sources.source.embeddings.as_ref(), "source embeddings")?;
        spaces.source_space = Some(normalize_table(emb, settings.mean_center)?);
    }
    for (setup, lang) in setups {
        let pair = sources.pair(lang)?;
        match setup {
            Setup::Bwe if !spaces.mapped.contains_key(lang) => {
                let src = spaces.source_space.as_ref().expect("prepared above");
                let tgt = normalize_table(need(pair.embeddings.as_ref(), "target embeddings")?, settings.mean_center)?;
                let dict = need(pair.dictionary.as_ref(), "bilingual dictionary")?;
                let map = fit_orthogonal_map(src, &tgt, dict)?;
                log::info!(
                    "{} map: {} pairs used, {} skipped, residual {:.4}",
                    lang,
                    map.fit_stats.pairs_used,
                    map.fit_stats.pairs_skipped,
                    map.fit_stats.residual
                );
                let mapped = apply_map(&map, &tgt)?;
                spaces.mapped.insert(lang.to_string(), (mapped, map.fit_stats.clone()));
            }
            Setup::Mono if !spaces.mono.contains_key(lang) => {
                let split = split_corpus(&pair.corpus, ratios, settings.split.seed)?;
                let tgt = normalize_table(need(pair.embeddings.as_ref(), "target embeddings")?, settings.mean_center)?;
                spaces.mono.insert(lang.to_string(), (split, tgt));
            }
            _ => {}
        }
    }
    Ok(spaces)
}

fn train_all(
    keys: &[TrainKey],
    spaces: &Spaces,
    settings: &RunSettings,
) -> Result<(BTreeMap<TrainKey, TrainedModel>, BTreeMap<String, f64>)> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<(Result<TrainedModel>, f64)>>> = Mutex::new((0..keys.len()).map(|_| None).collect());
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= keys.len() {
            break;
        }
        let key = &keys[i];
        let started = Instant::now();
        let result = (|| {
            let (split, emb) = match &key.data {
                TrainData::Source => (
                    spaces.source_split.as_ref().expect("prepared"),
                    spaces.source_space.as_ref().expect("prepared"),
                ),
                TrainData::Mono(l) => {
                    let (s, e) = &spaces.mono[l];
                    (s, e)
                }
            };
            train_model(key.model, &split.train, &split.dev, emb, key.task, &settings.classifier, key.seed)
        })();
        let secs = started.elapsed().as_secs_f64();
        log::info!("trained {} in {secs:.1}s", key.name());
        slots.lock().expect("no poisoned lock")[i] = Some((result, secs));
    };
    let workers = settings.jobs.min(keys.len()).max(1);
    std::thread::scope(|s| {
        for _ in 1..workers {
            s.spawn(work);
        }
        work();
    });
    let mut models = BTreeMap::new();
    let mut times = BTreeMap::new();
    for (key, slot) in keys.iter().zip(slots.into_inner().expect("no poisoned lock")) {
        let (result, secs) = slot.expect("every job ran");
        models.insert(key.clone(), result?);
        times.insert(key.name(), secs);
    }
    Ok((models, times))
}

struct EvalInput<'a> {
    test: &'a Corpus,
    emb: &'a EmbeddingTable,
    lexicon: Option<&'a SentimentLexicon>,
    rules: Option<&'a RuleSet>,
}

fn eval_input<'a>(cell: &ExperimentCell, sources: &'a Sources, spaces: &'a Spaces) -> Result<EvalInput<'a>> {
    let pair = sources.pair(&cell.pair)?;
    Ok(match cell.setup {
        Setup::Bwe => EvalInput {
            test: &pair.corpus,
            emb: &spaces.mapped[&cell.pair].0,
            lexicon: pair.lexicon.as_ref(),
            rules: pair.rules.as_ref(),
        },
        Setup::Mt => EvalInput {
            test: need(pair.translated.as_ref(), "translated target corpus")?,
            emb: spaces.source_space.as_ref().expect("prepared"),
            lexicon: sources.source.lexicon.as_ref(),
            rules: None,
        },
        Setup::Mono => {
            let (split, emb) = &spaces.mono[&cell.pair];
            EvalInput {
                test: &split.test,
                emb,
                lexicon: pair.lexicon.as_ref(),
                rules: pair.rules.as_ref(),
            }
        }
    })
}

fn spec_for(cell: &ExperimentCell, input: &EvalInput) -> Result<TransformSpec> {
    let lex = || need(input.lexicon, "sentiment lexicon").cloned();
    Ok(match cell.transform {
        TransformKind::Original => TransformSpec::Original,
        TransformKind::Reordered => TransformSpec::Reordered(need(input.rules, "rule file")?.clone()),
        TransformKind::NounAdj => TransformSpec::NounAdj,
        TransformKind::Random => TransformSpec::Random { seed: cell.seed },
        TransformKind::OnlyLexicon => TransformSpec::OnlyLexicon(lex()?),
        TransformKind::NoLexicon => TransformSpec::NoLexicon(lex()?),
    })
}

/// Runs `plan` on in-memory `sources`. The report depends only on the plan
/// (as a set), the inputs and the settings, not on `jobs` or cell order.
pub fn run_matrix(plan: &[ExperimentCell], sources: &Sources, settings: &RunSettings) -> Result<Outcome> {
    let started = Instant::now();
    let mut report = Report {
        rng: RNG_VERSION.to_string(),
        source_language: sources.source.language.clone(),
        ..Report::default()
    };
    if plan.is_empty() {
        return Ok(Outcome {
            report,
            timing: Timing::default(),
        });
    }
    let cells: BTreeSet<ExperimentCell> = plan.iter().cloned().collect();
    let spaces = prepare(plan, sources, settings)?;
    let keys: Vec<TrainKey> = cells.iter().map(TrainKey::of).collect::<BTreeSet<_>>().into_iter().collect();
    let (models, training_seconds) = train_all(&keys, &spaces, settings)?;
    for (key, m) in &models {
        let dev = if m.kind().is_neural() {
            m.meta.dev_history[m.selected_epoch() - 1]
        } else {
            m.meta.dev_history.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        report.training.insert(
            key.name(),
            TrainingSummary {
                selected_epoch: m.selected_epoch(),
                dev_macro_f1: dev,
                svm_c: m.meta.svm_c,
            },
        );
    }

    let eval_started = Instant::now();
    let mut per_key: BTreeMap<String, Vec<(u64, f64)>> = BTreeMap::new();
    let mut predictions: BTreeMap<ExperimentCell, Vec<usize>> = BTreeMap::new();
    for cell in &cells {
        let input = eval_input(cell, sources, &spaces)?;
        if input.test.is_empty() {
            return Err(Error::Data(format!("test corpus for {} is empty", cell.key())));
        }
        let spec = spec_for(cell, &input)?;
        let test = transform_corpus(&spec, input.test);
        let model = &models[&TrainKey::of(cell)];
        let pred: Vec<usize> = model
            .predict_all(input.emb, &test)?
            .into_iter()
            .map(|p| p.label)
            .collect();
        let gold: Vec<usize> = test.sentences.iter().map(|s| cell.task.class_of(s.label)).collect();
        let f = macro_f1(&gold, &pred, cell.task.num_classes())?;
        per_key.entry(cell.key()).or_default().push((cell.seed, f));
        if cell.setup == Setup::Bwe && matches!(cell.transform, TransformKind::Original | TransformKind::Reordered) {
            predictions.insert(cell.clone(), pred);
        }
    }

    for cell in &cells {
        let key = cell.key();
        if report.cells.contains_key(&key) {
            continue;
        }
        let runs = &per_key[&key];
        let per_seed: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let (mean, std) = aggregate_seeds(&per_seed)?;
        report.cells.insert(
            key,
            CellResult {
                setup: cell.setup,
                pair: cell.pair.clone(),
                task: cell.task,
                transform: cell.transform,
                model: cell.model,
                seeds: runs.iter().map(|r| r.0).collect(),
                per_seed,
                mean,
                std: cell.model.is_neural().then_some(std),
            },
        );
    }
    report.best = best_transforms(&report.cells);
    report.length_buckets = length_buckets(&cells, &predictions, sources)?;

    for pair in &sources.pairs {
        if !cells.iter().any(|c| c.pair == pair.language) {
            continue;
        }
        report.pairs.insert(
            pair.language.clone(),
            PairSummary {
                noun_adj: pos_pair_stats(&pair.corpus),
                fully_unked: pair.lexicon.as_ref().map(|l| lexicon_coverage(&pair.corpus, l)),
                map: spaces.mapped.get(&pair.language).map(|m| m.1.clone()),
            },
        );
    }

    let timing = Timing {
        training_seconds,
        evaluation_seconds: eval_started.elapsed().as_secs_f64(),
        total_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(Outcome { report, timing })
}

/// Highest mean per column; ties go to Original, then to the earlier
/// transform in the canonical order.
pub fn best_transforms(cells: &BTreeMap<String, CellResult>) -> BTreeMap<String, TransformKind> {
    let mut best: BTreeMap<String, (f64, TransformKind)> = BTreeMap::new();
    for c in cells.values() {
        let col = format!("{}/{}/{}/{}", c.setup, c.pair, c.task.as_str(), c.model);
        let rank = |t: TransformKind| TransformKind::ALL.iter().position(|&x| x == t).expect("known kind");
        match best.get(&col) {
            Some(&(m, t)) if m > c.mean || (m == c.mean && rank(t) < rank(c.transform)) => {}
            _ => {
                best.insert(col, (c.mean, c.transform));
            }
        }
    }
    best.into_iter().map(|(k, (_, t))| (k, t)).collect()
}

fn length_buckets(
    cells: &BTreeSet<ExperimentCell>,
    predictions: &BTreeMap<ExperimentCell, Vec<usize>>,
    sources: &Sources,
) -> Result<BTreeMap<String, Vec<BucketResult>>> {
    let mut grouped: BTreeMap<String, Vec<Vec<BucketResult>>> = BTreeMap::new();
    for cell in cells.iter().filter(|c| c.setup == Setup::Bwe && c.transform == TransformKind::Original) {
        let twin = ExperimentCell {
            transform: TransformKind::Reordered,
            ..cell.clone()
        };
        let (Some(orig), Some(reord)) = (predictions.get(cell), predictions.get(&twin)) else {
            continue;
        };
        let test = &sources.pair(&cell.pair)?.corpus;
        let lengths: Vec<usize> = test.sentences.iter().map(|s| s.len()).collect();
        let gold: Vec<usize> = test.sentences.iter().map(|s| cell.task.class_of(s.label)).collect();
        let r = length_bucket_analysis(&lengths, &gold, orig, reord, cell.task.num_classes())?;
        let key = format!("{}/{}/{}", cell.pair, cell.task.as_str(), cell.model);
        grouped.entry(key).or_default().push(r);
    }
    // Average bucket scores across seeds; every seed shares the test set, so
    // the buckets line up.
    Ok(grouped
        .into_iter()
        .map(|(k, runs)| {
            let n = runs.len() as f64;
            let merged = runs[0]
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let avg = |f: fn(&BucketResult) -> f64| runs.iter().map(|r| f(&r[i])).sum::<f64>() / n;
                    let original = avg(|b| b.original);
                    let reordered = avg(|b| b.reordered);
                    BucketResult {
                        bucket: b.bucket,
                        sentences: b.sentences,
                        original,
                        reordered,
                        delta: reordered - original,
                    }
                })
                .collect();
            (k, merged)
        })
        .collect())
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One block per setup, pair and task: transforms as rows, models as
    /// columns, macro-F1 x 100 as `mean ±std`. `*` marks the best row of a
    /// column.
    pub fn to_table(&self) -> String {
        let mut blocks: BTreeMap<(Setup, String, Task), Vec<&CellResult>> = BTreeMap::new();
        for c in self.cells.values() {
            blocks.entry((c.setup, c.pair.clone(), c.task)).or_default().push(c);
        }
        let mut out = String::new();
        for ((setup, pair, task), cells) in blocks {
            let models: Vec<ModelKind> = ModelKind::ALL
                .into_iter()
                .filter(|m| cells.iter().any(|c| c.model == *m))
                .collect();
            let transforms: Vec<TransformKind> = TransformKind::ALL
                .into_iter()
                .filter(|t| cells.iter().any(|c| c.transform == *t))
                .collect();
            out.push_str(&format!("{} {} {}-{} ({})\n", setup.display_name(), pair, self.source_language, pair, task.as_str()));
            out.push_str(&format!("{:<14}", "transform"));
            for m in &models {
                out.push_str(&format!("{:>16}", m.display_name()));
            }
            out.push('\n');
            for t in &transforms {
                out.push_str(&format!("{:<14}", t.display_name()));
                for m in &models {
                    let cell = cells.iter().find(|c| c.transform == *t && c.model == *m);
                    let text = match cell {
                        None => "-".to_string(),
                        Some(c) => {
                            let col = format!("{setup}/{pair}/{}/{m}", task.as_str());
                            let star = if self.best.get(&col) == Some(t) { "*" } else { " " };
                            match c.std {
                                Some(s) => format!("{:.1} ±{:.1}{star}", c.mean * 100.0, s * 100.0),
                                None => format!("{:.1}{star}", c.mean * 100.0),
                            }
                        }
                    };
                    out.push_str(&format!("{text:>16}"));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        for (pair, s) in &self.pairs {
            out.push_str(&format!(
                "{pair}: {} NOUN ADJ bigrams ({:.1}% also seen as ADJ NOUN)",
                s.noun_adj.noun_adj, s.noun_adj.percent
            ));
            if let Some(f) = s.fully_unked {
                out.push_str(&format!(", {:.1}% of sentences fully UNK under Only-Lexicon", f * 100.0));
            }
            out.push('\n');
        }
        for (key, buckets) in &self.length_buckets {
            out.push_str(&format!("length buckets {key}:"));
            for b in buckets {
                out.push_str(&format!(
                    "  {} n={} {:.1}->{:.1} ({:+.1})",
                    b.bucket.as_str(),
                    b.sentences,
                    b.original * 100.0,
                    b.reordered * 100.0,
                    b.delta * 100.0
                ));
            }
            out.push('\n');
        }
        out
    }

    /// Writes `report.json`, `report.txt` and `timing.json` into `dir`.
    pub fn write(&self, timing: &Timing, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(p, e))
        };
        put("report.json", self.to_json())?;
        put("report.txt", self.to_table())?;
        put("timing.json", serde_json::to_string_pretty(timing).expect("timing serializes") + "\n")
    }
}
