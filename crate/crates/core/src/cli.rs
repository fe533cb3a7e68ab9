//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{corpus_stats, load_corpus, CorpusFormat, Task};
use crate::embedding::load_embeddings;
use crate::error::{Error, Result};
use crate::evalharness::{
    lexicon_coverage, plan, pos_pair_stats, run_matrix, RunConfig, RunSettings, Sources, SynthSpec,
};
use crate::projection::{fit_orthogonal_map, load_dictionary, normalize_table, translation_precision};
use crate::transform::{
    extract_rules, load_alignments, load_lexicon, load_rules, save_rules, transform_corpus, ExtractConfig,
    TransformKind, TransformSpec,
};

#[derive(Debug, Parser)]
#[command(name = "wordorder", version, about = "Cross-lingual sentiment word-order experiments")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an orthogonal map between two embedding spaces.
    Project(ProjectArgs),
    /// Rewrite a corpus under one of the test-time transforms.
    Transform(TransformArgs),
    /// Learn POS reordering rules from aligned parallel text.
    ExtractRules(ExtractArgs),
    /// Execute an experiment matrix described by a JSON config.
    Run(RunArgs),
    /// Print label counts and corpus statistics.
    Stats(StatsArgs),
    /// Generate a synthetic experiment directory.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub src_emb: PathBuf,
    #[arg(long)]
    pub tgt_emb: PathBuf,
    /// Source-target word pairs used for fitting.
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip mean-centering between the two normalizations.
    #[arg(long)]
    pub no_center: bool,
    /// Dictionary of held-out pairs for precision@1.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub kind: TransformKind,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// The side to be reordered, then the side whose order is learnt.
    #[arg(long, num_args = 2, value_names = ["FROM", "TO"])]
    pub parallel: Vec<PathBuf>,
    /// One Pharaoh line per sentence pair, FROM index first.
    #[arg(long)]
    pub align: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    #[arg(long, default_value_t = 0.0)]
    pub min_prob: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// List the planned cells and exit.
    #[arg(long)]
    pub dry_run: bool,
    /// Worker threads for model training.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Restrict label counts to one task.
    #[arg(long, value_parser = parse_task)]
    pub task: Option<Task>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator and fixture settings; defaults when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_kind(s: &str) -> std::result::Result<TransformKind, String> {
    s.parse::<TransformKind>().map_err(|e| e.to_string())
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse::<Task>().map_err(|e| e.to_string())
}

fn language_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.split('.').next())
        .unwrap_or("xx")
        .to_string()
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Project(a) => cmd_project(&a),
        Command::Transform(a) => cmd_transform(&a),
        Command::ExtractRules(a) => cmd_extract_rules(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

pub fn cmd_project(a: &ProjectArgs) -> Result<()> {
    let center = !a.no_center;
    let src = normalize_table(&load_embeddings(&a.src_emb)?, center)?;
    let tgt = normalize_table(&load_embeddings(&a.tgt_emb)?, center)?;
    let dict = load_dictionary(&a.dict)?;
    let map = fit_orthogonal_map(&src, &tgt, &dict)?;
    map.save(&a.out)?;
    println!(
        "pairs used: {}  skipped: {}  residual: {:.6}",
        map.fit_stats.pairs_used, map.fit_stats.pairs_skipped, map.fit_stats.residual
    );
    if let Some(h) = &a.heldout {
        let held = load_dictionary(h)?;
        let p = translation_precision(&src, &tgt, &map, &held, 1)?;
        println!("P@1: {:.4} ({} evaluated, {} skipped)", p.precision, p.evaluated, p.skipped);
    }
    Ok(())
}

pub fn cmd_transform(a: &TransformArgs) -> Result<()> {
    let lang = language_of(&a.input);
    let corpus = load_corpus(&a.input, CorpusFormat::Tagged, &lang)?;
    let usage = |flag: &str| Error::config(format!("--kind {} requires {flag}", a.kind.as_str()));
    let lexicon = || match &a.lexicon {
        Some(p) => load_lexicon(p, &lang),
        None => Err(usage("--lexicon")),
    };
    let spec = match a.kind {
        TransformKind::Original => TransformSpec::Original,
        TransformKind::Reordered => match &a.rules {
            Some(p) => TransformSpec::Reordered(load_rules(p)?),
            None => return Err(usage("--rules")),
        },
        TransformKind::NounAdj => TransformSpec::NounAdj,
        TransformKind::Random => TransformSpec::Random { seed: a.seed },
        TransformKind::OnlyLexicon => TransformSpec::OnlyLexicon(lexicon()?),
        TransformKind::NoLexicon => TransformSpec::NoLexicon(lexicon()?),
    };
    transform_corpus(&spec, &corpus).save(&a.out)
}

pub fn cmd_extract_rules(a: &ExtractArgs) -> Result<()> {
    let (from, to) = (&a.parallel[0], &a.parallel[1]);
    let src = load_corpus(from, CorpusFormat::Tagged, &language_of(from))?;
    let tgt = load_corpus(to, CorpusFormat::Tagged, &language_of(to))?;
    if src.len() != tgt.len() {
        return Err(Error::Data(format!(
            "parallel sides differ in length: {} vs {}",
            src.len(),
            tgt.len()
        )));
    }
    let aligns = load_alignments(&a.align)?;
    let lens: Vec<usize> = tgt.sentences.iter().map(|s| s.len()).collect();
    let cfg = ExtractConfig {
        min_count: a.min_count,
        min_prob: a.min_prob,
        ..ExtractConfig::default()
    };
    let rules = extract_rules(&src.sentences, Some(&lens), &aligns, &cfg)?;
    save_rules(&rules, &a.out)?;
    println!("{} rules written to {}", rules.len(), a.out.display());
    Ok(())
}

pub fn cmd_run(a: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    cfg.validate(base)?;
    let cells = plan(&cfg);
    if a.dry_run {
        for c in &cells {
            println!("{} seed={}", c.key(), c.seed);
        }
        println!("{} cells", cells.len());
        return Ok(());
    }
    let sources = Sources::load(&cfg, base)?;
    let outcome = run_matrix(&cells, &sources, &RunSettings::from_config(&cfg, a.jobs))?;
    let out = a.out.clone().unwrap_or_else(|| base.join(&cfg.output_dir));
    outcome.report.write(&outcome.timing, &out)?;
    print!("{}", outcome.report.to_table());
    println!("report written to {}", out.display());
    Ok(())
}

pub fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let lang = language_of(&a.corpus);
    let c = load_corpus(&a.corpus, CorpusFormat::Tagged, &lang)?;
    let tasks = match a.task {
        Some(t) => vec![t],
        None => vec![Task::FourClass, Task::Binary],
    };
    println!("sentences: {}", c.len());
    for t in tasks {
        let st = corpus_stats(&c, t);
        let parts: Vec<String> = t
            .class_names()
            .iter()
            .zip(&st.counts)
            .map(|(n, k)| format!("{n}={k}"))
            .collect();
        println!("{}: {}", t.as_str(), parts.join(" "));
    }
    let p = pos_pair_stats(&c);
    println!(
        "NOUN ADJ bigrams: {}  also as ADJ NOUN: {} ({:.1}%)",
        p.noun_adj, p.also_adj_noun, p.percent
    );
    if let Some(l) = &a.lexicon {
        let lex = load_lexicon(l, &lang)?;
        println!("fully UNK under Only-Lexicon: {:.1}%", lexicon_coverage(&c, &lex) * 100.0);
    }
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => SynthSpec::load(p)?,
        None => SynthSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.task.seed = s;
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    spec.materialize(&a.out)?;
    println!("fixture written to {}", a.out.join("run.json").display());
    Ok(())
}
