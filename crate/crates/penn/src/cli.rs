//! Subcommands of the `penn` binary.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use penn_core::diem::{
    char_train_config, diem_vectors_for_vocab, CharModel, DEFAULT_CHAR_DIM, DEFAULT_CHAR_MIN_COUNT,
    DEFAULT_CHAR_WINDOW, DEFAULT_MULTIPLE,
};
use penn_core::eval::{
    answer_analogy, evaluate, evaluate_ensemble, nearest_word, partition_heatmap, HeatmapMode, Vectors,
    DEFAULT_RESTRICT,
};
use penn_core::layout::PartitionLayout;
use penn_core::parallel::{fnv1a, merge_shards, train_shard_observed, Provenance};
use penn_core::trainer::{Objective, Progress};

use crate::config::{Resolved, TrainOptions};
use crate::data::{load_analogies, load_chars, load_words};
use crate::ensemble::{load_vectors, EnsembleFile, LoadedEnsemble, MemberFile};
use crate::format::{load_model, save_char_model, save_model, write_text_vectors, write_vocab, Model};
use crate::hogwild::train_threads;
use crate::{pipeline, report};

#[derive(Debug, Parser)]
#[command(name = "penn", version, about = "Order-aware word embeddings: training, sharding, DIEM and analogy evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a word model
    Train(TrainArgs),
    /// Train character vectors for DIEM
    TrainChars(CharArgs),
    /// Train the partitions of one window offset (partitioned skip-gram)
    ShardTrain(ShardArgs),
    /// Merge shard files into one model
    Merge(MergeArgs),
    /// Write DIEM vectors for a word list or a model's vocabulary
    Diem(DiemArgs),
    /// Evaluate on an analogy file
    Eval(EvalArgs),
    /// Nearest neighbours or analogy answers
    Query(QueryArgs),
    /// Per-partition analogy accuracy of a windowed model
    Heatmap(HeatmapArgs),
    /// Train and evaluate every member of an ensemble recipe
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, visible_alias = "input")]
    pub corpus: PathBuf,
    #[arg(long, visible_alias = "output")]
    pub out: PathBuf,
    /// TOML file with training options; flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the input vectors as text
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Also write the vocabulary
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    #[command(flatten)]
    pub opts: TrainOptions,
}

#[derive(Debug, Args)]
pub struct CharArgs {
    #[arg(long, visible_alias = "input")]
    pub corpus: PathBuf,
    #[arg(long, visible_alias = "output")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CHAR_DIM)]
    pub char_dim: usize,
    /// Output slots per word; DIEM vectors have `multiple * char_dim` values
    #[arg(long, default_value_t = DEFAULT_MULTIPLE)]
    pub multiple: usize,
    #[arg(long, default_value_t = DEFAULT_CHAR_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_CHAR_MIN_COUNT)]
    pub min_count: u64,
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    #[arg(long, visible_alias = "negative", default_value_t = 5)]
    pub negatives: usize,
    /// Subsampling threshold; off by default for characters
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ShardArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Window offset trained by this shard
    #[arg(long, allow_hyphen_values = true)]
    pub offset: i32,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Merge shards from different runs anyway
    #[arg(long)]
    pub force: bool,
    #[arg(required = true)]
    pub shards: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiemArgs {
    #[arg(long)]
    pub chars: PathBuf,
    /// One word per line
    #[arg(long, conflicts_with = "vocab", required_unless_present = "vocab")]
    pub words: Option<PathBuf>,
    /// Model whose vocabulary is embedded
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file or text vectors
    #[arg(long, required_unless_present = "ensemble")]
    pub model: Option<PathBuf>,
    /// Character model added as a DIEM member (power 10; the word model gets 0.1)
    #[arg(long)]
    pub diem: Option<PathBuf>,
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    #[arg(long)]
    pub analogies: PathBuf,
    /// Candidate words considered, most frequent first; 0 for all
    #[arg(long, default_value_t = DEFAULT_RESTRICT)]
    pub restrict: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "analogy", required_unless_present = "analogy")]
    pub word: Option<String>,
    /// a b c: "a is to b as c is to ?"
    #[arg(long, num_args = 3)]
    pub analogy: Option<Vec<String>>,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Slice,
    Ablation,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub analogies: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Slice)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_RESTRICT)]
    pub restrict: usize,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub config: PathBuf,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::TrainChars(a) => cmd_train_chars(&a),
        Command::ShardTrain(a) => cmd_shard_train(&a),
        Command::Merge(a) => cmd_merge(&a),
        Command::Diem(a) => cmd_diem(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Query(a) => cmd_query(&a),
        Command::Heatmap(a) => cmd_heatmap(&a),
        Command::Pipeline(a) => pipeline::run(&a.config).map(|_| ()),
    }
}

/// Logs tokens/s, learning rate and loss at every report.
pub fn progress_logger(total: u64) -> impl Fn(&Progress) + Sync {
    let start = Instant::now();
    move |p: &Progress| {
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        log::info!(
            "worker {} {:>5.1}% {:>10.0} tokens/s lr {:.6} loss {:.4}",
            p.worker,
            100.0 * p.tokens as f64 / total.max(1) as f64,
            p.tokens as f64 / secs,
            p.lr,
            p.mean_loss
        );
    }
}

fn resolve(args: &TrainArgs, forced: Option<Objective>) -> anyhow::Result<Resolved> {
    let file = match &args.config {
        Some(p) => TrainOptions::from_toml(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => TrainOptions::default(),
    };
    let mut opts = file.layered(&args.opts);
    if let Some(o) = forced {
        match opts.objective.as_deref() {
            None => opts.objective = Some(o.name().into()),
            Some(s) if s == o.name() => {}
            Some(s) => bail!("this command trains {} only, not {s}", o.name()),
        }
    }
    opts.resolve()
}

/// Trains one word model; shared by `train` and the pipeline.
pub fn train_model(corpus: &Path, resolved: &Resolved) -> anyhow::Result<Model> {
    let loaded = load_words(corpus, resolved.min_count)?;
    let total = loaded.corpus.len() as u64 * resolved.train.epochs as u64;
    let logger = progress_logger(total);
    let store = train_threads(&loaded.corpus, &loaded.vocab, &resolved.train, resolved.threads, &logger)?;
    let provenance = Provenance {
        corpus_hash: loaded.hash,
        config_hash: fnv1a(resolved.canonical().as_bytes()),
        seed: resolved.train.seed,
    };
    Ok(Model::new(loaded.vocab, store, provenance))
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<()> {
    let resolved = resolve(a, None)?;
    log::info!("training {}", resolved.canonical());
    let model = train_model(&a.corpus, &resolved)?;
    save_model(&a.out, &model).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.vectors {
        let mut w = BufWriter::new(File::create(p)?);
        write_text_vectors(&mut w, &model.words(), model.store.dim(), model.store.syn0())?;
        w.flush()?;
    }
    if let Some(p) = &a.vocab_out {
        let mut w = BufWriter::new(File::create(p)?);
        write_vocab(&mut w, &model.vocab)?;
        w.flush()?;
    }
    eprintln!("wrote {} ({} words, {} dimensions)", a.out.display(), model.store.rows(), model.store.dim());
    Ok(())
}

/// Trains character vectors; shared by `train-chars` and the pipeline.
pub fn train_chars(a: &CharArgs) -> anyhow::Result<CharModel<f32>> {
    let loaded = load_chars(&a.corpus, a.min_count)?;
    let mut cfg = char_train_config(a.char_dim)?;
    cfg.layout = PartitionLayout::flat(a.window, a.char_dim)?;
    cfg.epochs = a.epochs;
    cfg.negatives = a.negatives;
    cfg.subsample = a.subsample.filter(|t| *t > 0.0);
    cfg.seed = a.seed;
    cfg.table_size = cfg.table_size.min(10_000_000);
    let total = loaded.corpus.len() as u64 * cfg.epochs as u64;
    let logger = progress_logger(total);
    let store = train_threads(&loaded.corpus, &loaded.vocab, &cfg, a.threads, &logger)?;
    let (_, _, syn0, _) = store.into_parts();
    Ok(CharModel::from_vocab(&loaded.vocab, a.char_dim, a.multiple, syn0)?)
}

fn cmd_train_chars(a: &CharArgs) -> anyhow::Result<()> {
    let model = train_chars(a)?;
    save_char_model(&a.out, &model).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("wrote {} ({} characters)", a.out.display(), model.chars().len());
    Ok(())
}

fn cmd_shard_train(a: &ShardArgs) -> anyhow::Result<()> {
    let resolved = resolve(&a.train, Some(Objective::PennSkipGram))?;
    if resolved.threads > 1 {
        log::warn!("shards train on one thread; --threads ignored");
    }
    let loaded = load_words(&a.train.corpus, resolved.min_count)?;
    let provenance = Provenance {
        corpus_hash: loaded.hash,
        config_hash: fnv1a(resolved.canonical().as_bytes()),
        seed: resolved.train.seed,
    };
    let total = loaded.corpus.len() as u64 * resolved.train.epochs as u64;
    let logger = progress_logger(total);
    let mut obs = |p: &Progress| logger(p);
    let shard = train_shard_observed(&loaded.corpus, &loaded.vocab, &resolved.train, a.offset, provenance, &mut obs)?;
    let model = Model::from_shard(loaded.vocab, shard);
    save_model(&a.train.out, &model).with_context(|| format!("writing {}", a.train.out.display()))?;
    eprintln!("wrote shard {} for offset {}", a.train.out.display(), a.offset);
    Ok(())
}

fn cmd_merge(a: &MergeArgs) -> anyhow::Result<()> {
    let mut vocab = None;
    let mut shards = Vec::with_capacity(a.shards.len());
    for p in &a.shards {
        let m = load_model(p).with_context(|| format!("loading {}", p.display()))?;
        let (v, s) = m.into_shard().with_context(|| format!("{} is not a shard", p.display()))?;
        match &vocab {
            None => vocab = Some(v),
            Some(first) if *first != v => bail!("{} has a different vocabulary", p.display()),
            Some(_) => {}
        }
        shards.push(s);
    }
    let provenance = shards[0].provenance;
    let store = merge_shards(&shards, a.force)?;
    let model = Model::new(vocab.expect("at least one shard"), store, provenance);
    save_model(&a.out, &model).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("wrote {} ({} dimensions)", a.out.display(), model.store.dim());
    Ok(())
}

fn cmd_diem(a: &DiemArgs) -> anyhow::Result<()> {
    let model = crate::format::load_char_model(&a.chars).with_context(|| format!("loading {}", a.chars.display()))?;
    let words: Vec<String> = match (&a.words, &a.vocab) {
        (Some(p), _) => BufReader::new(File::open(p)?)
            .lines()
            .map(|l| l.map(|l| l.trim().to_string()))
            .filter(|l| !matches!(l, Ok(s) if s.is_empty()))
            .collect::<Result<_, _>>()?,
        (None, Some(p)) => load_model(p)?.words(),
        (None, None) => bail!("give --words or --vocab"),
    };
    let (values, failed) = diem_vectors_for_vocab(words.iter().map(String::as_str), &model);
    for w in failed {
        log::warn!("could not embed {w:?}; wrote zeros");
    }
    let mut w = BufWriter::new(File::create(&a.out)?);
    write_text_vectors(&mut w, &words, model.dim(), &values)?;
    w.flush()?;
    eprintln!("wrote {} DIEM vectors of {} values", words.len(), model.dim());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let dataset = load_analogies(&a.analogies)?;
    let report = if a.ensemble.is_some() || a.diem.is_some() {
        let mut spec = match &a.ensemble {
            Some(p) => EnsembleFile::load(p)?,
            None => EnsembleFile {
                top_k: penn_core::eval::DEFAULT_TOP_K,
                diem_syntactic_only: true,
                members: Vec::new(),
            },
        };
        let given_power = if a.diem.is_some() { 0.1 } else { 1.0 };
        if let Some(m) = &a.model {
            spec.members.insert(
                0,
                MemberFile {
                    path: Some(m.clone()),
                    chars: None,
                    space: "word".into(),
                    power: given_power,
                },
            );
        }
        if let Some(c) = &a.diem {
            spec.members.push(MemberFile {
                path: None,
                chars: Some(c.clone()),
                space: "diem".into(),
                power: 10.0,
            });
        }
        let loaded = LoadedEnsemble::load(&spec, a.restrict)?;
        evaluate_ensemble(&loaded.spec(), &dataset)?
    } else {
        let path = a.model.as_ref().context("--model is required")?;
        let mut v = load_vectors(path)?;
        if a.restrict > 0 {
            v = v.restrict(a.restrict);
        }
        evaluate(&v, &dataset)
    };
    print!("{}", report::render(&report));
    if let Some(p) = &a.csv {
        std::fs::write(p, report::to_csv(&report))?;
    }
    if let Some(p) = &a.heatmap {
        let path = a.model.as_ref().context("--heatmap needs --model")?;
        let model = load_model(path)?;
        let hm = partition_heatmap(&model.words(), &model.store, &dataset, HeatmapMode::Slice, a.restrict_or_all())?;
        std::fs::write(p, report::heatmap_csv(&hm))?;
    }
    Ok(())
}

impl EvalArgs {
    fn restrict_or_all(&self) -> usize {
        if self.restrict == 0 {
            usize::MAX
        } else {
            self.restrict
        }
    }
}

fn cmd_query(a: &QueryArgs) -> anyhow::Result<()> {
    let v: Vectors = load_vectors(&a.model)?;
    let ranked = match (&a.word, &a.analogy) {
        (Some(w), _) => nearest_word(&v, w, a.k)?,
        (None, Some(q)) => answer_analogy(&v, &q[0], &q[1], &q[2], a.k)
            .with_context(|| format!("one of {q:?} is out of vocabulary"))?,
        (None, None) => bail!("give --word or --analogy"),
    };
    for (id, score) in ranked {
        println!("{}\t{score:.6}", v.word(id));
    }
    Ok(())
}

fn cmd_heatmap(a: &HeatmapArgs) -> anyhow::Result<()> {
    let dataset = load_analogies(&a.analogies)?;
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let mode = match a.mode {
        ModeArg::Slice => HeatmapMode::Slice,
        ModeArg::Ablation => HeatmapMode::Ablation,
    };
    let restrict = if a.restrict == 0 { usize::MAX } else { a.restrict };
    let hm = partition_heatmap(&model.words(), &model.store, &dataset, mode, restrict)?;
    print!("{}", report::render_heatmap(&hm));
    if let Some(p) = &a.out {
        std::fs::write(p, report::heatmap_csv(&hm))?;
    }
    Ok(())
}
