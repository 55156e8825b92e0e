//! Multi-model recipes: train every member, build DIEM vectors and evaluate
//! the ensemble. Members whose output already exists with a matching
//! configuration hash are not retrained.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use penn_core::eval::{evaluate_ensemble, EvalReport, DEFAULT_RESTRICT, DEFAULT_TOP_K};
use penn_core::parallel::fnv1a;
use serde::{Deserialize, Serialize};

use crate::cli::{train_chars, train_model, CharArgs};
use crate::config::TrainOptions;
use crate::data::{load_analogies, read_text};
use crate::ensemble::{EnsembleFile, LoadedEnsemble, MemberFile};
use crate::format::{load_char_model, load_model, save_char_model, save_model};
use crate::report;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFile {
    pub corpus: PathBuf,
    /// Corpus for character training; defaults to `corpus`.
    #[serde(default)]
    pub char_corpus: Option<PathBuf>,
    pub analogies: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default = "default_restrict")]
    pub restrict: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "yes")]
    pub diem_syntactic_only: bool,
    /// Options shared by every member; a member's own options win.
    #[serde(default)]
    pub defaults: TrainOptions,
    #[serde(default, rename = "member")]
    pub members: Vec<WordMember>,
    #[serde(default)]
    pub diem: Option<DiemMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordMember {
    pub name: String,
    #[serde(default = "word_power")]
    pub power: f64,
    #[serde(default)]
    pub train: TrainOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiemMember {
    #[serde(default = "diem_name")]
    pub name: String,
    #[serde(default = "diem_power")]
    pub power: f64,
    #[serde(default = "char_dim")]
    pub char_dim: usize,
    #[serde(default = "multiple")]
    pub multiple: usize,
    #[serde(default = "char_window")]
    pub window: usize,
    #[serde(default = "char_min_count")]
    pub min_count: u64,
    #[serde(default = "one")]
    pub epochs: usize,
    #[serde(default = "negatives")]
    pub negatives: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
}

fn default_restrict() -> usize {
    DEFAULT_RESTRICT
}
fn default_top_k() -> usize {
    DEFAULT_TOP_K
}
fn yes() -> bool {
    true
}
fn word_power() -> f64 {
    0.1
}
fn diem_power() -> f64 {
    10.0
}
fn diem_name() -> String {
    "diem".into()
}
fn char_dim() -> usize {
    penn_core::diem::DEFAULT_CHAR_DIM
}
fn multiple() -> usize {
    penn_core::diem::DEFAULT_MULTIPLE
}
fn char_window() -> usize {
    penn_core::diem::DEFAULT_CHAR_WINDOW
}
fn char_min_count() -> u64 {
    penn_core::diem::DEFAULT_CHAR_MIN_COUNT
}
fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn negatives() -> usize {
    5
}

/// What happened to each member during a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Trained,
    Reused,
}

pub struct PipelineRun {
    pub outcomes: Vec<(String, Outcome)>,
    pub report: EvalReport,
}

impl PipelineFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = read_text(path)?;
        let mut p: PipelineFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for f in [&mut p.corpus, &mut p.analogies, &mut p.out_dir] {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        if let Some(c) = &mut p.char_corpus {
            if c.is_relative() {
                *c = base.join(&*c);
            }
        }
        Ok(p)
    }
}

fn corpus_hash(path: &Path) -> anyhow::Result<u64> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(fnv1a(&bytes))
}

pub fn run(config: &Path) -> anyhow::Result<PipelineRun> {
    let spec = PipelineFile::load(config)?;
    run_spec(&spec)
}

pub fn run_spec(spec: &PipelineFile) -> anyhow::Result<PipelineRun> {
    if spec.members.is_empty() {
        bail!("pipeline lists no word members");
    }
    std::fs::create_dir_all(&spec.out_dir)?;
    let words_hash = corpus_hash(&spec.corpus)?;
    let mut outcomes = Vec::new();
    let mut ensemble = EnsembleFile {
        top_k: spec.top_k,
        diem_syntactic_only: spec.diem_syntactic_only,
        members: Vec::new(),
    };
    for m in &spec.members {
        let resolved = spec
            .defaults
            .layered(&m.train)
            .resolve()
            .with_context(|| format!("member {}", m.name))?;
        let config_hash = fnv1a(resolved.canonical().as_bytes());
        let out = spec.out_dir.join(format!("{}.model", m.name));
        let current = load_model(&out)
            .ok()
            .filter(|old| old.provenance.config_hash == config_hash && old.provenance.corpus_hash == words_hash);
        if current.is_some() {
            log::info!("member {}: up to date", m.name);
            outcomes.push((m.name.clone(), Outcome::Reused));
        } else {
            log::info!("member {}: training", m.name);
            let model = train_model(&spec.corpus, &resolved).with_context(|| format!("member {} failed", m.name))?;
            save_model(&out, &model).with_context(|| format!("member {}: writing {}", m.name, out.display()))?;
            outcomes.push((m.name.clone(), Outcome::Trained));
        }
        ensemble.members.push(MemberFile {
            path: Some(out),
            chars: None,
            space: "word".into(),
            power: m.power,
        });
    }
    if let Some(d) = &spec.diem {
        let corpus = spec.char_corpus.clone().unwrap_or_else(|| spec.corpus.clone());
        let args = CharArgs {
            corpus: corpus.clone(),
            out: spec.out_dir.join(format!("{}.chars", d.name)),
            char_dim: d.char_dim,
            multiple: d.multiple,
            window: d.window,
            min_count: d.min_count,
            epochs: d.epochs,
            negatives: d.negatives,
            subsample: None,
            seed: d.seed,
            threads: 1,
        };
        let key = format!(
            "{:016x};char_dim={};multiple={};window={};min_count={};epochs={};negatives={};seed={}",
            corpus_hash(&corpus)?,
            d.char_dim,
            d.multiple,
            d.window,
            d.min_count,
            d.epochs,
            d.negatives,
            d.seed
        );
        let stamp = spec.out_dir.join(format!("{}.hash", d.name));
        let fresh = std::fs::read_to_string(&stamp).is_ok_and(|s| s.trim() == key) && load_char_model(&args.out).is_ok();
        if fresh {
            outcomes.push((d.name.clone(), Outcome::Reused));
        } else {
            let model = train_chars(&args).with_context(|| format!("member {} failed", d.name))?;
            save_char_model(&args.out, &model)?;
            std::fs::write(&stamp, &key)?;
            outcomes.push((d.name.clone(), Outcome::Trained));
        }
        ensemble.members.push(MemberFile {
            path: None,
            chars: Some(args.out),
            space: "diem".into(),
            power: d.power,
        });
    }
    let dataset = load_analogies(&spec.analogies)?;
    let loaded = LoadedEnsemble::load(&ensemble, spec.restrict)?;
    let report = evaluate_ensemble(&loaded.spec(), &dataset)?;
    print!("{}", report::render(&report));
    std::fs::write(spec.out_dir.join("report.csv"), report::to_csv(&report))?;
    Ok(PipelineRun { outcomes, report })
}
