//! Negative-sampling SGD for the four objectives.
//!
//! * [`Objective::Cbow`]: the averaged (or summed) context predicts the
//!   focus word through full rows.
//! * [`Objective::SkipGram`]: every context word predicts the focus word on
//!   its own, full rows.
//! * [`Objective::Clow`]: each context word contributes the partition that
//!   belongs to its offset; the partitions are concatenated into the hidden
//!   vector and scored against the classifier row of the target.
//! * [`Objective::PennSkipGram`]: each (context word, offset) pair trains one
//!   embedding partition against one classifier partition, in isolation.
//!
//! Negatives share the hidden vector of the positive target and are redrawn
//! when they hit the focus word.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::corpus::{Corpus, NegativeTable, Subsampler, Vocabulary};
use crate::kernels::{axpy, dot, Sigmoid};
use crate::layout::{Grouping, PartitionLayout, Style};
use crate::rng::{self, Rng, Stream};
use crate::store::EmbeddingStore;
use crate::{Error, Real, Result};

/// Long sentences are processed in pieces of this many tokens.
pub const MAX_SENTENCE_LEN: usize = 1000;
/// The learning rate never decays below `lr0 * LR_FLOOR`.
pub const LR_FLOOR: f64 = 1e-4;
/// Attempts at drawing a negative different from the focus word.
const NEGATIVE_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Cbow,
    SkipGram,
    Clow,
    PennSkipGram,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Cbow => "cbow",
            Objective::SkipGram => "sg",
            Objective::Clow => "clow",
            Objective::PennSkipGram => "pennsg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cbow" => Some(Objective::Cbow),
            "sg" => Some(Objective::SkipGram),
            "clow" => Some(Objective::Clow),
            "pennsg" => Some(Objective::PennSkipGram),
            _ => None,
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Objective::Cbow | Objective::SkipGram)
    }

    pub fn default_lr(self) -> f64 {
        match self {
            Objective::Cbow | Objective::Clow => 0.05,
            Objective::SkipGram | Objective::PennSkipGram => 0.025,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub objective: Objective,
    pub layout: PartitionLayout,
    pub negatives: usize,
    pub lr0: f64,
    pub epochs: usize,
    /// Subsampling threshold; `None` keeps every token.
    pub subsample: Option<f64>,
    pub seed: u64,
    /// Shrink each window uniformly to `1..=c`.
    pub dynamic_window: bool,
    /// Average (rather than sum) the CBOW context.
    pub cbow_mean: bool,
    pub neg_alpha: f64,
    pub table_size: usize,
    pub exact_sigmoid: bool,
    /// Tokens between progress reports.
    pub report_every: u64,
}

impl TrainConfig {
    pub fn new(objective: Objective, layout: PartitionLayout) -> Self {
        TrainConfig {
            objective,
            layout,
            negatives: 5,
            lr0: objective.default_lr(),
            epochs: 1,
            subsample: Some(crate::corpus::DEFAULT_SUBSAMPLE),
            seed: 1,
            dynamic_window: objective.is_baseline(),
            cbow_mean: true,
            neg_alpha: crate::corpus::DEFAULT_NEG_ALPHA,
            table_size: crate::corpus::DEFAULT_TABLE_SIZE,
            exact_sigmoid: false,
            report_every: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if self.negatives == 0 {
            return bad("at least one negative sample is required");
        }
        if !(self.lr0 > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.epochs == 0 {
            return bad("at least one epoch is required");
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0) {
                return bad("subsample threshold must be positive");
            }
        }
        if self.objective.is_baseline() && self.layout.is_grouped() {
            return Err(Error::Layout("baseline objectives need an ungrouped layout".into()));
        }
        if self.objective == Objective::PennSkipGram && self.layout.style() == Style::Flat {
            return Err(Error::Layout("partitioned skip-gram needs a windowed or directional layout".into()));
        }
        Ok(())
    }

    /// Stable textual form used for hashing and provenance.
    pub fn canonical(&self) -> String {
        let l = &self.layout;
        alloc::format!(
            "objective={};style={:?};window={};partition_dim={};classifier_partitions={};grouping={:?};\
             negatives={};lr0={:e};epochs={};subsample={:?};seed={};dynamic_window={};cbow_mean={};\
             neg_alpha={:e};table_size={};exact_sigmoid={}",
            self.objective.name(),
            l.style(),
            l.window(),
            l.partition_dim(),
            l.classifier_partitions(),
            l.grouping(),
            self.negatives,
            self.lr0,
            self.epochs,
            self.subsample,
            self.seed,
            self.dynamic_window,
            self.cbow_mean,
            self.neg_alpha,
            self.table_size,
            self.exact_sigmoid,
        )
    }

    /// Linear decay over the scheduled tokens, floored at `lr0 * 1e-4`.
    pub fn lr_at(&self, processed: u64, scheduled: u64) -> f64 {
        let frac = 1.0 - processed as f64 / (scheduled as f64 + 1.0);
        self.lr0 * frac.max(LR_FLOOR)
    }
}

/// Per-step scratch space plus the sampling machinery.
pub struct Stepper<'a, T> {
    table: &'a NegativeTable,
    sigmoid: &'a Sigmoid<T>,
    negatives: usize,
    cbow_mean: bool,
    targets: Vec<(u32, bool)>,
    hidden: Vec<T>,
    err: Vec<T>,
    counts: Vec<usize>,
    parts: Vec<(u32, usize, usize)>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(table: &'a NegativeTable, sigmoid: &'a Sigmoid<T>, negatives: usize) -> Self {
        Stepper {
            table,
            sigmoid,
            negatives,
            cbow_mean: true,
            targets: Vec::with_capacity(negatives + 1),
            hidden: Vec::new(),
            err: Vec::new(),
            counts: Vec::new(),
            parts: Vec::new(),
        }
    }

    pub fn with_cbow_mean(mut self, mean: bool) -> Self {
        self.cbow_mean = mean;
        self
    }

    /// The focus word followed by `k` negatives.
    fn draw_targets<R: rand::Rng + ?Sized>(&mut self, focus: u32, rng: &mut R) {
        self.targets.clear();
        self.targets.push((focus, true));
        for _ in 0..self.negatives {
            for _ in 0..NEGATIVE_RETRIES {
                let t = self.table.sample(rng);
                if t != focus {
                    self.targets.push((t, false));
                    break;
                }
            }
        }
    }

    #[inline]
    fn gradient(&self, f: T, label: bool, lr: T) -> (T, T) {
        let sigma = self.sigmoid.eval(f);
        if label {
            ((T::one() - sigma) * lr, -self.sigmoid.log_eval(f))
        } else {
            (-sigma * lr, -self.sigmoid.log_eval(-f))
        }
    }

    pub fn step_cbow<R: rand::Rng + ?Sized>(
        &mut self,
        store: &mut EmbeddingStore<T>,
        focus: u32,
        context: &[u32],
        lr: T,
        rng: &mut R,
    ) -> T {
        if context.is_empty() {
            return T::zero();
        }
        self.draw_targets(focus, rng);
        let targets = core::mem::take(&mut self.targets);
        let loss = self.cbow_with_targets(store, context, &targets, lr);
        self.targets = targets;
        loss
    }

    /// One CBOW update against explicit `(target, label)` pairs.
    pub fn cbow_with_targets(
        &mut self,
        store: &mut EmbeddingStore<T>,
        context: &[u32],
        targets: &[(u32, bool)],
        lr: T,
    ) -> T {
        if context.is_empty() {
            return T::zero();
        }
        let d = store.dim();
        self.hidden.clear();
        self.hidden.resize(d, T::zero());
        self.err.clear();
        self.err.resize(d, T::zero());
        for &c in context {
            axpy(&mut self.hidden, T::one(), store.syn0_row(c as usize));
        }
        let scale = if self.cbow_mean {
            T::one() / T::from_f64(context.len() as f64)
        } else {
            T::one()
        };
        if self.cbow_mean {
            crate::kernels::scale(&mut self.hidden, scale);
        }
        let mut loss = T::zero();
        let (syn0, syn1) = store.split_mut();
        for &(t, label) in targets {
            let w = &mut syn1[t as usize * d..(t as usize + 1) * d];
            let f = dot(&self.hidden, w);
            let (g, l) = self.gradient(f, label, lr);
            loss += l;
            axpy(&mut self.err, g, w);
            axpy(w, g, &self.hidden);
        }
        for &c in context {
            axpy(&mut syn0[c as usize * d..(c as usize + 1) * d], scale, &self.err);
        }
        loss
    }

    pub fn step_sg<R: rand::Rng + ?Sized>(
        &mut self,
        store: &mut EmbeddingStore<T>,
        focus: u32,
        context_word: u32,
        lr: T,
        rng: &mut R,
    ) -> T {
        self.draw_targets(focus, rng);
        let targets = core::mem::take(&mut self.targets);
        let loss = self.sg_with_targets(store, context_word, &targets, lr);
        self.targets = targets;
        loss
    }

    pub fn sg_with_targets(
        &mut self,
        store: &mut EmbeddingStore<T>,
        context_word: u32,
        targets: &[(u32, bool)],
        lr: T,
    ) -> T {
        let d = store.dim();
        self.pair_update(store, context_word, 0, d, d, 0, d, targets, lr)
    }

    pub fn step_clow<R: rand::Rng + ?Sized>(
        &mut self,
        store: &mut EmbeddingStore<T>,
        focus: u32,
        context: &[(u32, i32)],
        lr: T,
        rng: &mut R,
    ) -> Result<T> {
        if context.is_empty() {
            return Ok(T::zero());
        }
        self.draw_targets(focus, rng);
        let targets = core::mem::take(&mut self.targets);
        let loss = self.clow_with_targets(store, context, &targets, lr);
        self.targets = targets;
        loss
    }

    /// CLOW update: the hidden vector holds, for every classifier partition,
    /// the combined location-specific partitions of the context words that
    /// feed it. Absent partitions stay zero and are neither scored nor updated.
    pub fn clow_with_targets(
        &mut self,
        store: &mut EmbeddingStore<T>,
        context: &[(u32, i32)],
        targets: &[(u32, bool)],
        lr: T,
    ) -> Result<T> {
        let layout = *store.layout();
        let pd = layout.partition_dim();
        let q_count = layout.classifier_partitions();
        self.parts.clear();
        for &(c, j) in context {
            let (e, q) = layout.partition_of(j)?;
            self.parts.push((c, e, q));
        }
        if self.parts.is_empty() {
            return Ok(T::zero());
        }
        self.hidden.clear();
        self.hidden.resize(q_count * pd, T::zero());
        self.err.clear();
        self.err.resize(q_count * pd, T::zero());
        self.counts.clear();
        self.counts.resize(q_count, 0);
        for &(c, e, q) in &self.parts {
            axpy(&mut self.hidden[q * pd..(q + 1) * pd], T::one(), store.syn0_slice(c as usize, e));
            self.counts[q] += 1;
        }
        let average = layout.grouping() == Grouping::Average;
        if average {
            for q in 0..q_count {
                if self.counts[q] > 1 {
                    let s = T::one() / T::from_f64(self.counts[q] as f64);
                    crate::kernels::scale(&mut self.hidden[q * pd..(q + 1) * pd], s);
                }
            }
        }
        let cd = layout.classifier_dim();
        let d = layout.dim();
        let mut loss = T::zero();
        let (syn0, syn1) = store.split_mut();
        for &(t, label) in targets {
            let row = &mut syn1[t as usize * cd..(t as usize + 1) * cd];
            let mut f = T::zero();
            for q in 0..q_count {
                if self.counts[q] > 0 {
                    f += dot(&self.hidden[q * pd..(q + 1) * pd], &row[q * pd..(q + 1) * pd]);
                }
            }
            let (g, l) = self.gradient(f, label, lr);
            loss += l;
            for q in 0..q_count {
                if self.counts[q] > 0 {
                    let w = &mut row[q * pd..(q + 1) * pd];
                    axpy(&mut self.err[q * pd..(q + 1) * pd], g, w);
                    axpy(w, g, &self.hidden[q * pd..(q + 1) * pd]);
                }
            }
        }
        for &(c, e, q) in &self.parts {
            let s = if average && self.counts[q] > 1 {
                T::one() / T::from_f64(self.counts[q] as f64)
            } else {
                T::one()
            };
            let start = c as usize * d + e * pd;
            axpy(&mut syn0[start..start + pd], s, &self.err[q * pd..(q + 1) * pd]);
        }
        Ok(loss)
    }

    pub fn step_penn_sg<R: rand::Rng + ?Sized>(
        &mut self,
        store: &mut EmbeddingStore<T>,
        focus: u32,
        context_word: u32,
        offset: i32,
        lr: T,
        rng: &mut R,
    ) -> Result<T> {
        let (e, q) = store.layout().partition_of(offset)?;
        Ok(self.step_partitions(store, focus, context_word, e, q, lr, rng))
    }

    /// Skip-gram update restricted to embedding partition `e` of the context
    /// word and classifier partition `q` of the targets.
    pub fn step_partitions<R: rand::Rng + ?Sized>(
        &mut self,
        store: &mut EmbeddingStore<T>,
        focus: u32,
        context_word: u32,
        e: usize,
        q: usize,
        lr: T,
        rng: &mut R,
    ) -> T {
        self.draw_targets(focus, rng);
        let targets = core::mem::take(&mut self.targets);
        let loss = self.penn_sg_with_targets(store, context_word, e, q, &targets, lr);
        self.targets = targets;
        loss
    }

    pub fn penn_sg_with_targets(
        &mut self,
        store: &mut EmbeddingStore<T>,
        context_word: u32,
        e: usize,
        q: usize,
        targets: &[(u32, bool)],
        lr: T,
    ) -> T {
        let pd = store.layout().partition_dim();
        let (d, cd) = (store.dim(), store.classifier_dim());
        self.pair_update(store, context_word, e * pd, d, cd, q * pd, pd, targets, lr)
    }

    /// Shared skip-gram kernel: the `len` values of `syn0` row `context_word`
    /// starting at `h_start` against `syn1[t][w_start..w_start+len]`.
    #[allow(clippy::too_many_arguments)]
    fn pair_update(
        &mut self,
        store: &mut EmbeddingStore<T>,
        context_word: u32,
        h_start: usize,
        d: usize,
        cd: usize,
        w_start: usize,
        len: usize,
        targets: &[(u32, bool)],
        lr: T,
    ) -> T {
        self.err.clear();
        self.err.resize(len, T::zero());
        let (syn0, syn1) = store.split_mut();
        let h0 = context_word as usize * d + h_start;
        let h = &mut syn0[h0..h0 + len];
        let mut loss = T::zero();
        for &(t, label) in targets {
            let w0 = t as usize * cd + w_start;
            let w = &mut syn1[w0..w0 + len];
            let f = dot(h, w);
            let (g, l) = self.gradient(f, label, lr);
            loss += l;
            axpy(&mut self.err, g, w);
            axpy(w, g, h);
        }
        axpy(h, T::one(), &self.err);
        loss
    }
}

/// Training progress snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub worker: usize,
    pub tokens: u64,
    pub lr: f64,
    /// Mean loss per step since the previous report.
    pub mean_loss: f64,
}

pub trait Observer {
    fn report(&mut self, progress: &Progress);
}

impl Observer for () {
    fn report(&mut self, _: &Progress) {}
}

impl<F: FnMut(&Progress)> Observer for F {
    fn report(&mut self, progress: &Progress) {
        self(progress)
    }
}

/// How a worker's slice relates to the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub worker: usize,
    pub workers: usize,
    /// Tokens over all epochs and workers.
    pub scheduled: u64,
}

/// Restricts a partitioned skip-gram run to the offsets that feed one
/// embedding partition, writing their updates into partition 0 of a
/// single-partition store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardTarget {
    pub partition: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WorkerStats {
    pub tokens: u64,
    pub steps: u64,
    pub loss: f64,
}

/// Immutable state shared by all workers of a run.
pub struct Session<T> {
    config: TrainConfig,
    table: NegativeTable,
    sigmoid: Sigmoid<T>,
    subsampler: Subsampler,
    rows: usize,
}

impl<T: Real> Session<T> {
    pub fn new(vocab: &Vocabulary, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let table = NegativeTable::build(vocab, config.neg_alpha, config.table_size.max(vocab.len()))?;
        let sigmoid = if config.exact_sigmoid {
            Sigmoid::exact()
        } else {
            Sigmoid::table()
        };
        Ok(Session {
            config: config.clone(),
            table,
            sigmoid,
            subsampler: Subsampler::new(vocab, config.subsample)?,
            rows: vocab.len(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn table(&self) -> &NegativeTable {
        &self.table
    }

    pub fn sigmoid(&self) -> &Sigmoid<T> {
        &self.sigmoid
    }

    pub fn initial_store(&self) -> EmbeddingStore<T> {
        EmbeddingStore::initialized(self.config.layout, self.rows, self.config.seed)
    }

    pub fn stepper(&self) -> Stepper<'_, T> {
        Stepper::new(&self.table, &self.sigmoid, self.config.negatives).with_cbow_mean(self.config.cbow_mean)
    }

    /// Runs every epoch over `part`, updating `store` in place.
    pub fn run_worker(
        &self,
        store: &mut EmbeddingStore<T>,
        part: &Corpus,
        schedule: Schedule,
        shard: Option<ShardTarget>,
        observer: &mut dyn Observer,
    ) -> Result<WorkerStats> {
        let cfg = &self.config;
        let layout = cfg.layout;
        let c = layout.window();
        let seed = cfg.seed;
        if let Some(s) = shard {
            if cfg.objective != Objective::PennSkipGram {
                return Err(Error::Parameter("only partitioned skip-gram can be sharded".into()));
            }
            if layout.is_grouped() {
                return Err(Error::Layout("shards need one classifier partition per embedding partition".into()));
            }
            if s.partition >= layout.embedding_partitions() {
                return Err(Error::Index(alloc::format!("partition {}", s.partition)));
            }
            if store.layout().embedding_partitions() != 1 || store.layout().partition_dim() != layout.partition_dim() {
                return Err(Error::Layout("shard store must be a single partition".into()));
            }
        } else if store.layout() != &layout {
            return Err(Error::Layout("store layout differs from configuration".into()));
        }
        for &id in part.tokens() {
            if id as usize >= store.rows() {
                return Err(Error::UnknownId(id));
            }
        }
        let worker = schedule.worker;
        let mut traverse = rng::stream(seed, Stream::Traverse { worker });
        let offsets = layout.offsets();
        let mut negative_rngs: Vec<Rng> = match cfg.objective {
            Objective::PennSkipGram => offsets
                .iter()
                .map(|&offset| rng::stream(seed, Stream::Negative { worker, offset }))
                .collect(),
            _ => alloc::vec![rng::stream(seed, Stream::Negative { worker, offset: 0 })],
        };
        let mut stepper = self.stepper();
        let mut kept: Vec<(u32, u32)> = Vec::with_capacity(MAX_SENTENCE_LEN);
        let mut ctx_ids: Vec<u32> = Vec::with_capacity(2 * c);
        let mut ctx_pairs: Vec<(u32, i32)> = Vec::with_capacity(2 * c);
        let mut stats = WorkerStats::default();
        let mut since_report = (0u64, 0f64);
        let mut next_report = cfg.report_every;

        for _epoch in 0..cfg.epochs {
            for sentence in part.sentences() {
                for piece in sentence.chunks(MAX_SENTENCE_LEN) {
                    kept.clear();
                    for (raw, &id) in piece.iter().enumerate() {
                        if self.subsampler.keep(id, &mut traverse) {
                            kept.push((id, raw as u32));
                        }
                    }
                    let base = stats.tokens;
                    for i in 0..kept.len() {
                        let (focus, raw) = kept[i];
                        let processed = (base + raw as u64) * schedule.workers as u64;
                        let lr_f = cfg.lr_at(processed, schedule.scheduled);
                        let lr = T::from_f64(lr_f);
                        let shrink = if cfg.dynamic_window {
                            traverse.random_range(0..c)
                        } else {
                            0
                        };
                        let eff = (c - shrink) as i32;
                        let lo = (i as i32 - eff).max(0) as usize;
                        let hi = (i + eff as usize).min(kept.len() - 1);
                        let mut loss = T::zero();
                        let mut steps = 0u64;
                        match cfg.objective {
                            Objective::Cbow => {
                                ctx_ids.clear();
                                ctx_ids.extend((lo..=hi).filter(|&p| p != i).map(|p| kept[p].0));
                                if !ctx_ids.is_empty() {
                                    loss += stepper.step_cbow(store, focus, &ctx_ids, lr, &mut negative_rngs[0]);
                                    steps += 1;
                                }
                            }
                            Objective::SkipGram => {
                                for p in (lo..=hi).filter(|&p| p != i) {
                                    loss += stepper.step_sg(store, focus, kept[p].0, lr, &mut negative_rngs[0]);
                                    steps += 1;
                                }
                            }
                            Objective::Clow => {
                                ctx_pairs.clear();
                                ctx_pairs.extend(
                                    (lo..=hi).filter(|&p| p != i).map(|p| (kept[p].0, p as i32 - i as i32)),
                                );
                                if !ctx_pairs.is_empty() {
                                    loss += stepper.step_clow(store, focus, &ctx_pairs, lr, &mut negative_rngs[0])?;
                                    steps += 1;
                                }
                            }
                            Objective::PennSkipGram => {
                                for p in (lo..=hi).filter(|&p| p != i) {
                                    let j = p as i32 - i as i32;
                                    let (e, q) = layout.partition_of(j)?;
                                    let (e, q) = match shard {
                                        Some(s) if s.partition != e => continue,
                                        Some(_) => (0, 0),
                                        None => (e, q),
                                    };
                                    let slot = (j + c as i32 - if j > 0 { 1 } else { 0 }) as usize;
                                    loss += stepper.step_partitions(
                                        store,
                                        focus,
                                        kept[p].0,
                                        e,
                                        q,
                                        lr,
                                        &mut negative_rngs[slot],
                                    );
                                    steps += 1;
                                }
                            }
                        }
                        stats.steps += steps;
                        stats.loss += loss.as_f64();
                        since_report.0 += steps;
                        since_report.1 += loss.as_f64();
                    }
                    stats.tokens += piece.len() as u64;
                    if stats.tokens >= next_report {
                        next_report += cfg.report_every;
                        let mean = if since_report.0 > 0 {
                            since_report.1 / since_report.0 as f64
                        } else {
                            0.0
                        };
                        observer.report(&Progress {
                            worker,
                            tokens: stats.tokens,
                            lr: cfg.lr_at(stats.tokens * schedule.workers as u64, schedule.scheduled),
                            mean_loss: mean,
                        });
                        since_report = (0, 0.0);
                    }
                }
            }
            debug_assert!(store.all_finite(), "non-finite weights after an epoch");
        }
        Ok(stats)
    }
}

/// Single-worker, deterministic training.
pub fn train<T: Real>(corpus: &Corpus, vocab: &Vocabulary, config: &TrainConfig) -> Result<EmbeddingStore<T>> {
    train_observed(corpus, vocab, config, &mut ())
}

pub fn train_observed<T: Real>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    observer: &mut dyn Observer,
) -> Result<EmbeddingStore<T>> {
    let session = Session::<T>::new(vocab, config)?;
    let mut store = session.initial_store();
    let schedule = Schedule {
        worker: 0,
        workers: 1,
        scheduled: corpus.len() as u64 * config.epochs as u64,
    };
    session.run_worker(&mut store, corpus, schedule, None, observer)?;
    Ok(store)
}

/// Forward score `h·w` of a CLOW or CBOW window without updating anything.
///
/// For [`Objective::Cbow`] the context offsets are ignored.
pub fn window_score<T: Real>(
    store: &EmbeddingStore<T>,
    objective: Objective,
    cbow_mean: bool,
    focus: u32,
    context: &[(u32, i32)],
) -> Result<T> {
    let layout = store.layout();
    match objective {
        Objective::Cbow => {
            let mut h = alloc::vec![T::zero(); store.dim()];
            for &(c, _) in context {
                axpy(&mut h, T::one(), store.syn0_row(c as usize));
            }
            if cbow_mean && !context.is_empty() {
                crate::kernels::scale(&mut h, T::one() / T::from_f64(context.len() as f64));
            }
            Ok(dot(&h, store.syn1_row(focus as usize)))
        }
        Objective::Clow => {
            let pd = layout.partition_dim();
            let qn = layout.classifier_partitions();
            let mut h = alloc::vec![T::zero(); qn * pd];
            let mut counts = alloc::vec![0usize; qn];
            for &(c, j) in context {
                let (e, q) = layout.partition_of(j)?;
                axpy(&mut h[q * pd..(q + 1) * pd], T::one(), store.syn0_slice(c as usize, e));
                counts[q] += 1;
            }
            let mut f = T::zero();
            for q in 0..qn {
                if counts[q] == 0 {
                    continue;
                }
                if layout.grouping() == Grouping::Average && counts[q] > 1 {
                    crate::kernels::scale(&mut h[q * pd..(q + 1) * pd], T::one() / T::from_f64(counts[q] as f64));
                }
                f += dot(&h[q * pd..(q + 1) * pd], store.syn1_slice(focus as usize, q));
            }
            Ok(f)
        }
        _ => Err(Error::Parameter("window_score covers cbow and clow".into())),
    }
}
