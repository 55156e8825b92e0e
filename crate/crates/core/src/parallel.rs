//! Sharded training of windowed partitioned skip-gram.
//!
//! Partitioned skip-gram never mixes partitions: an update for offset `j`
//! reads and writes only embedding partition `j` and classifier partition
//! `j`. A shard therefore runs the full schedule while executing only the
//! updates of its own offset, and the merged shards equal the single-process
//! model bit for bit, provided both see the same traversal stream and the
//! same per-offset negative streams (see [`crate::rng`]).

use alloc::vec::Vec;
use core::hash::Hasher;

use fnv::FnvHasher;

use crate::corpus::{Corpus, Vocabulary};
use crate::layout::{PartitionLayout, Style};
use crate::store::{init_partition, EmbeddingStore};
use crate::trainer::{Objective, Observer, Schedule, Session, ShardTarget, TrainConfig};
use crate::{Error, Real, Result};

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Identifies the run a shard belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Provenance {
    pub corpus_hash: u64,
    pub config_hash: u64,
    pub seed: u64,
}

impl Provenance {
    pub fn new(corpus_bytes: &[u8], config: &TrainConfig) -> Self {
        Provenance {
            corpus_hash: fnv1a(corpus_bytes),
            config_hash: fnv1a(config.canonical().as_bytes()),
            seed: config.seed,
        }
    }

    /// Provenance from token ids, for callers that never saw the raw text.
    pub fn from_corpus(corpus: &Corpus, config: &TrainConfig) -> Self {
        let mut h = FnvHasher::default();
        for &t in corpus.tokens() {
            h.write(&t.to_le_bytes());
        }
        Provenance {
            corpus_hash: h.finish(),
            config_hash: fnv1a(config.canonical().as_bytes()),
            seed: config.seed,
        }
    }
}

/// Partial model for one window offset: `rows x P` slices of both matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard<T> {
    pub offset: i32,
    /// Layout of the full model the shard belongs to.
    pub layout: PartitionLayout,
    pub provenance: Provenance,
    /// Single-partition store holding the slices.
    pub store: EmbeddingStore<T>,
}

fn check_shardable(layout: &PartitionLayout) -> Result<()> {
    if layout.style() != Style::Windowed || layout.is_grouped() {
        return Err(Error::Layout("sharding needs an ungrouped windowed layout".into()));
    }
    Ok(())
}

/// The partial layout of one shard: a single partition of width `P`.
pub fn shard_layout(layout: &PartitionLayout) -> Result<PartitionLayout> {
    PartitionLayout::flat(layout.window(), layout.partition_dim())
}

pub fn train_shard<T: Real>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    offset: i32,
    provenance: Provenance,
) -> Result<Shard<T>> {
    train_shard_observed(corpus, vocab, config, offset, provenance, &mut ())
}

pub fn train_shard_observed<T: Real>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    offset: i32,
    provenance: Provenance,
    observer: &mut dyn Observer,
) -> Result<Shard<T>> {
    if config.objective != Objective::PennSkipGram {
        return Err(Error::Parameter("only partitioned skip-gram can be sharded".into()));
    }
    let layout = config.layout;
    check_shardable(&layout)?;
    let (partition, _) = layout.partition_of(offset)?;
    let session = Session::<T>::new(vocab, config)?;
    let rows = vocab.len();
    let syn0 = init_partition::<T>(layout.dim(), layout.partition_dim(), rows, config.seed, partition);
    let syn1 = alloc::vec![T::zero(); rows * layout.partition_dim()];
    let mut store = EmbeddingStore::from_parts(shard_layout(&layout)?, rows, syn0, syn1)?;
    let schedule = Schedule {
        worker: 0,
        workers: 1,
        scheduled: corpus.len() as u64 * config.epochs as u64,
    };
    session.run_worker(&mut store, corpus, schedule, Some(ShardTarget { partition }), observer)?;
    Ok(Shard {
        offset,
        layout,
        provenance,
        store,
    })
}

/// Reassembles the full model. Shards may come in any order; provenance
/// differences are an error unless `force` is set.
pub fn merge_shards<T: Real>(shards: &[Shard<T>], force: bool) -> Result<EmbeddingStore<T>> {
    let first = shards.first().ok_or(Error::MissingOffset(0))?;
    let layout = first.layout;
    check_shardable(&layout)?;
    let rows = first.store.rows();
    let pd = layout.partition_dim();
    let mut seen: Vec<Option<usize>> = alloc::vec![None; layout.embedding_partitions()];
    for (i, s) in shards.iter().enumerate() {
        if s.layout != layout {
            return Err(Error::ShardMismatch(alloc::format!("shard {} has a different layout", s.offset)));
        }
        if s.store.rows() != rows {
            return Err(Error::ShardMismatch(alloc::format!(
                "shard {} has {} rows, expected {rows}",
                s.offset,
                s.store.rows()
            )));
        }
        if s.store.dim() != pd || s.store.classifier_dim() != pd {
            return Err(Error::ShardMismatch(alloc::format!("shard {} is not {pd} wide", s.offset)));
        }
        if s.provenance != first.provenance && !force {
            return Err(Error::ShardMismatch(alloc::format!(
                "shard {} comes from a different run (corpus, configuration or seed)",
                s.offset
            )));
        }
        let (p, _) = layout.partition_of(s.offset)?;
        if seen[p].replace(i).is_some() {
            return Err(Error::DuplicateOffset(s.offset));
        }
    }
    let mut out = EmbeddingStore::zeros(layout, rows);
    for (p, slot) in seen.iter().enumerate() {
        let Some(i) = *slot else {
            return Err(Error::MissingOffset(layout.offset_of_partition(p).unwrap_or(0)));
        };
        let shard = &shards[i].store;
        for r in 0..rows {
            out.syn0_slice_mut(r, p).copy_from_slice(shard.syn0_row(r));
            out.syn1_slice_mut(r, p).copy_from_slice(shard.syn1_row(r));
        }
    }
    Ok(out)
}
