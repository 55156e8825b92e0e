use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("no token reaches min_count {0}")]
    EmptyVocabulary(u64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unknown token id {0}")]
    UnknownId(u32),

    #[error("invalid window offset {offset} for window {window}")]
    Offset { offset: i32, window: usize },

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("missing shard for offset {0}")]
    MissingOffset(i32),

    #[error("duplicate shard for offset {0}")]
    DuplicateOffset(i32),

    #[error("shard mismatch: {0}")]
    ShardMismatch(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("zero-norm query")]
    ZeroNorm,

    #[error("out of vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("empty word")]
    EmptyWord,

    #[error("ensemble has no members")]
    EmptyEnsemble,

    #[error("heatmap needs a windowed layout with at least two partitions")]
    HeatmapLayout,
}
