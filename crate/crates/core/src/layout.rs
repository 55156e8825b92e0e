//! Partition geometry.
//!
//! A word embedding of dimension `D` is cut into equal partitions of
//! `partition_dim` values. Which partition a context word contributes depends
//! on its signed offset `j` from the focus word:
//!
//! * [`Style::Windowed`]: one partition per offset, ordered left to right,
//!   so offsets `-c..=-1, 1..=c` map to partitions `0..2c`.
//! * [`Style::Directional`]: offsets `j < 0` (words before the focus) map to
//!   partition 0, offsets `j > 0` to partition 1.
//! * [`Style::Flat`]: a single partition; used by the CBOW and skip-gram
//!   baselines and by shard files.
//!
//! The classifier (`syn1`) may have fewer partitions than the embedding; in
//! that case neighbouring embedding partitions share one classifier partition
//! and their inputs are combined by [`Grouping`].

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Style {
    Flat,
    Windowed,
    Directional,
}

/// How several inputs feeding one classifier partition are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grouping {
    Average,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartitionLayout {
    style: Style,
    window: usize,
    partition_dim: usize,
    classifier_partitions: usize,
    grouping: Grouping,
}

impl PartitionLayout {
    /// Layout with one classifier partition per embedding partition.
    pub fn new(style: Style, window: usize, partition_dim: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Layout("window must be at least 1".into()));
        }
        if partition_dim == 0 {
            return Err(Error::Layout("partition dimension must be at least 1".into()));
        }
        let embedding = match style {
            Style::Flat => 1,
            Style::Windowed => 2 * window,
            Style::Directional => 2,
        };
        Ok(PartitionLayout {
            style,
            window,
            partition_dim,
            classifier_partitions: embedding,
            grouping: Grouping::Average,
        })
    }

    pub fn windowed(window: usize, partition_dim: usize) -> Result<Self> {
        Self::new(Style::Windowed, window, partition_dim)
    }

    pub fn directional(window: usize, partition_dim: usize) -> Result<Self> {
        Self::new(Style::Directional, window, partition_dim)
    }

    pub fn flat(window: usize, dim: usize) -> Result<Self> {
        Self::new(Style::Flat, window, dim)
    }

    /// Shares classifier partitions between neighbouring embedding
    /// partitions. `count` must divide the embedding partition count.
    pub fn with_classifier_partitions(mut self, count: usize) -> Result<Self> {
        let embedding = self.embedding_partitions();
        if count == 0 || count > embedding || !embedding.is_multiple_of(count) {
            return Err(Error::Layout(alloc::format!(
                "{count} classifier partitions do not evenly group {embedding} embedding partitions"
            )));
        }
        self.classifier_partitions = count;
        Ok(self)
    }

    pub fn with_grouping(mut self, grouping: Grouping) -> Self {
        self.grouping = grouping;
        self
    }

    pub fn style(&self) -> Style {
        self.style
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn partition_dim(&self) -> usize {
        self.partition_dim
    }

    pub fn grouping(&self) -> Grouping {
        self.grouping
    }

    pub fn embedding_partitions(&self) -> usize {
        match self.style {
            Style::Flat => 1,
            Style::Windowed => 2 * self.window,
            Style::Directional => 2,
        }
    }

    pub fn classifier_partitions(&self) -> usize {
        self.classifier_partitions
    }

    pub fn is_grouped(&self) -> bool {
        self.classifier_partitions != self.embedding_partitions()
    }

    /// Global embedding dimension `D`.
    pub fn dim(&self) -> usize {
        self.partition_dim * self.embedding_partitions()
    }

    /// Width of a classifier row.
    pub fn classifier_dim(&self) -> usize {
        self.partition_dim * self.classifier_partitions
    }

    /// Maps a window offset to its (embedding, classifier) partitions.
    pub fn partition_of(&self, offset: i32) -> Result<(usize, usize)> {
        let c = self.window as i32;
        if offset == 0 || offset.abs() > c {
            return Err(Error::Offset {
                offset,
                window: self.window,
            });
        }
        let embedding = match self.style {
            Style::Flat => 0,
            Style::Windowed if offset < 0 => (offset + c) as usize,
            Style::Windowed => (offset + c - 1) as usize,
            Style::Directional if offset < 0 => 0,
            Style::Directional => 1,
        };
        let group = self.embedding_partitions() / self.classifier_partitions;
        Ok((embedding, embedding / group))
    }

    /// Inverse of [`partition_of`](Self::partition_of) for windowed layouts.
    pub fn offset_of_partition(&self, partition: usize) -> Option<i32> {
        if self.style != Style::Windowed || partition >= 2 * self.window {
            return None;
        }
        let c = self.window as i32;
        let p = partition as i32;
        Some(if p < c { p - c } else { p - c + 1 })
    }

    /// All valid offsets, left to right.
    pub fn offsets(&self) -> Vec<i32> {
        let c = self.window as i32;
        (-c..=c).filter(|&j| j != 0).collect()
    }
}
