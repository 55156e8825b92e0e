//! The two trainable matrices.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::kernels;
use crate::layout::PartitionLayout;
use crate::rng::{self, Stream};
use crate::{Error, Real, Result};

/// Input embeddings (`syn0`, `|V| x D`) and output classifier weights
/// (`syn1`, `|V| x classifier_dim`), both row-major.
///
/// Row `r`, partition `p` of `syn0` is `syn0[r*D + p*P .. r*D + (p+1)*P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore<T> {
    layout: PartitionLayout,
    rows: usize,
    syn0: Vec<T>,
    syn1: Vec<T>,
}

impl<T: Real> EmbeddingStore<T> {
    pub fn zeros(layout: PartitionLayout, rows: usize) -> Self {
        EmbeddingStore {
            layout,
            rows,
            syn0: alloc::vec![T::zero(); rows * layout.dim()],
            syn1: alloc::vec![T::zero(); rows * layout.classifier_dim()],
        }
    }

    /// `syn0` uniform in `[-0.5/D, 0.5/D)`, `syn1` zero.
    ///
    /// Each embedding partition is filled from its own random stream, so the
    /// values of a partition do not depend on how many partitions exist.
    pub fn initialized(layout: PartitionLayout, rows: usize, seed: u64) -> Self {
        let mut store = Self::zeros(layout, rows);
        for p in 0..layout.embedding_partitions() {
            let values = init_partition::<T>(layout.dim(), layout.partition_dim(), rows, seed, p);
            let pd = layout.partition_dim();
            for (r, chunk) in values.chunks_exact(pd).enumerate() {
                store.syn0_slice_mut(r, p).copy_from_slice(chunk);
            }
        }
        store
    }

    pub fn from_parts(layout: PartitionLayout, rows: usize, syn0: Vec<T>, syn1: Vec<T>) -> Result<Self> {
        if syn0.len() != rows * layout.dim() || syn1.len() != rows * layout.classifier_dim() {
            return Err(Error::Layout(alloc::format!(
                "matrix sizes {}/{} do not match {rows} rows of {}/{}",
                syn0.len(),
                syn1.len(),
                layout.dim(),
                layout.classifier_dim()
            )));
        }
        Ok(EmbeddingStore {
            layout,
            rows,
            syn0,
            syn1,
        })
    }

    pub fn layout(&self) -> &PartitionLayout {
        &self.layout
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn classifier_dim(&self) -> usize {
        self.layout.classifier_dim()
    }

    pub fn syn0(&self) -> &[T] {
        &self.syn0
    }

    pub fn syn1(&self) -> &[T] {
        &self.syn1
    }

    pub fn syn0_mut(&mut self) -> &mut [T] {
        &mut self.syn0
    }

    pub fn syn1_mut(&mut self) -> &mut [T] {
        &mut self.syn1
    }

    /// Both matrices mutably at once.
    pub fn split_mut(&mut self) -> (&mut [T], &mut [T]) {
        (&mut self.syn0, &mut self.syn1)
    }

    pub fn syn0_row(&self, r: usize) -> &[T] {
        let d = self.dim();
        &self.syn0[r * d..(r + 1) * d]
    }

    pub fn syn1_row(&self, r: usize) -> &[T] {
        let d = self.classifier_dim();
        &self.syn1[r * d..(r + 1) * d]
    }

    pub fn syn0_slice(&self, r: usize, p: usize) -> &[T] {
        let (d, pd) = (self.dim(), self.layout.partition_dim());
        &self.syn0[r * d + p * pd..r * d + (p + 1) * pd]
    }

    pub fn syn1_slice(&self, r: usize, p: usize) -> &[T] {
        let (d, pd) = (self.classifier_dim(), self.layout.partition_dim());
        &self.syn1[r * d + p * pd..r * d + (p + 1) * pd]
    }

    pub fn syn0_slice_mut(&mut self, r: usize, p: usize) -> &mut [T] {
        let (d, pd) = (self.dim(), self.layout.partition_dim());
        &mut self.syn0[r * d + p * pd..r * d + (p + 1) * pd]
    }

    pub fn syn1_slice_mut(&mut self, r: usize, p: usize) -> &mut [T] {
        let (d, pd) = (self.classifier_dim(), self.layout.partition_dim());
        &mut self.syn1[r * d + p * pd..r * d + (p + 1) * pd]
    }

    /// Inner product of a `syn0` partition with a `syn1` partition.
    pub fn dot_partition(&self, row_a: usize, part_a: usize, row_b: usize, part_b: usize) -> Result<T> {
        if row_a >= self.rows || row_b >= self.rows {
            return Err(Error::Index(alloc::format!(
                "rows {row_a}/{row_b} of {}",
                self.rows
            )));
        }
        if part_a >= self.layout.embedding_partitions() || part_b >= self.layout.classifier_partitions() {
            return Err(Error::Index(alloc::format!("partitions {part_a}/{part_b}")));
        }
        Ok(kernels::dot(self.syn0_slice(row_a, part_a), self.syn1_slice(row_b, part_b)))
    }

    pub fn all_finite(&self) -> bool {
        self.syn0.iter().chain(&self.syn1).all(|v| v.is_finite())
    }

    /// Copies the store into another scalar type.
    pub fn cast<U: Real>(&self) -> EmbeddingStore<U> {
        EmbeddingStore {
            layout: self.layout,
            rows: self.rows,
            syn0: self.syn0.iter().map(|v| U::from_f64(v.as_f64())).collect(),
            syn1: self.syn1.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }

    pub fn into_parts(self) -> (PartitionLayout, usize, Vec<T>, Vec<T>) {
        (self.layout, self.rows, self.syn0, self.syn1)
    }
}

/// Initial values of one embedding partition, `rows x partition_dim`, row-major.
pub fn init_partition<T: Real>(
    global_dim: usize,
    partition_dim: usize,
    rows: usize,
    seed: u64,
    partition: usize,
) -> Vec<T> {
    let mut rng = rng::stream(seed, Stream::Init { partition });
    let half = 0.5 / global_dim as f64;
    (0..rows * partition_dim)
        .map(|_| T::from_f64((rng.random::<f64>() * 2.0 - 1.0) * half))
        .collect()
}
