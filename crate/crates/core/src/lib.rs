//! Order-aware word embeddings.
//!
//! This crate holds the numerical core: vocabulary and negative-sampling
//! tables, the partition geometry shared by every trainer, the four
//! negative-sampling objectives (CBOW, skip-gram, CLOW and partitioned
//! skip-gram), sharded training with exact merge, dense interpolated
//! character embeddings (DIEM) and the analogy evaluation harness.
//!
//! It is `no_std` and only needs an allocator. File formats, threads and the
//! command line live in the `penn` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod diem;
mod error;
pub mod eval;
pub mod kernels;
pub mod layout;
pub mod parallel;
pub mod rng;
pub mod store;
pub mod trainer;

pub use error::{Error, Result};

use core::fmt::Debug;
use core::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Scalar type of the weight matrices.
///
/// Training runs in `f32`; `f64` is used where tests need to resolve
/// finite differences.
pub trait Real:
    Float + Default + Debug + Send + Sync + AddAssign + SubAssign + MulAssign + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
