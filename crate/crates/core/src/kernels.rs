//! Sigmoid and vector kernels shared by every trainer.

use alloc::vec::Vec;

use crate::Real;

/// Inputs beyond this magnitude saturate to exactly 0 or 1.
pub const MAX_EXP: f64 = 6.0;
/// Number of bins of the sigmoid table over `[-MAX_EXP, MAX_EXP]`.
pub const TABLE_BINS: usize = 4096;

/// Logistic function, either exact or read from a precomputed table.
#[derive(Debug, Clone)]
pub enum Sigmoid<T> {
    Exact,
    Table { sigma: Vec<T>, log_sigma: Vec<T> },
}

impl<T: Real> Sigmoid<T> {
    pub fn exact() -> Self {
        Sigmoid::Exact
    }

    pub fn table() -> Self {
        let mut sigma = Vec::with_capacity(TABLE_BINS + 1);
        let mut log_sigma = Vec::with_capacity(TABLE_BINS + 1);
        for i in 0..=TABLE_BINS {
            let z = (i as f64 / TABLE_BINS as f64 * 2.0 - 1.0) * MAX_EXP;
            sigma.push(T::from_f64(exact_sigmoid(z)));
            log_sigma.push(T::from_f64(exact_log_sigmoid(z)));
        }
        Sigmoid::Table { sigma, log_sigma }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Sigmoid::Exact)
    }

    #[inline]
    fn bin(z: T) -> usize {
        let x = (z.as_f64() + MAX_EXP) * (TABLE_BINS as f64 / (2.0 * MAX_EXP));
        let x = x.clamp(0.0, TABLE_BINS as f64);
        (x + 0.5) as usize
    }

    #[inline]
    pub fn eval(&self, z: T) -> T {
        match self {
            Sigmoid::Exact => T::one() / (T::one() + (-z).exp()),
            // past the table the gradient is cut to zero, as in the reference
            // trainer; a clamped 0.9975 keeps pushing saturated pairs forever
            Sigmoid::Table { .. } if z.as_f64() >= MAX_EXP => T::one(),
            Sigmoid::Table { .. } if z.as_f64() <= -MAX_EXP => T::zero(),
            Sigmoid::Table { sigma, .. } => sigma[Self::bin(z).min(TABLE_BINS)],
        }
    }

    /// `ln σ(z)`.
    #[inline]
    pub fn log_eval(&self, z: T) -> T {
        match self {
            Sigmoid::Exact => {
                // ln σ(z) = -softplus(-z)
                if z > T::zero() {
                    -((-z).exp().ln_1p())
                } else {
                    z - z.exp().ln_1p()
                }
            }
            Sigmoid::Table { .. } if z.as_f64().abs() >= MAX_EXP => T::from_f64(exact_log_sigmoid(z.as_f64())),
            Sigmoid::Table { log_sigma, .. } => log_sigma[Self::bin(z).min(TABLE_BINS)],
        }
    }
}

fn exact_sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

fn exact_log_sigmoid(z: f64) -> f64 {
    if z > 0.0 {
        -libm::log1p(libm::exp(-z))
    } else {
        z - libm::log1p(libm::exp(z))
    }
}

/// Inner product with eight independent accumulators.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += a * x`.
#[inline]
pub fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

#[inline]
pub fn scale<T: Real>(y: &mut [T], a: T) {
    y.iter_mut().for_each(|v| *v *= a);
}

pub fn norm<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}
