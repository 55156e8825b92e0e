//! Dense interpolated character embeddings (DIEM).
//!
//! A word of `I` characters is mapped onto `M` output slots. Character `i`
//! sits at position `s = M*i/I` and contributes to slot `m` with weight
//! `d = (1 - |s - m| / M)^2`. The output is the concatenation of the `M`
//! weighted sums, `M * C` values for character vectors of width `C`.
//!
//! The weights depend only on `I` and `M`, so for short words the whole map
//! is cached as one `(I*C) x (M*C)` matrix and a word costs a single
//! vector-matrix product.

use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::corpus::{Corpus, Vocabulary};
use crate::kernels::axpy;
use crate::layout::PartitionLayout;
use crate::trainer::{train_observed, Objective, Observer, TrainConfig};
use crate::{Error, Real, Result};

/// Words up to this length use a cached transform.
pub const MAX_CACHED_LEN: usize = 20;
pub const DEFAULT_CHAR_DIM: usize = 32;
pub const DEFAULT_MULTIPLE: usize = 10;
pub const DEFAULT_CHAR_WINDOW: usize = 3;
pub const DEFAULT_CHAR_MIN_COUNT: u64 = 25;

/// Weight of character `i` of a word of length `len` in slot `m`.
///
/// Positions start at 0, so the last character sits at `M*(I-1)/I` and never
/// reaches slot `M`.
pub fn interpolation_weight(i: usize, len: usize, m: usize, multiple: usize) -> f64 {
    let s = multiple as f64 * i as f64 / len as f64;
    let t = 1.0 - (s - m as f64).abs() / multiple as f64;
    t * t
}

/// Row-major `(len*C) x (M*C)` matrix taking concatenated character
/// vectors to the interpolated word vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix<T> {
    len: usize,
    multiple: usize,
    char_dim: usize,
    values: Vec<T>,
}

impl<T: Real> TransformMatrix<T> {
    pub fn rows(&self) -> usize {
        self.len * self.char_dim
    }

    pub fn cols(&self) -> usize {
        self.multiple * self.char_dim
    }

    pub fn word_len(&self) -> usize {
        self.len
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.values[r * self.cols() + c]
    }

    /// `input * self`, `input` being `rows()` long.
    pub fn apply(&self, input: &[T], out: &mut [T]) {
        debug_assert_eq!(input.len(), self.rows());
        debug_assert_eq!(out.len(), self.cols());
        out.iter_mut().for_each(|v| *v = T::zero());
        let cols = self.cols();
        for (r, &x) in input.iter().enumerate() {
            if x != T::zero() {
                axpy(out, x, &self.values[r * cols..(r + 1) * cols]);
            }
        }
    }
}

/// Builds the transform for words of length `len`: block `(i, m)` is
/// `d(i, m) * Identity(char_dim)`.
pub fn build_transform<T: Real>(len: usize, multiple: usize, char_dim: usize) -> Result<TransformMatrix<T>> {
    if len == 0 || multiple == 0 || char_dim == 0 {
        return Err(Error::Parameter("transform needs positive length, multiple and width".into()));
    }
    let cols = multiple * char_dim;
    let mut values = alloc::vec![T::zero(); len * char_dim * cols];
    for i in 0..len {
        for m in 0..multiple {
            let d = T::from_f64(interpolation_weight(i, len, m, multiple));
            for k in 0..char_dim {
                values[(i * char_dim + k) * cols + m * char_dim + k] = d;
            }
        }
    }
    Ok(TransformMatrix {
        len,
        multiple,
        char_dim,
        values,
    })
}

/// Character vectors plus the cached transforms.
#[derive(Debug, Clone)]
pub struct CharModel<T> {
    chars: Vec<char>,
    index: HashMap<char, u32>,
    char_dim: usize,
    multiple: usize,
    vectors: Vec<T>,
    zero: Vec<T>,
    cache: Vec<TransformMatrix<T>>,
}

impl<T: Real> PartialEq for CharModel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.chars == other.chars
            && self.char_dim == other.char_dim
            && self.multiple == other.multiple
            && self.vectors == other.vectors
    }
}

impl<T: Real> CharModel<T> {
    /// `vectors` holds `chars.len()` rows of `char_dim` values.
    pub fn new(chars: Vec<char>, char_dim: usize, multiple: usize, vectors: Vec<T>) -> Result<Self> {
        if char_dim == 0 || multiple == 0 {
            return Err(Error::Parameter("character width and multiple must be positive".into()));
        }
        if vectors.len() != chars.len() * char_dim {
            return Err(Error::Parameter(alloc::format!(
                "{} values for {} characters of width {char_dim}",
                vectors.len(),
                chars.len()
            )));
        }
        let mut index = HashMap::with_capacity(chars.len());
        for (i, &c) in chars.iter().enumerate() {
            if index.insert(c, i as u32).is_some() {
                return Err(Error::Parameter(alloc::format!("duplicate character {c:?}")));
            }
        }
        let cache = (1..=MAX_CACHED_LEN)
            .map(|len| build_transform(len, multiple, char_dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(CharModel {
            chars,
            index,
            char_dim,
            multiple,
            vectors,
            zero: alloc::vec![T::zero(); char_dim],
            cache,
        })
    }

    /// Builds a model from the input matrix of a character-level run.
    /// Vocabulary tokens must be single characters.
    pub fn from_vocab(vocab: &Vocabulary, char_dim: usize, multiple: usize, vectors: Vec<T>) -> Result<Self> {
        let mut chars = Vec::with_capacity(vocab.len());
        for token in vocab.tokens() {
            let mut it = token.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(Error::Parameter(alloc::format!("{token:?} is not a single character"))),
            }
        }
        Self::new(chars, char_dim, multiple, vectors)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn char_dim(&self) -> usize {
        self.char_dim
    }

    pub fn multiple(&self) -> usize {
        self.multiple
    }

    /// Output width `M * C`.
    pub fn dim(&self) -> usize {
        self.multiple * self.char_dim
    }

    pub fn vectors(&self) -> &[T] {
        &self.vectors
    }

    /// Vector of `c`, or the zero vector for unseen characters.
    pub fn char_vector(&self, c: char) -> &[T] {
        match self.index.get(&c) {
            Some(&i) => &self.vectors[i as usize * self.char_dim..(i as usize + 1) * self.char_dim],
            None => &self.zero,
        }
    }

    pub fn knows(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    /// The cached transform for words of length `len`, if any.
    pub fn transform(&self, len: usize) -> Option<&TransformMatrix<T>> {
        len.checked_sub(1).and_then(|i| self.cache.get(i))
    }

    /// Direct double loop over characters and slots.
    pub fn interpolate(&self, word: &str) -> Result<Vec<T>> {
        let mut out = alloc::vec![T::zero(); self.dim()];
        self.interpolate_into(word, &mut out)?;
        Ok(out)
    }

    pub fn interpolate_into(&self, word: &str, out: &mut [T]) -> Result<()> {
        let len = word.chars().count();
        if len == 0 {
            return Err(Error::EmptyWord);
        }
        let cd = self.char_dim;
        out.iter_mut().for_each(|v| *v = T::zero());
        for (i, c) in word.chars().enumerate() {
            let v = self.char_vector(c);
            for m in 0..self.multiple {
                let d = T::from_f64(interpolation_weight(i, len, m, self.multiple));
                axpy(&mut out[m * cd..(m + 1) * cd], d, v);
            }
        }
        Ok(())
    }

    /// Concatenated character vectors times the cached transform; falls
    /// back to [`interpolate`](Self::interpolate) for long words.
    pub fn transform_apply(&self, word: &str) -> Result<Vec<T>> {
        let mut out = alloc::vec![T::zero(); self.dim()];
        let mut scratch = Vec::new();
        self.embed_into(word, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Fast path with caller-owned scratch space.
    pub fn embed_into(&self, word: &str, scratch: &mut Vec<T>, out: &mut [T]) -> Result<()> {
        let len = word.chars().count();
        if len == 0 {
            return Err(Error::EmptyWord);
        }
        let Some(t) = self.transform(len) else {
            return self.interpolate_into(word, out);
        };
        scratch.clear();
        for c in word.chars() {
            scratch.extend_from_slice(self.char_vector(c));
        }
        t.apply(scratch, out);
        Ok(())
    }
}

/// Reference configuration for character training: CBOW, window 3, no
/// subsampling.
pub fn char_train_config(char_dim: usize) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::new(Objective::Cbow, PartitionLayout::flat(DEFAULT_CHAR_WINDOW, char_dim)?);
    cfg.subsample = None;
    Ok(cfg)
}

/// Trains character vectors on a character-level corpus and wraps them in a
/// model with `multiple` output slots.
pub fn train_char_embeddings<T: Real>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    multiple: usize,
    observer: &mut dyn Observer,
) -> Result<CharModel<T>> {
    if config.objective != Objective::Cbow && config.objective != Objective::SkipGram {
        return Err(Error::Parameter("character vectors use a baseline objective".into()));
    }
    let store = train_observed::<T>(corpus, vocab, config, observer)?;
    let char_dim = store.dim();
    let (_, _, syn0, _) = store.into_parts();
    CharModel::from_vocab(vocab, char_dim, multiple, syn0)
}

/// One row per vocabulary word, `|V| x (M*C)`. Words that cannot be embedded
/// (empty tokens) get a zero row and are listed in the second value.
pub fn diem_vectors_for_vocab<'v, T: Real>(
    words: impl IntoIterator<Item = &'v str>,
    model: &CharModel<T>,
) -> (Vec<T>, Vec<String>) {
    let dim = model.dim();
    let mut out = Vec::new();
    let mut failed = Vec::new();
    let mut scratch = Vec::new();
    let mut row = alloc::vec![T::zero(); dim];
    for w in words {
        if model.embed_into(w, &mut scratch, &mut row).is_err() {
            row.iter_mut().for_each(|v| *v = T::zero());
            failed.push(String::from(w));
        }
        out.extend_from_slice(&row);
    }
    (out, failed)
}
