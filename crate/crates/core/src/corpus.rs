//! Tokenization, vocabulary, subsampling and the negative-sampling table.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::{Error, Result};

/// Default exponent applied to counts when building the negative table.
pub const DEFAULT_NEG_ALPHA: f64 = 0.75;
/// Default number of slots in the negative table.
pub const DEFAULT_TABLE_SIZE: usize = 100_000_000;
/// Default subsampling threshold.
pub const DEFAULT_SUBSAMPLE: f64 = 1e-5;
pub const DEFAULT_MIN_COUNT: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenMode {
    /// Whitespace-separated words.
    Word,
    /// One token per character of each whitespace-separated word.
    Char,
}

/// Where training windows are cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// A newline ends a sentence.
    Line,
    /// Every whitespace-separated word is its own sequence (character mode).
    Word,
}

/// A view of UTF-8 text as a sequence of token sentences.
#[derive(Debug, Clone, Copy)]
pub struct TokenStream<'a> {
    text: &'a str,
    mode: TokenMode,
    boundary: Boundary,
}

impl<'a> TokenStream<'a> {
    pub fn words(text: &'a str) -> Self {
        TokenStream {
            text,
            mode: TokenMode::Word,
            boundary: Boundary::Line,
        }
    }

    /// Character tokens; each word is its own sequence.
    pub fn chars(text: &'a str) -> Self {
        TokenStream {
            text,
            mode: TokenMode::Char,
            boundary: Boundary::Word,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    /// Calls `f` once per sentence with the sentence's tokens.
    pub fn for_each_sentence<F>(&self, mut f: F)
    where
        F: FnMut(&[&'a str]),
    {
        let mut buf: Vec<&'a str> = Vec::new();
        for line in self.text.lines() {
            for word in line.split_whitespace() {
                match self.mode {
                    TokenMode::Word => buf.push(word),
                    TokenMode::Char => {
                        for (i, c) in word.char_indices() {
                            buf.push(&word[i..i + c.len_utf8()]);
                        }
                    }
                }
                if self.boundary == Boundary::Word && self.mode == TokenMode::Char {
                    f(&buf);
                    buf.clear();
                }
            }
            if !buf.is_empty() {
                f(&buf);
                buf.clear();
            }
        }
    }

    pub fn for_each_token<F>(&self, mut f: F)
    where
        F: FnMut(&'a str),
    {
        self.for_each_sentence(|s| s.iter().for_each(|t| f(t)));
    }
}

/// Token/id map with corpus counts.
///
/// Ids are dense and follow descending count; ties keep first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    index: HashMap<String, u32>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from entries already in id order.
    pub fn from_entries(entries: Vec<(String, u64)>, total_tokens: u64) -> Result<Self> {
        if entries.len() > u32::MAX as usize {
            return Err(Error::Parameter("vocabulary too large".into()));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (id, (token, count)) in entries.iter().enumerate() {
            if *count == 0 {
                return Err(Error::Parameter(alloc::format!("token {token:?} has count 0")));
            }
            if index.insert(token.clone(), id as u32).is_some() {
                return Err(Error::Parameter(alloc::format!("duplicate token {token:?}")));
            }
        }
        if entries.windows(2).any(|w| w[0].1 < w[1].1) {
            return Err(Error::Parameter("entries not sorted by descending count".into()));
        }
        Ok(Vocabulary {
            entries,
            index,
            total_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|(t, _)| t.as_str())
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.entries.get(id as usize).map(|(_, c)| *c)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }
}

/// Incremental token counter.
#[derive(Debug, Default)]
pub struct VocabBuilder {
    seen: Vec<(String, u64)>,
    index: HashMap<String, usize>,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str) {
        match self.index.get(token) {
            Some(&i) => self.seen[i].1 += 1,
            None => {
                self.index.insert(token.to_string(), self.seen.len());
                self.seen.push((token.to_string(), 1));
            }
        }
    }

    pub fn build(self, min_count: u64) -> Result<Vocabulary> {
        if min_count == 0 {
            return Err(Error::Parameter("min_count must be at least 1".into()));
        }
        if self.seen.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut entries: Vec<(String, u64)> =
            self.seen.into_iter().filter(|(_, c)| *c >= min_count).collect();
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary(min_count));
        }
        // stable: ties stay in first-seen order
        entries.sort_by(|a, b| b.1.cmp(&a.1));
        let total = entries.iter().map(|(_, c)| c).sum();
        Vocabulary::from_entries(entries, total)
    }
}

pub fn build_vocab(stream: &TokenStream<'_>, min_count: u64) -> Result<Vocabulary> {
    let mut builder = VocabBuilder::new();
    stream.for_each_token(|t| builder.add(t));
    builder.build(min_count)
}

/// Unigram table for drawing negative samples proportionally to `count^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeTable {
    table: Vec<u32>,
}

impl NegativeTable {
    /// Builds the table, tiling it exactly with largest-remainder rounding.
    pub fn build(vocab: &Vocabulary, alpha: f64, size: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Parameter(alloc::format!(
                "negative table exponent must be positive, got {alpha}"
            )));
        }
        if size < vocab.len() {
            return Err(Error::Parameter(alloc::format!(
                "table size {size} smaller than vocabulary size {}",
                vocab.len()
            )));
        }
        let weights: Vec<f64> = vocab
            .entries()
            .iter()
            .map(|(_, c)| num_traits::Float::powf(*c as f64, alpha))
            .collect();
        let norm: f64 = weights.iter().sum();
        let quotas: Vec<f64> = weights.iter().map(|w| size as f64 * w / norm).collect();
        let mut spans: Vec<usize> = quotas.iter().map(|q| *q as usize).collect();
        let assigned: usize = spans.iter().sum();
        let mut order: Vec<usize> = (0..spans.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - spans[a] as f64;
            let rb = quotas[b] - spans[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().take(size.saturating_sub(assigned)) {
            spans[i] += 1;
        }
        let mut table = Vec::with_capacity(size);
        for (id, &span) in spans.iter().enumerate() {
            table.extend(core::iter::repeat_n(id as u32, span));
        }
        debug_assert_eq!(table.len(), size);
        Ok(NegativeTable { table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.table
    }

    /// Length of the contiguous run occupied by each id.
    pub fn spans(&self, vocab_size: usize) -> Vec<usize> {
        let mut spans = alloc::vec![0; vocab_size];
        for &id in &self.table {
            spans[id as usize] += 1;
        }
        spans
    }

    #[inline]
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.table[rng.random_range(0..self.table.len())]
    }
}

/// Probability of keeping one occurrence of `id` under threshold `t`.
pub fn subsample_keep_probability(vocab: &Vocabulary, id: u32, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Parameter(alloc::format!("subsample threshold must be positive, got {t}")));
    }
    let count = vocab.count(id).ok_or(Error::UnknownId(id))?;
    let f = count as f64 / vocab.total_tokens() as f64;
    Ok(keep_probability(f, t))
}

#[inline]
fn keep_probability(f: f64, t: f64) -> f64 {
    let p = (num_traits::Float::sqrt(f / t) + 1.0) * (t / f);
    if p > 1.0 {
        1.0
    } else {
        p
    }
}

/// Precomputed keep probabilities for every id.
#[derive(Debug, Clone)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    /// `None` disables subsampling.
    pub fn new(vocab: &Vocabulary, t: Option<f64>) -> Result<Self> {
        let keep = match t {
            None => alloc::vec![1.0; vocab.len()],
            Some(t) => (0..vocab.len() as u32)
                .map(|id| subsample_keep_probability(vocab, id, t))
                .collect::<Result<_>>()?,
        };
        Ok(Subsampler { keep })
    }

    #[inline]
    pub fn keep<R: rand::Rng + ?Sized>(&self, id: u32, rng: &mut R) -> bool {
        let p = self.keep[id as usize];
        p >= 1.0 || p >= rng.random::<f64>()
    }
}

/// A corpus mapped to ids, split into sentences.
///
/// Tokens missing from the vocabulary are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    tokens: Vec<u32>,
    /// Start index of each sentence, plus a final sentinel equal to `tokens.len()`.
    bounds: Vec<usize>,
}

impl Corpus {
    pub fn from_stream(stream: &TokenStream<'_>, vocab: &Vocabulary) -> Self {
        let mut corpus = Corpus {
            tokens: Vec::new(),
            bounds: alloc::vec![0],
        };
        stream.for_each_sentence(|sentence| {
            let before = corpus.tokens.len();
            corpus
                .tokens
                .extend(sentence.iter().filter_map(|t| vocab.id(t)));
            if corpus.tokens.len() > before {
                corpus.bounds.push(corpus.tokens.len());
            }
        });
        corpus
    }

    /// Builds a corpus from id sentences directly.
    pub fn from_sentences<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u32]>,
    {
        let mut corpus = Corpus {
            tokens: Vec::new(),
            bounds: alloc::vec![0],
        };
        for s in sentences {
            let s = s.as_ref();
            if !s.is_empty() {
                corpus.tokens.extend_from_slice(s);
                corpus.bounds.push(corpus.tokens.len());
            }
        }
        corpus
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn num_sentences(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn sentence(&self, i: usize) -> &[u32] {
        &self.tokens[self.bounds[i]..self.bounds[i + 1]]
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[u32]> {
        self.bounds.windows(2).map(move |w| &self.tokens[w[0]..w[1]])
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    /// Splits the corpus into at most `parts` contiguous pieces of roughly
    /// equal token count. A piece boundary acts as a sentence boundary.
    pub fn split(&self, parts: usize) -> Vec<Corpus> {
        let parts = parts.max(1);
        let chunk = self.tokens.len().div_ceil(parts).max(1);
        let mut out = Vec::with_capacity(parts);
        let mut sentences: Vec<&[u32]> = Vec::new();
        let mut filled = 0;
        for mut s in self.sentences() {
            while !s.is_empty() {
                let take = (chunk - filled).min(s.len());
                sentences.push(&s[..take]);
                filled += take;
                s = &s[take..];
                if filled == chunk {
                    out.push(Corpus::from_sentences(sentences.drain(..)));
                    filled = 0;
                }
            }
        }
        if !sentences.is_empty() {
            out.push(Corpus::from_sentences(sentences.drain(..)));
        }
        out
    }
}
