//! Reading corpora and analogy files from disk.

use std::path::Path;

use anyhow::Context;
use penn_core::corpus::{build_vocab, Corpus, TokenStream, Vocabulary};
use penn_core::eval::{parse_analogy, AnalogyDataset};
use penn_core::parallel::fnv1a;

/// A tokenized corpus with the vocabulary built from it.
pub struct Loaded {
    pub vocab: Vocabulary,
    pub corpus: Corpus,
    /// FNV-1a of the raw file bytes.
    pub hash: u64,
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_words(path: &Path, min_count: u64) -> anyhow::Result<Loaded> {
    let text = read_text(path)?;
    load_stream(&text, TokenStream::words(&text), min_count)
}

/// Character tokens, one sequence per word.
pub fn load_chars(path: &Path, min_count: u64) -> anyhow::Result<Loaded> {
    let text = read_text(path)?;
    load_stream(&text, TokenStream::chars(&text), min_count)
}

fn load_stream(text: &str, stream: TokenStream<'_>, min_count: u64) -> anyhow::Result<Loaded> {
    let vocab = build_vocab(&stream, min_count)?;
    let corpus = Corpus::from_stream(&stream, &vocab);
    log::info!(
        "{} tokens in the vocabulary, {} training tokens",
        vocab.len(),
        corpus.len()
    );
    Ok(Loaded {
        vocab,
        corpus,
        hash: fnv1a(text.as_bytes()),
    })
}

pub fn load_analogies(path: &Path) -> anyhow::Result<AnalogyDataset> {
    let text = read_text(path)?;
    parse_analogy(&text).with_context(|| format!("parsing {}", path.display()))
}
