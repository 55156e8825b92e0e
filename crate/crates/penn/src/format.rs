//! On-disk formats.
//!
//! Model files are little-endian:
//!
//! ```text
//! magic "PENNMDL\0", version u32
//! style u8 (0 flat, 1 windowed, 2 directional, 3 shard), grouping u8
//! window u32, partition_dim u32, classifier_partitions u32, rows u64
//! offset i32 (shards only)
//! corpus_hash u64, config_hash u64, seed u64
//! total_tokens u64, then per word: length u32, UTF-8 bytes, count u64
//! syn0 (rows x D f32), syn1 (rows x classifier_dim f32)
//! ```
//!
//! A shard is stored as a single-partition model of width `P` whose header
//! still names the window of the run it belongs to.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use penn_core::corpus::Vocabulary;
use penn_core::diem::CharModel;
use penn_core::layout::{Grouping, PartitionLayout, Style};
use penn_core::parallel::{Provenance, Shard};
use penn_core::store::EmbeddingStore;

pub const MODEL_MAGIC: &[u8; 8] = b"PENNMDL\0";
pub const CHARS_MAGIC: &[u8; 8] = b"PENNCHR\0";
pub const VERSION: u32 = 1;
/// Upper bound on a single vocabulary entry, as a corruption guard.
const MAX_TOKEN_BYTES: u32 = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("not a penn model")]
    NotPenn,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("file is truncated")]
    Truncated,
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            FormatError::Truncated
        } else {
            FormatError::Io(e)
        }
    }
}

impl From<penn_core::Error> for FormatError {
    fn from(e: penn_core::Error) -> Self {
        FormatError::Corrupt(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// A trained word model: vocabulary, weights and where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub vocab: Vocabulary,
    pub store: EmbeddingStore<f32>,
    pub provenance: Provenance,
    /// Set for shard files: the offset and the full layout of the run.
    pub shard: Option<(i32, PartitionLayout)>,
}

impl Model {
    pub fn new(vocab: Vocabulary, store: EmbeddingStore<f32>, provenance: Provenance) -> Self {
        Model {
            vocab,
            store,
            provenance,
            shard: None,
        }
    }

    pub fn from_shard(vocab: Vocabulary, shard: Shard<f32>) -> Self {
        Model {
            vocab,
            store: shard.store,
            provenance: shard.provenance,
            shard: Some((shard.offset, shard.layout)),
        }
    }

    pub fn into_shard(self) -> Option<(Vocabulary, Shard<f32>)> {
        let (offset, layout) = self.shard?;
        Some((
            self.vocab,
            Shard {
                offset,
                layout,
                provenance: self.provenance,
                store: self.store,
            },
        ))
    }

    pub fn words(&self) -> Vec<String> {
        self.vocab.tokens().map(str::to_string).collect()
    }
}

fn style_code(style: Style) -> u8 {
    match style {
        Style::Flat => 0,
        Style::Windowed => 1,
        Style::Directional => 2,
    }
}

fn style_from(code: u8) -> Result<Style> {
    match code {
        0 => Ok(Style::Flat),
        1 => Ok(Style::Windowed),
        2 => Ok(Style::Directional),
        _ => Err(FormatError::Corrupt(format!("unknown style {code}"))),
    }
}

pub fn write_model<W: Write>(w: &mut W, model: &Model) -> Result<()> {
    let layout = model.store.layout();
    w.write_all(MODEL_MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    let (style, window, offset) = match model.shard {
        Some((offset, full)) => (3u8, full.window(), offset),
        None => (style_code(layout.style()), layout.window(), 0),
    };
    w.write_u8(style)?;
    w.write_u8(match layout.grouping() {
        Grouping::Average => 0,
        Grouping::Sum => 1,
    })?;
    w.write_u32::<LE>(window as u32)?;
    w.write_u32::<LE>(layout.partition_dim() as u32)?;
    w.write_u32::<LE>(layout.classifier_partitions() as u32)?;
    w.write_u64::<LE>(model.store.rows() as u64)?;
    w.write_i32::<LE>(offset)?;
    let p = &model.provenance;
    w.write_u64::<LE>(p.corpus_hash)?;
    w.write_u64::<LE>(p.config_hash)?;
    w.write_u64::<LE>(p.seed)?;
    w.write_u64::<LE>(model.vocab.total_tokens())?;
    for (token, count) in model.vocab.entries() {
        w.write_u32::<LE>(token.len() as u32)?;
        w.write_all(token.as_bytes())?;
        w.write_u64::<LE>(*count)?;
    }
    write_f32s(w, model.store.syn0())?;
    write_f32s(w, model.store.syn1())?;
    Ok(())
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(values.len().min(1 << 16) * 4);
    for chunk in values.chunks(1 << 16) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<Model> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| FormatError::NotPenn)?;
    if &magic != MODEL_MAGIC {
        return Err(FormatError::NotPenn);
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let style = r.read_u8()?;
    let grouping = match r.read_u8()? {
        0 => Grouping::Average,
        1 => Grouping::Sum,
        g => return Err(FormatError::Corrupt(format!("unknown grouping {g}"))),
    };
    let window = r.read_u32::<LE>()? as usize;
    let partition_dim = r.read_u32::<LE>()? as usize;
    let classifier_partitions = r.read_u32::<LE>()? as usize;
    let rows = r.read_u64::<LE>()? as usize;
    let offset = r.read_i32::<LE>()?;
    let provenance = Provenance {
        corpus_hash: r.read_u64::<LE>()?,
        config_hash: r.read_u64::<LE>()?,
        seed: r.read_u64::<LE>()?,
    };
    let (layout, shard) = if style == 3 {
        let full = PartitionLayout::windowed(window, partition_dim)?;
        full.partition_of(offset)?;
        (PartitionLayout::flat(window, partition_dim)?, Some((offset, full)))
    } else {
        let l = PartitionLayout::new(style_from(style)?, window, partition_dim)?
            .with_classifier_partitions(classifier_partitions)?
            .with_grouping(grouping);
        (l, None)
    };
    if layout.dim().checked_mul(rows).is_none_or(|n| n > isize::MAX as usize / 8) {
        return Err(FormatError::Corrupt("dimensions overflow".into()));
    }
    let total = r.read_u64::<LE>()?;
    let mut entries = Vec::with_capacity(rows.min(1 << 24));
    for _ in 0..rows {
        let len = r.read_u32::<LE>()?;
        if len > MAX_TOKEN_BYTES {
            return Err(FormatError::Corrupt(format!("token of {len} bytes")));
        }
        let mut bytes = vec![0u8; len as usize];
        r.read_exact(&mut bytes)?;
        let token = String::from_utf8(bytes).map_err(|_| FormatError::Corrupt("token is not UTF-8".into()))?;
        entries.push((token, r.read_u64::<LE>()?));
    }
    let vocab = Vocabulary::from_entries(entries, total)?;
    let syn0 = read_f32s(r, rows * layout.dim())?;
    let syn1 = read_f32s(r, rows * layout.classifier_dim())?;
    let store = EmbeddingStore::from_parts(layout, rows, syn0, syn1)?;
    Ok(Model {
        vocab,
        store,
        provenance,
        shard,
    })
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f32>> {
    let mut out = vec![0f32; n];
    r.read_f32_into::<LE>(&mut out)?;
    Ok(out)
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    let mut r = BufReader::new(File::open(path)?);
    let model = read_model(&mut r)?;
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(FormatError::Corrupt("trailing bytes after the weights".into()));
    }
    Ok(model)
}

/// word2vec-style text vectors: a `"<rows> <dim>"` header, then one word
/// and its values per line.
pub fn write_text_vectors<W: Write>(w: &mut W, words: &[String], dim: usize, values: &[f32]) -> Result<()> {
    writeln!(w, "{} {}", words.len(), dim)?;
    for (word, row) in words.iter().zip(values.chunks(dim.max(1))) {
        write!(w, "{word}")?;
        for v in row {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_text_vectors<R: BufRead>(r: R) -> Result<(Vec<String>, usize, Vec<f32>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(FormatError::Truncated)??;
    let mut parts = header.split_whitespace();
    let bad_header = || FormatError::Line {
        line: 1,
        message: "expected \"<rows> <dim>\"".into(),
    };
    let rows: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
    let dim: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
    let mut words = Vec::with_capacity(rows);
    let mut values = Vec::with_capacity(rows * dim);
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let word = it.next().unwrap_or_default().to_string();
        let before = values.len();
        for tok in it {
            values.push(tok.parse::<f32>().map_err(|_| FormatError::Line {
                line: n + 2,
                message: format!("bad value {tok:?}"),
            })?);
        }
        if values.len() - before != dim {
            return Err(FormatError::Line {
                line: n + 2,
                message: format!("expected {dim} values, found {}", values.len() - before),
            });
        }
        words.push(word);
    }
    if words.len() != rows {
        return Err(FormatError::Corrupt(format!("header announces {rows} rows, found {}", words.len())));
    }
    Ok((words, dim, values))
}

/// `#tokens <n> #total <total>` followed by `token<TAB>count` lines.
pub fn write_vocab<W: Write>(w: &mut W, vocab: &Vocabulary) -> Result<()> {
    writeln!(w, "#tokens {} #total {}", vocab.len(), vocab.total_tokens())?;
    for (t, c) in vocab.entries() {
        writeln!(w, "{t}\t{c}")?;
    }
    Ok(())
}

pub fn read_vocab<R: BufRead>(r: R) -> Result<Vocabulary> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(FormatError::Truncated)??;
    let f: Vec<&str> = header.split_whitespace().collect();
    let parsed = match f.as_slice() {
        ["#tokens", n, "#total", t] => n.parse::<usize>().ok().zip(t.parse::<u64>().ok()),
        _ => None,
    };
    let (n, total) = parsed.ok_or(FormatError::Line {
        line: 1,
        message: "expected \"#tokens <n> #total <total>\"".into(),
    })?;
    let mut entries = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let (t, c) = line.rsplit_once('\t').ok_or_else(|| FormatError::Line {
            line: i + 2,
            message: "expected token<TAB>count".into(),
        })?;
        let c = c.parse::<u64>().map_err(|_| FormatError::Line {
            line: i + 2,
            message: format!("bad count {c:?}"),
        })?;
        entries.push((t.to_string(), c));
    }
    if entries.len() != n {
        return Err(FormatError::Corrupt(format!("header announces {n} tokens, found {}", entries.len())));
    }
    Ok(Vocabulary::from_entries(entries, total)?)
}

/// Character vectors only; transforms are rebuilt on load.
pub fn write_char_model<W: Write>(w: &mut W, model: &CharModel<f32>) -> Result<()> {
    w.write_all(CHARS_MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    w.write_u32::<LE>(model.char_dim() as u32)?;
    w.write_u32::<LE>(model.multiple() as u32)?;
    w.write_u32::<LE>(model.chars().len() as u32)?;
    for &c in model.chars() {
        w.write_u32::<LE>(c as u32)?;
    }
    write_f32s(w, model.vectors())?;
    Ok(())
}

pub fn read_char_model<R: Read>(r: &mut R) -> Result<CharModel<f32>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| FormatError::NotPenn)?;
    if &magic != CHARS_MAGIC {
        return Err(FormatError::NotPenn);
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let char_dim = r.read_u32::<LE>()? as usize;
    let multiple = r.read_u32::<LE>()? as usize;
    let n = r.read_u32::<LE>()? as usize;
    if n > 1 << 21 || char_dim > 1 << 16 || multiple > 1 << 10 {
        return Err(FormatError::Corrupt("implausible character model header".into()));
    }
    let mut chars = Vec::with_capacity(n);
    for _ in 0..n {
        let code = r.read_u32::<LE>()?;
        chars.push(char::from_u32(code).ok_or_else(|| FormatError::Corrupt(format!("bad code point {code}")))?);
    }
    let vectors = read_f32s(r, n * char_dim)?;
    Ok(CharModel::new(chars, char_dim, multiple, vectors)?)
}

pub fn save_char_model(path: &Path, model: &CharModel<f32>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_char_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_char_model(path: &Path) -> Result<CharModel<f32>> {
    read_char_model(&mut BufReader::new(File::open(path)?))
}
