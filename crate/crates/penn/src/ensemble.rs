//! Ensemble description files and loading of member vectors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use penn_core::diem::diem_vectors_for_vocab;
use penn_core::eval::{EnsembleSpec, Member, Space, Vectors, DEFAULT_TOP_K};
use serde::{Deserialize, Serialize};

use crate::format::{load_char_model, load_model, read_text_vectors};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberFile {
    /// Model file (`.model`) or text vectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Character model; vectors are built for the lead member's words.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chars: Option<PathBuf>,
    #[serde(default = "word_space")]
    pub space: String,
    #[serde(default = "unit_power")]
    pub power: f64,
}

fn word_space() -> String {
    "word".into()
}

fn unit_power() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "yes")]
    pub diem_syntactic_only: bool,
    #[serde(default, rename = "member")]
    pub members: Vec<MemberFile>,
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

fn yes() -> bool {
    true
}

impl EnsembleFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut spec: EnsembleFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for m in &mut spec.members {
            for p in [&mut m.path, &mut m.chars].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(spec)
    }
}

/// Word vectors from a model file (input embeddings) or a text file.
pub fn load_vectors(path: &Path) -> anyhow::Result<Vectors> {
    let is_model = std::fs::File::open(path)
        .map(|mut f| {
            use std::io::Read;
            let mut m = [0u8; 8];
            f.read_exact(&mut m).is_ok() && &m == crate::format::MODEL_MAGIC
        })
        .with_context(|| format!("opening {}", path.display()))?;
    if is_model {
        let model = load_model(path).with_context(|| format!("loading {}", path.display()))?;
        Ok(Vectors::from_store(model.words(), &model.store)?)
    } else {
        let f = std::fs::File::open(path)?;
        let (words, dim, values) = read_text_vectors(std::io::BufReader::new(f))
            .with_context(|| format!("reading vectors from {}", path.display()))?;
        Ok(Vectors::new(words, dim, values)?)
    }
}

/// DIEM vectors for `words` from a character model file.
pub fn diem_for_words(chars: &Path, words: &[String]) -> anyhow::Result<Vectors> {
    let model = load_char_model(chars).with_context(|| format!("loading {}", chars.display()))?;
    let (values, failed) = diem_vectors_for_vocab(words.iter().map(String::as_str), &model);
    for w in failed {
        log::warn!("no character vector for {w:?}; using zeros");
    }
    Ok(Vectors::new(words.to_vec(), model.dim(), values)?)
}

/// Member vectors in file order, the first word-space member leading.
pub struct LoadedEnsemble {
    pub vectors: Vec<(Vectors, Space, f64)>,
    pub top_k: usize,
    pub diem_syntactic_only: bool,
}

impl LoadedEnsemble {
    pub fn load(spec: &EnsembleFile, restrict: usize) -> anyhow::Result<Self> {
        if spec.members.is_empty() {
            bail!("ensemble has no members");
        }
        let mut vectors: Vec<Option<(Vectors, Space, f64)>> = Vec::new();
        let mut pending = Vec::new();
        for (i, m) in spec.members.iter().enumerate() {
            let space = match m.space.as_str() {
                "word" => Space::Word,
                "diem" => Space::Diem,
                s => bail!("unknown member space {s:?}"),
            };
            if !(m.power > 0.0) {
                bail!("member {i}: power must be positive");
            }
            match (&m.path, &m.chars) {
                (Some(p), None) => {
                    let mut v = load_vectors(p)?;
                    if space == Space::Word && restrict > 0 {
                        v = v.restrict(restrict);
                    }
                    vectors.push(Some((v, space, m.power)));
                }
                (None, Some(c)) => {
                    pending.push((i, c.clone(), space, m.power));
                    vectors.push(None);
                }
                _ => bail!("member {i}: give exactly one of `path` and `chars`"),
            }
        }
        let lead_words = vectors
            .iter()
            .flatten()
            .find(|v| v.1 == Space::Word)
            .map(|v| v.0.words().to_vec())
            .context("ensemble needs a word-space member")?;
        for (i, c, space, power) in pending {
            vectors[i] = Some((diem_for_words(&c, &lead_words)?, space, power));
        }
        Ok(LoadedEnsemble {
            vectors: vectors.into_iter().flatten().collect(),
            top_k: spec.top_k,
            diem_syntactic_only: spec.diem_syntactic_only,
        })
    }

    pub fn spec(&self) -> EnsembleSpec<'_> {
        EnsembleSpec {
            members: self
                .vectors
                .iter()
                .map(|(v, space, power)| Member {
                    vectors: v,
                    space: *space,
                    power: *power,
                })
                .collect(),
            top_k: self.top_k,
            diem_syntactic_only: self.diem_syntactic_only,
        }
    }
}
