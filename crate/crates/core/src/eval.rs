//! Word-analogy evaluation, nearest neighbours, per-partition heatmaps and
//! ensemble re-ranking.
//!
//! Analogies are answered with 3CosAdd on unit vectors: the answer to
//! "a is to b as c is to ?" is the word closest in cosine to `b - a + c`,
//! excluding the three query words. Lookups are case-insensitive and
//! questions with an unknown word are skipped and counted.

use alloc::collections::BinaryHeap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;

use crate::kernels::{dot, norm};
use crate::layout::Style;
use crate::store::EmbeddingStore;
use crate::{Error, Real, Result};

/// Search limit of the reference evaluation script.
pub const DEFAULT_RESTRICT: usize = 30_000;
pub const DEFAULT_TOP_K: usize = 1000;
/// Heatmap cells within this many accuracy points of the row maximum tie.
pub const TIE_MARGIN: f64 = 0.01;

pub const SEMANTIC_CATEGORIES: [&str; 5] = [
    "capital-common-countries",
    "capital-world",
    "currency",
    "city-in-state",
    "family",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Semantic,
    Syntactic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Category {
    pub name: String,
    pub kind: Kind,
    pub questions: Vec<[String; 4]>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalogyDataset {
    pub categories: Vec<Category>,
}

impl AnalogyDataset {
    pub fn len(&self) -> usize {
        self.categories.iter().map(|c| c.questions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn kind_of(name: &str) -> Kind {
    if SEMANTIC_CATEGORIES.contains(&name) {
        Kind::Semantic
    } else {
        Kind::Syntactic
    }
}

/// Parses ": category" headers followed by four-word lines.
pub fn parse_analogy(text: &str) -> Result<AnalogyDataset> {
    let mut ds = AnalogyDataset::default();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix(':') {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty category name".into(),
                });
            }
            ds.categories.push(Category {
                name: name.to_string(),
                kind: kind_of(name),
                questions: Vec::new(),
            });
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: alloc::format!("expected 4 words, found {}", words.len()),
            });
        }
        let Some(cat) = ds.categories.last_mut() else {
            return Err(Error::Parse {
                line: line_no,
                message: "question before the first category header".into(),
            });
        };
        cat.questions
            .push([words[0].into(), words[1].into(), words[2].into(), words[3].into()]);
    }
    Ok(ds)
}

/// Unit-normalized word vectors with a case-insensitive index.
#[derive(Debug, Clone)]
pub struct Vectors {
    words: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    index: HashMap<String, u32>,
    limit: usize,
}

impl Vectors {
    /// `rows` holds `words.len()` vectors of `dim` values. Zero rows stay
    /// zero and never match anything.
    pub fn new(words: Vec<String>, dim: usize, mut rows: Vec<f32>) -> Result<Self> {
        if rows.len() != words.len() * dim {
            return Err(Error::Parameter(alloc::format!(
                "{} values for {} words of dimension {dim}",
                rows.len(),
                words.len()
            )));
        }
        if dim > 0 {
            for row in rows.chunks_exact_mut(dim) {
                let n = norm(row);
                if n > 0.0 {
                    row.iter_mut().for_each(|v| *v /= n);
                }
            }
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            index.entry(w.to_lowercase()).or_insert(i as u32);
        }
        let limit = words.len();
        Ok(Vectors {
            words,
            dim,
            data: rows,
            index,
            limit,
        })
    }

    /// Input embeddings of a trained store.
    pub fn from_store<T: Real>(words: Vec<String>, store: &EmbeddingStore<T>) -> Result<Self> {
        let rows = store.syn0().iter().map(|v| v.as_f64() as f32).collect();
        Self::new(words, store.dim(), rows)
    }

    /// Only the first `n` words are answer candidates. Queries may still
    /// use any word.
    pub fn restrict(mut self, n: usize) -> Self {
        self.limit = n.min(self.words.len());
        self
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        match self.index.get(word) {
            Some(&i) => Some(i),
            None => self.index.get(&word.to_lowercase()).copied(),
        }
    }

    pub fn row(&self, id: u32) -> &[f32] {
        &self.data[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    /// Cosine of `query` (any norm) with every candidate, best first.
    fn rank(&self, query: &[f32], k: usize, exclude: &[u32]) -> Vec<(u32, f32)> {
        let qn = norm(query);
        let inv = if qn > 0.0 { 1.0 / qn } else { 0.0 };
        top_k(
            (0..self.limit as u32)
                .filter(|id| !exclude.contains(id))
                .map(|id| (id, dot(query, self.row(id)) * inv)),
            k,
        )
    }
}

#[derive(Clone, Copy)]
struct Scored(u32, f32);

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scored {}
impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scored {
    /// Higher score first, then lower id; "greater" means "better".
    fn cmp(&self, other: &Self) -> Ordering {
        self.1.total_cmp(&other.1).then_with(|| other.0.cmp(&self.0))
    }
}

/// The `k` best `(id, score)` pairs, best first; equal scores keep the lower id.
pub fn top_k(items: impl Iterator<Item = (u32, f32)>, k: usize) -> Vec<(u32, f32)> {
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        let best = items.map(|(i, s)| Scored(i, s)).max();
        return best.map(|s| alloc::vec![(s.0, s.1)]).unwrap_or_default();
    }
    // min-heap of the current best k
    let mut heap: BinaryHeap<core::cmp::Reverse<Scored>> = BinaryHeap::with_capacity(k + 1);
    for (i, s) in items {
        let cand = Scored(i, s);
        if heap.len() < k {
            heap.push(core::cmp::Reverse(cand));
        } else if let Some(worst) = heap.peek() {
            if cand > worst.0 {
                heap.pop();
                heap.push(core::cmp::Reverse(cand));
            }
        }
    }
    let mut out: Vec<Scored> = heap.into_iter().map(|r| r.0).collect();
    out.sort_by(|a, b| b.cmp(a));
    out.into_iter().map(|s| (s.0, s.1)).collect()
}

/// `b - a + c` over unit vectors, or `None` when a word is unknown.
fn analogy_target(v: &Vectors, a: &str, b: &str, c: &str) -> Option<(Vec<f32>, [u32; 3])> {
    let (ia, ib, ic) = (v.id(a)?, v.id(b)?, v.id(c)?);
    let mut t: Vec<f32> = v.row(ib).to_vec();
    for (x, (ra, rc)) in t.iter_mut().zip(v.row(ia).iter().zip(v.row(ic))) {
        *x += rc - ra;
    }
    Some((t, [ia, ib, ic]))
}

/// The `k` best answers to "a : b :: c : ?", or `None` if a query word is
/// unknown.
pub fn answer_analogy(v: &Vectors, a: &str, b: &str, c: &str, k: usize) -> Option<Vec<(u32, f32)>> {
    let (t, ex) = analogy_target(v, a, b, c)?;
    Some(v.rank(&t, k, &ex))
}

/// Exact cosine k-NN of an arbitrary vector.
pub fn nearest(v: &Vectors, query: &[f32], k: usize, exclude: &[u32]) -> Result<Vec<(u32, f32)>> {
    if query.len() != v.dim() {
        return Err(Error::Parameter(alloc::format!(
            "query has {} values, vectors have {}",
            query.len(),
            v.dim()
        )));
    }
    if !(norm(query) > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(v.rank(query, k, exclude))
}

/// k-NN of a vocabulary word, excluding the word itself.
pub fn nearest_word(v: &Vectors, word: &str, k: usize) -> Result<Vec<(u32, f32)>> {
    let id = v.id(word).ok_or_else(|| Error::OutOfVocabulary(word.into()))?;
    nearest(v, v.row(id), k, &[id])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub correct: usize,
    pub attempted: usize,
    pub skipped: usize,
}

impl Tally {
    /// `correct / attempted`, or `None` when nothing was attempted.
    pub fn accuracy(&self) -> Option<f64> {
        (self.attempted > 0).then(|| self.correct as f64 / self.attempted as f64)
    }

    fn add(&mut self, o: &Tally) {
        self.correct += o.correct;
        self.attempted += o.attempted;
        self.skipped += o.skipped;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryResult {
    pub name: String,
    pub kind: Kind,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub categories: Vec<CategoryResult>,
}

impl EvalReport {
    fn rollup(&self, kind: Option<Kind>) -> Tally {
        let mut t = Tally::default();
        for c in &self.categories {
            if kind.is_none_or(|k| k == c.kind) {
                t.add(&c.tally);
            }
        }
        t
    }

    pub fn semantic(&self) -> Tally {
        self.rollup(Some(Kind::Semantic))
    }

    pub fn syntactic(&self) -> Tally {
        self.rollup(Some(Kind::Syntactic))
    }

    pub fn total(&self) -> Tally {
        self.rollup(None)
    }
}

/// Evaluates with any top-1 answering function; `answer` returns `None`
/// for a skipped question.
pub fn evaluate_with<F>(dataset: &AnalogyDataset, mut answer: F) -> EvalReport
where
    F: FnMut(Kind, &[String; 4]) -> Option<Option<String>>,
{
    let mut report = EvalReport::default();
    for cat in &dataset.categories {
        let mut tally = Tally::default();
        for q in &cat.questions {
            match answer(cat.kind, q) {
                None => tally.skipped += 1,
                Some(got) => {
                    tally.attempted += 1;
                    if got.is_some_and(|g| g.to_lowercase() == q[3].to_lowercase()) {
                        tally.correct += 1;
                    }
                }
            }
        }
        report.categories.push(CategoryResult {
            name: cat.name.clone(),
            kind: cat.kind,
            tally,
        });
    }
    report
}

/// A question counts as skipped when any of its four words is unknown.
pub fn evaluate(v: &Vectors, dataset: &AnalogyDataset) -> EvalReport {
    evaluate_with(dataset, |_, q| {
        v.id(&q[3])?;
        let best = answer_analogy(v, &q[0], &q[1], &q[2], 1)?;
        Some(best.first().map(|&(id, _)| v.word(id).to_string()))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapMode {
    /// Each partition on its own, renormalized.
    Slice,
    /// The full vector with one partition zeroed.
    Ablation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Window offset of each column.
    pub offsets: Vec<i32>,
    pub rows: Vec<(String, Kind)>,
    /// `rows x columns` accuracies; `None` when nothing was attempted.
    pub accuracy: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    /// Columns within [`TIE_MARGIN`] of the row maximum.
    pub fn best_columns(&self, row: usize) -> Vec<usize> {
        let cells = &self.accuracy[row];
        let Some(max) = cells.iter().flatten().cloned().reduce(f64::max) else {
            return Vec::new();
        };
        (0..cells.len())
            .filter(|&c| cells[c].is_some_and(|a| max - a <= TIE_MARGIN + 1e-12))
            .collect()
    }

    pub fn worst_column(&self, row: usize) -> Option<usize> {
        let cells = &self.accuracy[row];
        (0..cells.len())
            .filter(|&c| cells[c].is_some())
            .min_by(|&a, &b| cells[a].partial_cmp(&cells[b]).unwrap_or(Ordering::Equal))
    }
}

/// Category x partition accuracy of a windowed store's input embeddings.
pub fn partition_heatmap<T: Real>(
    words: &[String],
    store: &EmbeddingStore<T>,
    dataset: &AnalogyDataset,
    mode: HeatmapMode,
    restrict: usize,
) -> Result<Heatmap> {
    let layout = store.layout();
    if layout.style() != Style::Windowed || layout.embedding_partitions() < 2 {
        return Err(Error::HeatmapLayout);
    }
    let (rows, d, pd) = (store.rows(), store.dim(), layout.partition_dim());
    let parts = layout.embedding_partitions();
    let mut columns = Vec::with_capacity(parts);
    for p in 0..parts {
        let values: Vec<f32> = match mode {
            HeatmapMode::Slice => (0..rows)
                .flat_map(|r| store.syn0_slice(r, p).iter().map(|v| v.as_f64() as f32))
                .collect(),
            HeatmapMode::Ablation => {
                let mut all: Vec<f32> = store.syn0().iter().map(|v| v.as_f64() as f32).collect();
                for r in 0..rows {
                    all[r * d + p * pd..r * d + (p + 1) * pd].iter_mut().for_each(|v| *v = 0.0);
                }
                all
            }
        };
        let width = if mode == HeatmapMode::Slice { pd } else { d };
        let v = Vectors::new(words.to_vec(), width, values)?.restrict(restrict);
        columns.push(evaluate(&v, dataset));
    }
    let rows_meta: Vec<(String, Kind)> = dataset.categories.iter().map(|c| (c.name.clone(), c.kind)).collect();
    let accuracy = (0..rows_meta.len())
        .map(|r| columns.iter().map(|rep| rep.categories[r].tally.accuracy()).collect())
        .collect();
    Ok(Heatmap {
        offsets: (0..parts).filter_map(|p| layout.offset_of_partition(p)).collect(),
        rows: rows_meta,
        accuracy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Word,
    Diem,
}

pub struct Member<'a> {
    pub vectors: &'a Vectors,
    pub space: Space,
    /// Exponent of the sign-preserving power transform; 2 gives squared cosine.
    pub power: f64,
}

pub struct EnsembleSpec<'a> {
    pub members: Vec<Member<'a>>,
    pub top_k: usize,
    /// Character-space members only score syntactic questions.
    pub diem_syntactic_only: bool,
}

fn signed_pow(s: f64, p: f64) -> f64 {
    let m = libm::pow(s.abs(), p);
    if s < 0.0 {
        -m
    } else {
        m
    }
}

/// Re-ranks the `top_k` candidates of the first word-space member by the
/// summed power-transformed cosines of all participating members.
///
/// Returns `Ok(None)` when the first word-space member does not know a query
/// word. Other members that miss a word contribute nothing.
pub fn ensemble_query(
    spec: &EnsembleSpec<'_>,
    kind: Kind,
    a: &str,
    b: &str,
    c: &str,
) -> Result<Option<Vec<(String, f64)>>> {
    if spec.members.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    for m in &spec.members {
        if !(m.power > 0.0) {
            return Err(Error::Parameter("ensemble powers must be positive".into()));
        }
    }
    let lead = spec
        .members
        .iter()
        .find(|m| m.space == Space::Word)
        .ok_or_else(|| Error::Parameter("ensemble needs a word-space member".into()))?;
    let Some(candidates) = answer_analogy(lead.vectors, a, b, c, spec.top_k) else {
        return Ok(None);
    };
    let mut scores = alloc::vec![0.0f64; candidates.len()];
    for m in &spec.members {
        if m.space == Space::Diem && spec.diem_syntactic_only && kind != Kind::Syntactic {
            continue;
        }
        let Some((t, _)) = analogy_target(m.vectors, a, b, c) else {
            continue;
        };
        let tn = norm(&t);
        if !(tn > 0.0) {
            continue;
        }
        for (slot, &(id, _)) in scores.iter_mut().zip(&candidates) {
            let Some(mid) = m.vectors.id(lead.vectors.word(id)) else {
                continue;
            };
            let s = (dot(&t, m.vectors.row(mid)) / tn) as f64;
            *slot += signed_pow(s, m.power);
        }
    }
    let mut ranked: Vec<(String, f64)> = candidates
        .iter()
        .zip(scores)
        .map(|(&(id, _), s)| (lead.vectors.word(id).to_string(), s))
        .collect();
    // stable: ties keep the lead member's order
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1));
    Ok(Some(ranked))
}

pub fn evaluate_ensemble(spec: &EnsembleSpec<'_>, dataset: &AnalogyDataset) -> Result<EvalReport> {
    let mut failure = None;
    let report = evaluate_with(dataset, |kind, q| {
        let lead = spec.members.iter().find(|m| m.space == Space::Word)?;
        lead.vectors.id(&q[3])?;
        match ensemble_query(spec, kind, &q[0], &q[1], &q[2]) {
            Ok(r) => Some(r?.into_iter().next().map(|(w, _)| w)),
            Err(e) => {
                failure.get_or_insert(e);
                None
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None if !spec.members.iter().any(|m| m.space == Space::Word) => {
            Err(Error::Parameter("ensemble needs a word-space member".into()))
        }
        None => Ok(report),
    }
}
