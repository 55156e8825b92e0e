//! Acceptance suite. Prints one line per criterion and fails if any check
//! fails. Criteria that need the large corpora read them from
//! `PENN_CORPUS` / `PENN_CHAR_CORPUS` (default `data/words.txt` and
//! `data/chars.txt` at the workspace root) and report SKIP when absent.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use penn::cli::{train_chars, train_model, CharArgs};
use penn::config::TrainOptions;
use penn::format::Model;
use penn_core::corpus::{build_vocab, Corpus, NegativeTable, TokenStream, Vocabulary};
use penn_core::diem::{build_transform, CharModel};
use penn_core::eval::{
    answer_analogy, evaluate, parse_analogy, partition_heatmap, AnalogyDataset, HeatmapMode, Kind, Vectors,
    DEFAULT_RESTRICT,
};
use penn_core::kernels::Sigmoid;
use penn_core::layout::{Grouping, PartitionLayout, Style};
use penn_core::parallel::{merge_shards, train_shard, Provenance};
use penn_core::rng::{stream, Rng, Stream};
use penn_core::store::EmbeddingStore;
use penn_core::trainer::{train, window_score, Objective, Stepper, TrainConfig};
use rand::Rng as _;

// pinned tolerances
const MERGE_TOKENS: usize = 100_000;
const FD_EPS: f64 = 1e-4;
const FD_MAX_REL: f64 = 1e-4;
const FD_CONFIGS: usize = 100;
const DIEM_REL: f64 = 1e-6;
const DIEM_DRAWS: usize = 1000;
const DIEM_MAX_LEN: usize = 30;
const CHANCE_MAX: f64 = 0.001;
const ORACLE_QUERIES: usize = 500;
const ORACLE_WORDS: usize = 10_000;
const PARALLELOGRAMS: usize = 1000;
const CANON_QUESTIONS: usize = 19_544;
const CANON_CATEGORIES: usize = 14;
const MIN_CHAR_CORPUS_BYTES: u64 = 50_000_000;
const VOWEL_MARGIN: f64 = 0.1;
const PLURAL_MARGIN: f64 = 0.2;
const ORDER_PAIRS: usize = 100;
const ORDER_MIN_FRACTION: f64 = 0.95;
const WORD_DIM: usize = 200;
const WORD_WINDOW: usize = 2;
// budget shared by both word models; see README
const WORD_EPOCHS: usize = 5;
const WORD_SUBSAMPLE: f64 = 1e-4;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data_path(var: &str, default: &str) -> PathBuf {
    std::env::var_os(var)
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace().join("data").join(default))
}

fn analogy_file() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/questions-words.txt")
}

fn canonical_dataset() -> AnalogyDataset {
    parse_analogy(&std::fs::read_to_string(analogy_file()).expect("analogy file")).expect("parse")
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

// 1 ------------------------------------------------------------------------

fn zipf_text(tokens: usize, types: usize, seed: u64) -> String {
    let mut rng = stream(seed, Stream::Traverse { worker: 99 });
    let weights: Vec<f64> = (1..=types).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let cdf: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();
    let mut out = String::new();
    let mut emitted = 0;
    while emitted < tokens {
        let len = rng.random_range(5..40).min(tokens - emitted);
        for i in 0..len {
            let u: f64 = rng.random();
            let r = cdf.partition_point(|&c| c < u).min(types - 1);
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("t{r}"));
        }
        out.push('\n');
        emitted += len;
    }
    out
}

fn shard_merge_identity() -> Verdict {
    let text = zipf_text(MERGE_TOKENS, 3000, 11);
    let stream_ = TokenStream::words(&text);
    let vocab = build_vocab(&stream_, 1).unwrap();
    let corpus = Corpus::from_stream(&stream_, &vocab);
    let mut cfg = TrainConfig::new(Objective::PennSkipGram, PartitionLayout::windowed(2, 8).unwrap());
    cfg.negatives = 3;
    cfg.table_size = 1_000_000;
    let whole: EmbeddingStore<f32> = train(&corpus, &vocab, &cfg).unwrap();
    let prov = Provenance::from_corpus(&corpus, &cfg);
    let shards: Vec<_> = [2, -2, 1, -1]
        .iter()
        .map(|&j| train_shard::<f32>(&corpus, &vocab, &cfg, j, prov).unwrap())
        .collect();
    let merged = merge_shards(&shards, false).unwrap();
    let same = |a: &[f32], b: &[f32]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
    let differing = whole.syn0().iter().zip(merged.syn0()).filter(|(a, b)| a.to_bits() != b.to_bits()).count()
        + whole.syn1().iter().zip(merged.syn1()).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    let moved = whole.syn1().iter().filter(|v| **v != 0.0).count();
    check(
        same(whole.syn0(), merged.syn0()) && same(whole.syn1(), merged.syn1()) && moved > 0,
        format!(
            "{} tokens, {} rows, {differing} differing values, {moved} trained classifier values",
            corpus.len(),
            vocab.len()
        ),
    )
}

// 2 ------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
enum StepKind {
    Cbow,
    SkipGram,
    Clow,
    PennSkipGram,
}

struct Micro {
    kind: StepKind,
    layout: PartitionLayout,
    rows: usize,
    cbow_mean: bool,
    // context words with offsets (offsets ignored by the flat objectives)
    context: Vec<(u32, i32)>,
    targets: Vec<(u32, bool)>,
}

fn random_layout(rng: &mut Rng, kind: StepKind) -> PartitionLayout {
    match kind {
        StepKind::Cbow | StepKind::SkipGram => PartitionLayout::flat(2, rng.random_range(1..=12)).unwrap(),
        StepKind::Clow | StepKind::PennSkipGram => {
            let c = rng.random_range(1..=3);
            let pd = rng.random_range(1..=5);
            let base = if rng.random_bool(0.5) {
                PartitionLayout::windowed(c, pd).unwrap()
            } else {
                PartitionLayout::directional(c, pd).unwrap()
            };
            let e = base.embedding_partitions();
            let divisors: Vec<usize> = (1..=e).filter(|q| e % q == 0).collect();
            let q = divisors[rng.random_range(0..divisors.len())];
            let g = if rng.random_bool(0.5) { Grouping::Average } else { Grouping::Sum };
            base.with_classifier_partitions(q).unwrap().with_grouping(g)
        }
    }
}

fn random_micro(rng: &mut Rng, kind: StepKind) -> Micro {
    let layout = random_layout(rng, kind);
    let rows = rng.random_range(6..=12);
    let k = rng.random_range(1..=4);
    let mut ids: Vec<u32> = (0..rows as u32).collect();
    for i in 0..=k {
        let j = rng.random_range(i..rows);
        ids.swap(i, j);
    }
    let targets: Vec<(u32, bool)> = ids[..=k].iter().enumerate().map(|(i, &t)| (t, i == 0)).collect();
    let c = layout.window() as i32;
    let context = match kind {
        StepKind::Cbow => (0..rng.random_range(1..=4))
            .map(|_| (rng.random_range(0..rows as u32), 0))
            .collect(),
        StepKind::SkipGram => vec![(rng.random_range(0..rows as u32), 0)],
        StepKind::Clow => {
            let mut offs: Vec<i32> = (-c..=c).filter(|&j| j != 0 && rng.random_bool(0.7)).collect();
            if offs.is_empty() {
                offs.push(if rng.random_bool(0.5) { -1 } else { 1 });
            }
            offs.into_iter().map(|j| (rng.random_range(0..rows as u32), j)).collect()
        }
        StepKind::PennSkipGram => {
            let mut j = rng.random_range(-c..=c);
            if j == 0 {
                j = 1;
            }
            vec![(rng.random_range(0..rows as u32), j)]
        }
    };
    Micro {
        kind,
        layout,
        rows,
        cbow_mean: rng.random_bool(0.5),
        context,
        targets,
    }
}

fn log_sigmoid(z: f64) -> f64 {
    if z > 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Negative-sampling loss written straight from the definitions.
fn micro_loss(m: &Micro, syn0: &[f64], syn1: &[f64]) -> f64 {
    let l = &m.layout;
    let (d, cd, pd) = (l.dim(), l.classifier_dim(), l.partition_dim());
    // hidden vector laid out like a classifier row; `live` marks scored slices
    let mut hidden = vec![0.0; cd];
    let mut live = vec![false; cd];
    match m.kind {
        StepKind::Cbow => {
            for &(w, _) in &m.context {
                for x in 0..d {
                    hidden[x] += syn0[w as usize * d + x];
                }
            }
            if m.cbow_mean {
                hidden.iter_mut().for_each(|h| *h /= m.context.len() as f64);
            }
            live.iter_mut().for_each(|v| *v = true);
        }
        StepKind::SkipGram => {
            let w = m.context[0].0 as usize;
            hidden.copy_from_slice(&syn0[w * d..(w + 1) * d]);
            live.iter_mut().for_each(|v| *v = true);
        }
        StepKind::Clow | StepKind::PennSkipGram => {
            let mut counts = vec![0usize; l.classifier_partitions()];
            for &(w, j) in &m.context {
                let (e, q) = l.partition_of(j).unwrap();
                for x in 0..pd {
                    hidden[q * pd + x] += syn0[w as usize * d + e * pd + x];
                    live[q * pd + x] = true;
                }
                counts[q] += 1;
            }
            if l.grouping() == Grouping::Average {
                for (q, &n) in counts.iter().enumerate() {
                    if n > 1 {
                        hidden[q * pd..(q + 1) * pd].iter_mut().for_each(|h| *h /= n as f64);
                    }
                }
            }
        }
    }
    m.targets
        .iter()
        .map(|&(t, label)| {
            let f: f64 = (0..cd)
                .filter(|&x| live[x])
                .map(|x| hidden[x] * syn1[t as usize * cd + x])
                .sum();
            -log_sigmoid(if label { f } else { -f })
        })
        .sum()
}

/// Largest norm-wise relative error between the update direction of one
/// step and a central-difference gradient of `micro_loss`.
fn gradient_error(m: &Micro, rng: &mut Rng, table: &NegativeTable, sigmoid: &Sigmoid<f64>) -> (f64, f64) {
    let l = m.layout;
    let n0 = m.rows * l.dim();
    let n1 = m.rows * l.classifier_dim();
    let scale = 1.0 / (l.partition_dim() as f64).sqrt();
    let syn0: Vec<f64> = (0..n0).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
    let syn1: Vec<f64> = (0..n1).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
    let mut store = EmbeddingStore::from_parts(l, m.rows, syn0.clone(), syn1.clone()).unwrap();
    let lr = 0.5;
    let mut stepper = Stepper::new(table, sigmoid, m.targets.len() - 1).with_cbow_mean(m.cbow_mean);
    let reported = match m.kind {
        StepKind::Cbow => {
            let ctx: Vec<u32> = m.context.iter().map(|c| c.0).collect();
            stepper.cbow_with_targets(&mut store, &ctx, &m.targets, lr)
        }
        StepKind::SkipGram => stepper.sg_with_targets(&mut store, m.context[0].0, &m.targets, lr),
        StepKind::Clow => stepper.clow_with_targets(&mut store, &m.context, &m.targets, lr).unwrap(),
        StepKind::PennSkipGram => {
            let (e, q) = l.partition_of(m.context[0].1).unwrap();
            stepper.penn_sg_with_targets(&mut store, m.context[0].0, e, q, &m.targets, lr)
        }
    };
    let analytic: Vec<f64> = syn0
        .iter()
        .zip(store.syn0())
        .chain(syn1.iter().zip(store.syn1()))
        .map(|(before, after)| (before - after) / lr)
        .collect();
    let mut params: Vec<f64> = syn0.iter().chain(&syn1).copied().collect();
    let loss_at = |p: &[f64]| micro_loss(m, &p[..n0], &p[n0..]);
    let base = loss_at(&params);
    let mut numeric = vec![0.0; params.len()];
    for i in 0..params.len() {
        let keep = params[i];
        params[i] = keep + FD_EPS;
        let up = loss_at(&params);
        params[i] = keep - FD_EPS;
        let down = loss_at(&params);
        params[i] = keep;
        numeric[i] = (up - down) / (2.0 * FD_EPS);
    }
    let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let rel = diff / na.max(nn).max(1e-300);
    let loss_err = (reported - base).abs() / base.abs().max(1e-300);
    (rel, loss_err)
}

fn gradient_check() -> Verdict {
    let vocab = Vocabulary::from_entries((0..12).map(|i| (format!("w{i}"), 100 - i as u64)).collect(), 1134).unwrap();
    let table = NegativeTable::build(&vocab, 0.75, 10_000).unwrap();
    let sigmoid = Sigmoid::<f64>::exact();
    let mut rng = stream(2, Stream::Traverse { worker: 7 });
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [StepKind::Cbow, StepKind::SkipGram, StepKind::Clow, StepKind::PennSkipGram] {
        let mut worst = 0.0f64;
        let mut worst_loss = 0.0f64;
        for _ in 0..FD_CONFIGS {
            let m = random_micro(&mut rng, kind);
            let (rel, loss_err) = gradient_error(&m, &mut rng, &table, &sigmoid);
            worst = worst.max(rel);
            worst_loss = worst_loss.max(loss_err);
        }
        ok &= worst < FD_MAX_REL && worst_loss < 1e-12;
        parts.push(format!("{kind:?} max rel {worst:.1e}"));
    }
    check(ok, format!("{} configs each; {}", FD_CONFIGS, parts.join(", ")))
}

// 3 ------------------------------------------------------------------------

fn diem_equivalence() -> Verdict {
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz".chars().collect();
    let (char_dim, multiple) = (8, 10);
    let mut rng = stream(3, Stream::Traverse { worker: 0 });
    let mut worst = 0.0f64;
    let transforms: Vec<_> = (1..=DIEM_MAX_LEN)
        .map(|len| build_transform::<f64>(len, multiple, char_dim).unwrap())
        .collect();
    for draw in 0..DIEM_DRAWS {
        let vectors: Vec<f64> = (0..alphabet.len() * char_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = CharModel::new(alphabet.clone(), char_dim, multiple, vectors).unwrap();
        // every length each draw would be 30k words; cycle lengths instead,
        // and cover all of them in the first draws
        let lens: Vec<usize> = if draw == 0 { (1..=DIEM_MAX_LEN).collect() } else { vec![1 + draw % DIEM_MAX_LEN] };
        for len in lens {
            let word: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
            let direct = model.interpolate(&word).unwrap();
            let stacked: Vec<f64> = word.chars().flat_map(|c| model.char_vector(c).to_vec()).collect();
            let mut via = vec![0.0; model.dim()];
            transforms[len - 1].apply(&stacked, &mut via);
            let cached = model.transform_apply(&word).unwrap();
            // weight (1 - |M*i/I - m| / M)^2, written out independently
            let mut formula = vec![0.0; model.dim()];
            for (i, ch) in word.chars().enumerate() {
                for m in 0..multiple {
                    let s = (multiple as f64 * i as f64 / len as f64 - m as f64).abs() / multiple as f64;
                    let w = (1.0 - s).powi(2);
                    for (k, x) in model.char_vector(ch).iter().enumerate() {
                        formula[m * char_dim + k] += w * x;
                    }
                }
            }
            let scale = direct.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
            for i in 0..direct.len() {
                let d = direct[i];
                worst = worst
                    .max((d - via[i]).abs() / scale)
                    .max((d - cached[i]).abs() / scale)
                    .max((d - formula[i]).abs() / scale);
            }
        }
    }
    let hand = CharModel::new(vec!['a', 'b'], 2, 2, vec![1.0f64, 0.0, 0.0, 1.0]).unwrap();
    let hand_vec = hand.interpolate("ab").unwrap();
    let exact = hand_vec == [1.0, 0.25, 0.25, 1.0] && hand.transform_apply("ab").unwrap() == hand_vec;
    check(
        worst < DIEM_REL && exact,
        format!("lengths 1..={DIEM_MAX_LEN}, {DIEM_DRAWS} draws, max rel {worst:.1e}, hand example {hand_vec:?}"),
    )
}

// 4 ------------------------------------------------------------------------

fn gaussian(rng: &mut Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

fn unit(rng: &mut Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_space(rng: &mut Rng, words: Vec<String>, dim: usize) -> (Vectors, Vec<Vec<f64>>) {
    let rows: Vec<Vec<f64>> = (0..words.len()).map(|_| unit(rng, dim)).collect();
    let flat = rows.iter().flatten().map(|&x| x as f32).collect();
    (Vectors::new(words, dim, flat).unwrap(), rows)
}

fn evaluator_checks() -> Verdict {
    let mut rng = stream(4, Stream::Traverse { worker: 0 });
    let dim = 64;

    // exact parallelograms: d = b - a + c over unit vectors
    let mut words = Vec::new();
    let mut rows = Vec::new();
    let mut text = String::from(": gram-parallelogram\n");
    for i in 0..PARALLELOGRAMS {
        let (a, b, c) = (unit(&mut rng, dim), unit(&mut rng, dim), unit(&mut rng, dim));
        let d: Vec<f64> = (0..dim).map(|x| b[x] - a[x] + c[x]).collect();
        let names = [0, 1, 2, 3].map(|k| format!("q{i}x{k}"));
        text.push_str(&names.join(" "));
        text.push('\n');
        words.extend(names);
        rows.extend([a, b, c, d]);
    }
    let flat = rows.iter().flatten().map(|&x| x as f32).collect();
    let space = Vectors::new(words, dim, flat).unwrap();
    let para = evaluate(&space, &parse_analogy(&text).unwrap()).total();

    // brute-force oracle in f64
    let names: Vec<String> = (0..ORACLE_WORDS).map(|i| format!("r{i}")).collect();
    let (space, rows) = random_space(&mut rng, names, dim);
    let mut agree = 0;
    for _ in 0..ORACLE_QUERIES {
        let mut q = [0usize; 3];
        while q[0] == q[1] || q[1] == q[2] || q[0] == q[2] {
            q = [0, 1, 2].map(|_| rng.random_range(0..ORACLE_WORDS));
        }
        let target: Vec<f64> = (0..dim).map(|x| rows[q[1]][x] - rows[q[0]][x] + rows[q[2]][x]).collect();
        let mut scores: Vec<(usize, f64)> = (0..ORACLE_WORDS)
            .filter(|i| !q.contains(i))
            .map(|i| (i, cosine(&target, &rows[i])))
            .collect();
        scores.sort_by(|a, b| b.1.total_cmp(&a.1));
        let got = answer_analogy(&space, &format!("r{}", q[0]), &format!("r{}", q[1]), &format!("r{}", q[2]), 1)
            .unwrap()[0]
            .0 as usize;
        // f32 vs f64 can only disagree on a near tie
        if got == scores[0].0 || (scores[0].1 - cosine(&target, &rows[got])) < 1e-6 {
            agree += 1;
        }
    }

    // chance level: canonical questions over a random space
    let dataset = canonical_dataset();
    let mut vocab: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for c in &dataset.categories {
        for q in &c.questions {
            for w in q {
                if seen.insert(w.to_lowercase()) {
                    vocab.push(w.to_lowercase());
                }
            }
        }
    }
    let mut i = 0;
    while vocab.len() < ORACLE_WORDS {
        vocab.push(format!("filler{i}"));
        i += 1;
    }
    let (space, _) = random_space(&mut rng, vocab, dim);
    let chance = evaluate(&space, &dataset).total();
    let chance_acc = chance.accuracy().unwrap_or(0.0);

    check(
        para.accuracy() == Some(1.0) && agree == ORACLE_QUERIES && chance_acc < CHANCE_MAX,
        format!(
            "parallelograms {}/{}, oracle agreement {agree}/{ORACLE_QUERIES}, random {:.3}% ({}/{})",
            para.correct,
            para.attempted,
            100.0 * chance_acc,
            chance.correct,
            chance.attempted
        ),
    )
}

// 5 ------------------------------------------------------------------------

fn canonical_parse() -> Verdict {
    let ds = canonical_dataset();
    let semantic = ds.categories.iter().filter(|c| c.kind == Kind::Semantic).count();
    check(
        ds.len() == CANON_QUESTIONS && ds.categories.len() == CANON_CATEGORIES && semantic == 5,
        format!("{} questions, {} categories ({semantic} semantic)", ds.len(), ds.categories.len()),
    )
}

// 6, 7 ---------------------------------------------------------------------

fn char_model() -> &'static Result<CharModel<f32>, String> {
    static MODEL: OnceLock<Result<CharModel<f32>, String>> = OnceLock::new();
    MODEL.get_or_init(|| {
        let corpus = data_path("PENN_CHAR_CORPUS", "chars.txt");
        let size = std::fs::metadata(&corpus).map(|m| m.len()).unwrap_or(0);
        if size < MIN_CHAR_CORPUS_BYTES {
            return Err(format!("{} missing or under 50MB", corpus.display()));
        }
        let args = CharArgs {
            corpus,
            out: PathBuf::new(),
            char_dim: penn_core::diem::DEFAULT_CHAR_DIM,
            multiple: penn_core::diem::DEFAULT_MULTIPLE,
            window: penn_core::diem::DEFAULT_CHAR_WINDOW,
            min_count: penn_core::diem::DEFAULT_CHAR_MIN_COUNT,
            epochs: 1,
            negatives: 5,
            subsample: None,
            seed: 1,
            threads: 1,
        };
        train_chars(&args).map_err(|e| format!("{e:#}"))
    })
}

fn character_clusters() -> Verdict {
    let model = match char_model() {
        Ok(m) => m,
        Err(e) => return Verdict::Skip(e.clone()),
    };
    let vec_of = |c: char| widen(model.char_vector(c));
    let vowels = ['a', 'e', 'i', 'o', 'u'];
    let digits: Vec<char> = ('0'..='9').collect();
    if !vowels.iter().chain(&digits).all(|&c| model.knows(c)) {
        return Verdict::Fail("a vowel or digit is missing from the character vocabulary".into());
    }
    let mut intra = Vec::new();
    for (i, &a) in vowels.iter().enumerate() {
        for &b in &vowels[i + 1..] {
            intra.push(cosine(&vec_of(a), &vec_of(b)));
        }
    }
    let cross: Vec<f64> = vowels
        .iter()
        .flat_map(|&v| digits.iter().map(move |&d| (v, d)))
        .map(|(v, d)| cosine(&vec_of(v), &vec_of(d)))
        .collect();
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let (mi, mc) = (mean(&intra), mean(&cross));
    let one = vec_of('1');
    let nearest = model
        .chars()
        .iter()
        .filter(|&&c| c != '1')
        .map(|&c| (c, cosine(&one, &vec_of(c))))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    check(
        mi - mc >= VOWEL_MARGIN && nearest.0.is_ascii_digit(),
        format!(
            "vowel-vowel {mi:.3}, vowel-digit {mc:.3}, nearest to '1' is {:?} ({:.3}), {} characters",
            nearest.0,
            nearest.1,
            model.chars().len()
        ),
    )
}

const PLURALS: &str = "cat cats dog dogs car cars book books house houses tree trees bird birds road roads \
river rivers king kings queen queens city cities country countries family families baby babies \
story stories party parties body bodies lady ladies army armies enemy enemies box boxes church churches \
bus buses glass glasses dish dishes wish wishes match matches class classes tax taxes fox foxes \
hand hands eye eyes year years day days boy boys key keys way ways word words name names game games \
table tables chair chairs door doors window windows wall walls floor floors street streets town towns \
village villages island islands mountain mountains lake lakes horse horses cow cows goat goats \
lion lions snake snakes apple apples banana bananas bottle bottles cup cups plate plates spoon spoons \
shirt shirts shoe shoes hat hats coat coats ring rings stone stones flower flowers garden gardens \
field fields farm farms school schools student students teacher teachers doctor doctors friend friends \
brother brothers sister sisters father fathers mother mothers son sons daughter daughters girl girls \
song songs letter letters paper papers file files function functions module modules value values \
number numbers string strings object objects method methods error errors line lines point points";

fn word_vocab() -> &'static Result<Vec<String>, String> {
    static WORDS: OnceLock<Result<Vec<String>, String>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let path = data_path("PENN_CORPUS", "words.txt");
        let loaded = penn::data::load_words(&path, 5).map_err(|e| format!("{e:#}"))?;
        Ok(loaded.vocab.tokens().take(DEFAULT_RESTRICT).map(str::to_string).collect())
    })
}

fn diem_plurals() -> Verdict {
    let model = match char_model() {
        Ok(m) => m,
        Err(e) => return Verdict::Skip(e.clone()),
    };
    let words = match word_vocab() {
        Ok(w) => w,
        Err(e) => return Verdict::Skip(e.clone()),
    };
    let list: Vec<&str> = PLURALS.split_whitespace().collect();
    assert_eq!(list.len(), 200, "plural list must hold 100 pairs");
    let embed = |w: &str| widen(&model.interpolate(w).unwrap());
    let pairs: Vec<f64> = list.chunks(2).map(|p| cosine(&embed(p[0]), &embed(p[1]))).collect();
    let mut rng = stream(7, Stream::Traverse { worker: 0 });
    let random: Vec<f64> = (0..100)
        .map(|_| {
            let a = rng.random_range(0..words.len());
            let mut b = rng.random_range(0..words.len());
            while b == a {
                b = rng.random_range(0..words.len());
            }
            cosine(&embed(&words[a]), &embed(&words[b]))
        })
        .collect();
    let mp = pairs.iter().sum::<f64>() / 100.0;
    let mr = random.iter().sum::<f64>() / 100.0;
    check(
        mp - mr >= PLURAL_MARGIN,
        format!("plural pairs {mp:.3}, random pairs {mr:.3}, gap {:.3}", mp - mr),
    )
}

// 8 ------------------------------------------------------------------------

fn order_sensitivity() -> Verdict {
    let mut rng = stream(8, Stream::Traverse { worker: 0 });
    let fillers = 300;
    let reversed = |w: &[String]| {
        w.windows(2)
            .any(|p| p[0].starts_with('p') && p[0].ends_with('b') && p[1] == format!("{}a", &p[0][..p[0].len() - 1]))
    };
    let mut text = String::new();
    let mut rejected = 0;
    let mut kept = 0;
    while kept < 12_000 {
        let mut sent: Vec<String> = (0..20).map(|_| format!("f{}", rng.random_range(0..fillers))).collect();
        for _ in 0..2 {
            let p = rng.random_range(0..ORDER_PAIRS);
            let at = rng.random_range(0..=sent.len());
            sent.splice(at..at, [format!("p{p}a"), format!("p{p}b")]);
        }
        // two copies of one bigram side by side would spell the reversed order
        if reversed(&sent) {
            rejected += 1;
            continue;
        }
        text.push_str(&sent.join(" "));
        text.push('\n');
        kept += 1;
    }
    let ts = TokenStream::words(&text);
    let vocab = build_vocab(&ts, 1).unwrap();
    let corpus = Corpus::from_stream(&ts, &vocab);
    let reversed_seen = text.lines().any(|l| reversed(&l.split(' ').map(str::to_string).collect::<Vec<_>>()));

    let mut clow = TrainConfig::new(Objective::Clow, PartitionLayout::windowed(1, 16).unwrap());
    clow.subsample = None;
    clow.epochs = 5;
    clow.table_size = 1_000_000;
    let clow_store: EmbeddingStore<f32> = train(&corpus, &vocab, &clow).unwrap();

    let mut cbow = TrainConfig::new(Objective::Cbow, PartitionLayout::flat(1, 32).unwrap());
    cbow.subsample = None;
    cbow.epochs = 5;
    cbow.table_size = 1_000_000;
    cbow.cbow_mean = false;
    let cbow_store: EmbeddingStore<f32> = train(&corpus, &vocab, &cbow).unwrap();

    let mut wins = 0;
    let mut blind = true;
    let f = vocab.id("f0").unwrap();
    for p in 0..ORDER_PAIRS {
        let a = vocab.id(&format!("p{p}a")).unwrap();
        let b = vocab.id(&format!("p{p}b")).unwrap();
        // P(b | a on its left) against P(b | a on its right)
        let attested = window_score(&clow_store, Objective::Clow, true, b, &[(a, -1)]).unwrap();
        let reversed = window_score(&clow_store, Objective::Clow, true, b, &[(a, 1)]).unwrap();
        if attested > reversed {
            wins += 1;
        }
        let s1 = window_score(&cbow_store, Objective::Cbow, false, b, &[(a, -1)]).unwrap();
        let s2 = window_score(&cbow_store, Objective::Cbow, false, b, &[(a, 1)]).unwrap();
        let s3 = window_score(&cbow_store, Objective::Cbow, false, b, &[(a, -1), (f, 1)]).unwrap();
        let s4 = window_score(&cbow_store, Objective::Cbow, false, b, &[(f, -1), (a, 1)]).unwrap();
        blind &= s1.to_bits() == s2.to_bits() && s3.to_bits() == s4.to_bits();
    }
    let frac = wins as f64 / ORDER_PAIRS as f64;
    check(
        !reversed_seen && frac >= ORDER_MIN_FRACTION && blind,
        format!(
            "{} tokens ({rejected} sentences regenerated); CLOW prefers the attested order for {wins}/{ORDER_PAIRS}; \
             summed CBOW scores identical: {blind}",
            corpus.len()
        ),
    )
}

// 9, 10 --------------------------------------------------------------------

struct WordRun {
    cbow: f64,
    clow: f64,
    clow_model: Model,
}

fn word_models() -> &'static Result<WordRun, String> {
    static RUN: OnceLock<Result<WordRun, String>> = OnceLock::new();
    RUN.get_or_init(|| {
        let corpus = data_path("PENN_CORPUS", "words.txt");
        if !corpus.exists() {
            return Err(format!("{} missing", corpus.display()));
        }
        let dataset = canonical_dataset();
        let fit = |objective: &str| -> Result<(Model, f64), String> {
            let opts = TrainOptions {
                objective: Some(objective.into()),
                window: Some(WORD_WINDOW),
                dim: Some(WORD_DIM),
                epochs: Some(WORD_EPOCHS),
                subsample: Some(WORD_SUBSAMPLE),
                ..Default::default()
            };
            let resolved = opts.resolve().map_err(|e| format!("{e:#}"))?;
            let model = train_model(&corpus, &resolved).map_err(|e| format!("{e:#}"))?;
            let v = Vectors::from_store(model.words(), &model.store)
                .map_err(|e| e.to_string())?
                .restrict(DEFAULT_RESTRICT);
            let acc = evaluate(&v, &dataset).syntactic().accuracy().unwrap_or(0.0);
            Ok((model, acc))
        };
        let (_, cbow) = fit("cbow")?;
        let (clow_model, clow) = fit("clow")?;
        Ok(WordRun { cbow, clow, clow_model })
    })
}

fn clow_beats_cbow() -> Verdict {
    let run = match word_models() {
        Ok(r) => r,
        Err(e) => return Verdict::Skip(e.clone()),
    };
    check(
        run.clow > run.cbow,
        format!(
            "syntactic accuracy CLOW {:.2}% vs CBOW {:.2}% (D={WORD_DIM}, c={WORD_WINDOW}, {} rows)",
            100.0 * run.clow,
            100.0 * run.cbow,
            run.clow_model.store.rows()
        ),
    )
}

fn adjacent_partition_heatmap() -> Verdict {
    let run = match word_models() {
        Ok(r) => r,
        Err(e) => return Verdict::Skip(e.clone()),
    };
    let m = &run.clow_model;
    if m.store.layout().style() != Style::Windowed {
        return Verdict::Fail("criterion 9 model is not windowed".into());
    }
    let h = partition_heatmap(&m.words(), &m.store, &canonical_dataset(), HeatmapMode::Slice, DEFAULT_RESTRICT).unwrap();
    let mut winners = Vec::new();
    for (r, (name, kind)) in h.rows.iter().enumerate() {
        if *kind != Kind::Syntactic {
            continue;
        }
        let best = |near: bool| {
            h.offsets
                .iter()
                .zip(&h.accuracy[r])
                .filter(|(j, _)| (j.abs() == 1) == near)
                .filter_map(|(_, a)| *a)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let (near, far) = (best(true), best(false));
        if near > 0.0 && near > far {
            winners.push((near - far, format!("{name} {:.1}% vs {:.1}%", 100.0 * near, 100.0 * far)));
        }
    }
    winners.sort_by(|a, b| b.0.total_cmp(&a.0));
    check(
        !winners.is_empty(),
        format!(
            "{} syntactic categories peak at |j|=1 (strictly above |j|=2){}",
            winners.len(),
            winners.first().map(|w| format!(", widest {}", w.1)).unwrap_or_default()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("shard merge equals single process", shard_merge_identity),
        ("analytic gradients match finite differences", gradient_check),
        ("DIEM loop equals cached transform", diem_equivalence),
        ("analogy evaluator against oracles", evaluator_checks),
        ("canonical analogy file parse", canonical_parse),
        ("character clusters", character_clusters),
        ("DIEM plural signal", diem_plurals),
        ("CLOW order sensitivity", order_sensitivity),
        ("CLOW syntactic accuracy above CBOW", clow_beats_cbow),
        ("heatmap peaks at adjacent offsets", adjacent_partition_heatmap),
    ];
    let only: Option<usize> = std::env::var("PENN_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n:>2} {tag}  {name}: {detail} [{secs:.1}s]");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
