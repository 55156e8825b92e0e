//! Lock-free multi-threaded training.
//!
//! Every worker trains on its own contiguous slice of the corpus and writes
//! straight into the shared weight matrices without synchronization. Updates
//! are sparse, so collisions are rare and tolerated, as in word2vec. With one
//! thread the run is fully deterministic.

use penn_core::corpus::{Corpus, Vocabulary};
use penn_core::store::EmbeddingStore;
use penn_core::trainer::{train_observed, Progress, Schedule, Session, TrainConfig};

struct SharedStore(*mut EmbeddingStore<f32>);

// SAFETY: see `train_threads`. Workers only touch elements of the matrices
// and never resize them.
unsafe impl Send for SharedStore {}
unsafe impl Sync for SharedStore {}

/// Trains with `threads` workers, reporting progress through `report`.
pub fn train_threads(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    threads: usize,
    report: &(dyn Fn(&Progress) + Sync),
) -> penn_core::Result<EmbeddingStore<f32>> {
    let threads = threads.max(1).min(corpus.len().max(1));
    if threads == 1 {
        let mut obs = |p: &Progress| report(p);
        return train_observed(corpus, vocab, config, &mut obs);
    }
    let session = Session::<f32>::new(vocab, config)?;
    let mut store = session.initial_store();
    let parts = corpus.split(threads);
    let scheduled = corpus.len() as u64 * config.epochs as u64;
    let shared = SharedStore(&mut store);
    let shared = &shared;
    let session = &session;
    let results: Vec<penn_core::Result<_>> = std::thread::scope(|s| {
        let handles: Vec<_> = parts
            .iter()
            .enumerate()
            .map(|(worker, part)| {
                s.spawn(move || {
                    // SAFETY: the store outlives the scope. Workers race on
                    // individual f32 weights by design (asynchronous SGD);
                    // no worker reallocates or reads the matrices as a whole.
                    let store = unsafe { &mut *shared.0 };
                    let schedule = Schedule {
                        worker,
                        workers: threads,
                        scheduled,
                    };
                    let mut obs = |p: &Progress| report(p);
                    session.run_worker(store, part, schedule, None, &mut obs)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
    });
    for r in results {
        r?;
    }
    Ok(store)
}
