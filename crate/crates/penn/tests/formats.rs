use std::io::Cursor;

use penn::format::{
    load_model, read_char_model, read_model, read_text_vectors, read_vocab, save_model, write_char_model, write_model,
    write_text_vectors, write_vocab, FormatError, Model, MODEL_MAGIC,
};
use penn_core::corpus::{build_vocab, Corpus, TokenStream};
use penn_core::diem::CharModel;
use penn_core::layout::PartitionLayout;
use penn_core::parallel::{train_shard, Provenance};
use penn_core::trainer::{train, Objective, TrainConfig};

const TEXT: &str = "the cat sat on the mat\nthe dog sat on the log\na cat and a dog\n";

fn small_model() -> Model {
    let ts = TokenStream::words(TEXT);
    let vocab = build_vocab(&ts, 1).unwrap();
    let corpus = Corpus::from_stream(&ts, &vocab);
    let mut cfg = TrainConfig::new(Objective::Clow, PartitionLayout::windowed(2, 3).unwrap());
    cfg.table_size = 1000;
    cfg.subsample = None;
    let store = train(&corpus, &vocab, &cfg).unwrap();
    Model::new(vocab, store, Provenance::new(TEXT.as_bytes(), &cfg))
}

fn encode(m: &Model) -> Vec<u8> {
    let mut buf = Vec::new();
    write_model(&mut buf, m).unwrap();
    buf
}

#[test]
fn model_round_trip() {
    let m = small_model();
    let back = read_model(&mut Cursor::new(encode(&m))).unwrap();
    assert_eq!(back, m);
}

#[test]
fn shard_keeps_offset_and_full_layout() {
    let ts = TokenStream::words(TEXT);
    let vocab = build_vocab(&ts, 1).unwrap();
    let corpus = Corpus::from_stream(&ts, &vocab);
    let mut cfg = TrainConfig::new(Objective::PennSkipGram, PartitionLayout::windowed(2, 4).unwrap());
    cfg.table_size = 1000;
    let prov = Provenance::from_corpus(&corpus, &cfg);
    let shard = train_shard::<f32>(&corpus, &vocab, &cfg, -2, prov).unwrap();
    let m = Model::from_shard(vocab, shard.clone());
    let back = read_model(&mut Cursor::new(encode(&m))).unwrap();
    let (_, s) = back.into_shard().expect("still a shard");
    assert_eq!(s, shard);
}

#[test]
fn every_truncation_is_reported() {
    let bytes = encode(&small_model());
    for cut in 0..bytes.len() {
        match read_model(&mut Cursor::new(&bytes[..cut])) {
            Err(FormatError::Truncated) => {}
            // a cut inside the magic looks like some other file
            Err(FormatError::NotPenn) if cut < MODEL_MAGIC.len() => {}
            other => panic!("cut at {cut}: {other:?}"),
        }
    }
}

#[test]
fn foreign_and_future_files_are_rejected() {
    let err = read_model(&mut Cursor::new(b"hello world, not a model".to_vec())).unwrap_err();
    assert_eq!(err.to_string(), "not a penn model");
    let mut bytes = encode(&small_model());
    bytes[8..12].copy_from_slice(&99u32.to_le_bytes());
    assert!(matches!(read_model(&mut Cursor::new(bytes)), Err(FormatError::Version(99))));
}

#[test]
fn trailing_bytes_are_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.model");
    save_model(&path, &small_model()).unwrap();
    assert!(load_model(&path).is_ok());
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.push(0);
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(load_model(&path), Err(FormatError::Corrupt(_))));
}

#[test]
fn text_vectors_round_trip() {
    let words = vec!["a".to_string(), "bb".to_string()];
    let values = vec![0.5f32, -1.25, 3.0, 1e-7];
    let mut buf = Vec::new();
    write_text_vectors(&mut buf, &words, 2, &values).unwrap();
    assert!(String::from_utf8(buf.clone()).unwrap().starts_with("2 2\n"));
    let (w, d, v) = read_text_vectors(Cursor::new(buf)).unwrap();
    assert_eq!((w, d, v), (words, 2, values));
}

#[test]
fn short_vector_line_names_its_line() {
    let err = read_text_vectors(Cursor::new("2 3\na 1 2 3\nb 1 2\n")).unwrap_err();
    assert!(matches!(err, FormatError::Line { line: 3, .. }), "{err:?}");
}

#[test]
fn vocab_round_trip() {
    let m = small_model();
    let mut buf = Vec::new();
    write_vocab(&mut buf, &m.vocab).unwrap();
    assert_eq!(read_vocab(Cursor::new(buf)).unwrap(), m.vocab);
}

#[test]
fn char_model_round_trip() {
    let vectors: Vec<f32> = (0..6).map(|i| i as f32 * 0.5 - 1.0).collect();
    let m = CharModel::new(vec!['x', 'y', 'é'], 2, 3, vectors).unwrap();
    let mut buf = Vec::new();
    write_char_model(&mut buf, &m).unwrap();
    let back = read_char_model(&mut Cursor::new(buf)).unwrap();
    assert_eq!(back.chars(), m.chars());
    assert_eq!(back.vectors(), m.vectors());
    assert_eq!(back.multiple(), 3);
    assert_eq!(back.interpolate("xéy").unwrap(), m.interpolate("xéy").unwrap());
}
