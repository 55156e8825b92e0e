use std::path::Path;

use penn::config::TrainOptions;
use penn::pipeline::{run, Outcome, PipelineFile};

fn setup(dir: &Path, dim: usize) -> std::path::PathBuf {
    let mut text = String::new();
    for i in 0..200 {
        let a = ["king", "queen", "man", "woman"][i % 4];
        text.push_str(&format!("the {a} walks and the {a} talks\n"));
    }
    std::fs::write(dir.join("corpus.txt"), text).unwrap();
    std::fs::write(dir.join("q.txt"), ": family\nking queen man woman\n: gram8-plural\nman men king kings\n").unwrap();
    let toml = format!(
        r#"
corpus = "corpus.txt"
analogies = "q.txt"
out_dir = "out"
restrict = 0

[defaults]
min_count = 1
table_size = 10000
subsample = 0

[[member]]
name = "windowed"
train = {{ style = "windowed", window = 1, dim = {dim} }}

[[member]]
name = "directional"
power = 0.5
train = {{ style = "directional", window = 2, dim = 8 }}

[diem]
char_dim = 4
multiple = 2
min_count = 1
"#
    );
    let p = dir.join("pipeline.toml");
    std::fs::write(&p, toml).unwrap();
    p
}

fn outcomes(path: &Path) -> Vec<(String, Outcome)> {
    run(path).unwrap().outcomes
}

#[test]
fn second_run_reuses_every_member() {
    let dir = tempfile::tempdir().unwrap();
    let p = setup(dir.path(), 8);
    let first = outcomes(&p);
    assert!(first.iter().all(|(_, o)| *o == Outcome::Trained), "{first:?}");
    assert_eq!(first.len(), 3);
    let second = outcomes(&p);
    assert!(second.iter().all(|(_, o)| *o == Outcome::Reused), "{second:?}");
    let report = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(report.contains("TOTAL,rollup"));
}

#[test]
fn corrupt_or_changed_members_are_retrained() {
    let dir = tempfile::tempdir().unwrap();
    let p = setup(dir.path(), 8);
    outcomes(&p);

    let model = dir.path().join("out/directional.model");
    let bytes = std::fs::read(&model).unwrap();
    std::fs::write(&model, &bytes[..bytes.len() / 2]).unwrap();
    std::fs::write(dir.path().join("out/diem.chars"), b"garbage").unwrap();
    let got = outcomes(&p);
    assert_eq!(
        got,
        vec![
            ("windowed".to_string(), Outcome::Reused),
            ("directional".to_string(), Outcome::Trained),
            ("diem".to_string(), Outcome::Trained),
        ]
    );

    // a new width changes the configuration hash of one member only
    setup(dir.path(), 6);
    let got = outcomes(&p);
    assert_eq!(got[0], ("windowed".to_string(), Outcome::Trained));
    assert_eq!(got[1].1, Outcome::Reused);
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "corpus = \"c\"\nanalogies = \"q\"\nout_dir = \"o\"\nwindoww = 3\n").unwrap();
    let err = PipelineFile::load(&p).unwrap_err();
    assert!(format!("{err:#}").contains("windoww"), "{err:#}");
}

#[test]
fn train_options_round_trip_through_toml() {
    let opts = TrainOptions {
        objective: Some("pennsg".into()),
        style: Some("windowed".into()),
        window: Some(3),
        partition_dim: Some(7),
        negatives: Some(4),
        lr: Some(0.03),
        subsample: Some(1e-4),
        seed: Some(9),
        exact_sigmoid: Some(true),
        ..Default::default()
    };
    let back = TrainOptions::from_toml(&opts.to_toml()).unwrap();
    assert_eq!(back, opts);
    let r = back.resolve().unwrap();
    assert_eq!(r.train.layout.dim(), 42);
    assert_eq!(r.train.subsample, Some(1e-4));
    // the canonical text is what the pipeline hashes
    assert_eq!(r.canonical(), opts.resolve().unwrap().canonical());
}

#[test]
fn shipped_recipe_lists_six_members_and_diem() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table5.toml");
    let p = PipelineFile::load(&path).unwrap();
    let shapes: Vec<(String, usize, usize)> = p
        .members
        .iter()
        .map(|m| {
            let r = p.defaults.layered(&m.train).resolve().unwrap();
            let style = format!("{:?}", r.train.layout.style());
            (style, r.train.layout.window(), r.train.layout.dim())
        })
        .collect();
    let expected = [
        ("Windowed", 10, 500),
        ("Directional", 5, 500),
        ("Windowed", 2, 2000),
        ("Directional", 5, 2000),
        ("Directional", 10, 2000),
        ("Directional", 1, 500),
    ];
    assert_eq!(shapes.len(), expected.len());
    for (got, want) in shapes.iter().zip(expected) {
        assert_eq!((got.0.as_str(), got.1, got.2), want);
    }
    let d = p.diem.expect("diem member");
    assert_eq!(d.char_dim * d.multiple, 320);
}
