use std::collections::HashMap;

use stress_core::{read_manifest, StressAnnotatedSentence};
use stress_datagen::dataset::draw_voice;
use stress_datagen::voice::VOICES;
use stress_datagen::{generate_dataset, GenerationConfig};

fn generate(n: usize, seed: u64) -> (tempfile::TempDir, stress_datagen::GeneratedDataset) {
    let dir = tempfile::tempdir().unwrap();
    let out = generate_dataset(&GenerationConfig::toy(n, seed, dir.path())).unwrap();
    (dir, out)
}

#[test]
fn hundred_sentences_give_expected_split() {
    let (dir, out) = generate(100, 3);
    let train = read_manifest(&out.train_manifest).unwrap();
    let test = read_manifest(&out.test_manifest).unwrap();
    assert_eq!(train.len(), 180);
    assert_eq!(test.len(), 10);
    assert!(out.report.skipped.is_empty(), "{:?}", out.report.skipped);

    let mut by_text: HashMap<&str, Vec<&stress_core::DatasetRecord>> = HashMap::new();
    for r in &train {
        by_text.entry(r.text.as_str()).or_default().push(r);
    }
    assert_eq!(by_text.len(), 90);
    for pair in by_text.values() {
        assert_eq!(pair.len(), 2);
        assert_ne!(pair[0].stress, pair[1].stress, "variants must differ");
    }
    for r in test.iter() {
        assert!(!by_text.contains_key(r.text.as_str()), "sentence leaked into both splits");
    }
    for r in train.iter().chain(&test) {
        r.validate().unwrap();
        StressAnnotatedSentence::new(&r.id, &r.text, &r.words, &r.stress, r.variant).unwrap();
        assert!(r.stress.contains(&1));
        assert!(r.word_start_s.windows(2).all(|w| w[0] < w[1]));
        assert!(dir.path().join(&r.audio).exists());
    }
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn generation_is_byte_identical() {
    let (a_dir, a) = generate(12, 99);
    let (b_dir, b) = generate(12, 99);
    for name in ["train.jsonl", "test.jsonl", "report.json"] {
        assert_eq!(
            std::fs::read(a_dir.path().join(name)).unwrap(),
            std::fs::read(b_dir.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
    for r in read_manifest(&a.train_manifest).unwrap() {
        assert_eq!(
            std::fs::read(a_dir.path().join(&r.audio)).unwrap(),
            std::fs::read(b_dir.path().join(&r.audio)).unwrap()
        );
    }
    let (_c_dir, c) = generate(12, 100);
    assert_ne!(
        std::fs::read(&a.train_manifest).unwrap(),
        std::fs::read(&c.train_manifest).unwrap()
    );
    drop(b);
}

#[test]
fn voices_are_close_to_uniform() {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let n = 5000;
    for i in 0..n {
        *counts.entry(draw_voice(7, &format!("s{:05}-v{}", i / 2, i % 2)).id).or_default() += 1;
    }
    for v in VOICES {
        let share = counts.get(v.id).copied().unwrap_or(0) as f64 / n as f64;
        assert!((0.05..=0.15).contains(&share), "{}: {share}", v.id);
    }
}

#[test]
fn llm_provider_without_transport_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = GenerationConfig::toy(5, 0, dir.path());
    cfg.provider = stress_datagen::dataset::ProviderChoice::Llm;
    assert!(matches!(
        generate_dataset(&cfg),
        Err(stress_datagen::DatagenError::Config(_))
    ));
}

#[test]
fn file_source_is_segmented() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("prose.txt");
    std::fs::write(&text, "Dr. Smith bought a red car. Ok then. The dog chased the ball happily!").unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"source": {"kind": "file", "path": "prose.txt"}, "train_fraction": 0.5, "seed": 1, "out_dir": "out"}"#,
    )
    .unwrap();
    let mut cfg = GenerationConfig::load(&cfg_path).unwrap();
    cfg.out_dir = dir.path().join("out");
    let out = generate_dataset(&cfg).unwrap();
    assert_eq!(out.report.sentences, 2);
    assert_eq!(out.report.produced_train + out.report.produced_test, 3);
}
