use std::path::PathBuf;

use stress_datagen::build_synthesis_plan;
use stress_datagen::ssml::{emit_ssml, parse_ssml};

fn cases() -> Vec<(&'static str, Vec<&'static str>, Vec<u8>, bool)> {
    vec![
        ("single_stress", vec!["she", "bought", "apples"], vec![0, 1, 0], false),
        ("long_word", vec!["an", "extraordinary", "idea"], vec![0, 1, 0], false),
        ("two_stresses", vec!["Tom", "saw", "Ann", "today"], vec![1, 0, 1, 0], false),
        ("escaped", vec!["rock", "&", "<roll>"], vec![0, 0, 1], false),
        ("jittered", vec!["the", "green", "house", "stood"], vec![0, 0, 1, 0], true),
    ]
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.ssml"))
}

#[test]
fn emitted_ssml_matches_golden_files() {
    let bless = std::env::var_os("BLESS_GOLDEN").is_some();
    for (name, words, stress, noise) in cases() {
        let words: Vec<String> = words.into_iter().map(String::from).collect();
        let plan = build_synthesis_plan(&words, &stress, "f2", 17, noise).unwrap();
        let doc = emit_ssml(&plan);
        let path = golden_path(name);
        if bless {
            std::fs::write(&path, format!("{doc}\n")).unwrap();
        }
        let expected = std::fs::read_to_string(&path).unwrap();
        assert_eq!(doc, expected.trim_end(), "golden mismatch for {name}");
    }
}

#[test]
fn golden_files_parse_back_to_plan_values() {
    for (name, words, stress, noise) in cases() {
        let words: Vec<String> = words.into_iter().map(String::from).collect();
        let plan = build_synthesis_plan(&words, &stress, "f2", 17, noise).unwrap();
        let parsed = parse_ssml(&std::fs::read_to_string(golden_path(name)).unwrap()).unwrap();
        let stressed: Vec<usize> = (0..plan.len()).filter(|&i| plan.stress[i] == 1).collect();
        assert_eq!(parsed.len(), stressed.len(), "{name}");
        for (p, &i) in parsed.iter().zip(&stressed) {
            assert_eq!(p.word, plan.words[i]);
            assert!((p.rate_pct - (100.0 - plan.rate_reduction_pct[i])).abs() <= 0.05 + 1e-9);
            assert!((p.volume_db - plan.gain_db[i]).abs() <= 0.05 + 1e-9);
            assert!((p.pitch_st - plan.pitch_st[i]).abs() <= 0.05 + 1e-9);
        }
    }
}
