//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. The toy pipeline shares one generated corpus and backbone.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stress_backbone::{pretrain_toy_backbone, LayeredAsr, PretrainConfig, ToyBackbone};
use stress_core::seed::derive_seed;
use stress_core::{
    aggregate_token_to_word, align_stress_labels, f1_score, precision_recall_f1, read_manifest, write_manifest,
    AlignOutcome, StressAnnotatedSentence, Tokenized, WordPrediction, NO_WORD,
};
use stress_datagen::ssml::{emit_ssml, parse_ssml};
use stress_datagen::synth::{synthesize_toy, word_samples};
use stress_datagen::{build_synthesis_plan, generate_dataset, GenerationConfig};
use stress_eval::{
    evaluate_baseline, evaluate_stress_head, train_baseline, AlignSource, BaselineTrainOptions, Comparison, EvalReport,
};
use stress_head::{layer_sweep, train_head, HeadConfig, HeadTrainReport, StressHead, TrainOptions};
use stress_nn::{Matrix, ParamId};
use stress_probe::{compute_f0, compute_rms, probe_layer, probe_report, ProbeTarget};

const DATA_SEED: u64 = 7;
const BACKBONE_SEED: u64 = 1;
const HEAD_SEED: u64 = 0;
const SENTENCES: usize = 1200;
const TEST_SENTENCES: usize = 200;
const F1_GATE: f64 = 0.85;
const RUNTIME_BUDGET_S: f64 = 20.0 * 60.0;

/// Criteria that cannot pass with their pinned tolerance whatever the
/// implementation does. They still print FAIL but do not fail the run.
const KNOWN_UNATTAINABLE: [(usize, &str); 1] = [(
    1,
    "the printed (0.953, 0.968) pair yields F1 0.96044 and misses 0.961 by 0.00056 > 0.0005; \
     the printed F1 was computed from unrounded precision and recall",
)];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Shared state of the toy pipeline.
struct Pipeline {
    _dir: tempfile::TempDir,
    root: PathBuf,
    train: PathBuf,
    test: PathBuf,
    backbone: ToyBackbone<f32>,
    head: StressHead<f32>,
    head_report: HeadTrainReport,
    head_eval: EvalReport,
}

/// F1 range over the rounding cells of printed 3-decimal P and R.
fn f1_rounding_range(p: f64, r: f64) -> (f64, f64) {
    let f = |a: f64, b: f64| f1_score(a, b);
    (f(p - 0.0005, r - 0.0005), f(p + 0.0005, r + 0.0005))
}

fn c1_metric_arithmetic() -> Check {
    let mut lines = Vec::new();
    let mut misses = Vec::new();
    for (p, r, expected) in [(0.912, 0.906, 0.909), (0.953, 0.968, 0.961), (0.573, 0.863, 0.689)] {
        let f = f1_score(p, r);
        lines.push(format!("({p}, {r}) -> {f:.5}"));
        if (f - expected).abs() > 0.0005 {
            let (lo, hi) = f1_rounding_range(p, r);
            misses.push(format!(
                "F1({p}, {r}) = {f:.5} is {:.5} from the printed {expected}; unrounded P, R within the \
                 printed precision give F1 in [{lo:.5}, {hi:.5}], so the printed F1 is consistent with the \
                 table but not reachable from its rounded inputs",
                (f - expected).abs()
            ));
        }
    }
    // The same identity through the counting path.
    let pred = WordPrediction::new(
        (0..4).map(|i| format!("w{i}")).collect(),
        vec![1, 1, 0, 0],
        Some(vec![1, 0, 1, 0]),
    )
    .map_err(|e| e.to_string())?;
    let m = precision_recall_f1(&[pred]).map_err(|e| e.to_string())?;
    ensure(m.f1 == f1_score(m.precision, m.recall), "counting path breaks the F1 identity")?;
    if misses.is_empty() {
        Ok(lines.join(", "))
    } else {
        Err(format!("{}; {}", lines.join(", "), misses.join("; ")))
    }
}

fn c2_pipeline() -> Result<(Pipeline, String), String> {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("corpus");
    let mut gen = GenerationConfig::toy(SENTENCES, DATA_SEED, &root);
    gen.train_fraction = (SENTENCES - TEST_SENTENCES) as f64 / SENTENCES as f64;
    let data = generate_dataset(&gen).map_err(|e| e.to_string())?;
    let (n_train, n_test) = (data.report.produced_train, data.report.produced_test);
    ensure(n_train >= 2000 && n_test >= 200, format!("corpus too small: {n_train} train / {n_test} test"))?;

    let (backbone, pre) = pretrain_toy_backbone::<f32>(&data.train_manifest, &PretrainConfig::default(), BACKBONE_SEED)
        .map_err(|e| e.to_string())?;
    let acc = pre.final_heldout_word_accuracy;
    ensure(acc >= 0.9, format!("held-out word accuracy {acc:.4} < 0.9"))?;

    let c = backbone.config();
    let cfg = HeadConfig::for_backbone(c.d_model, c.n_heads, c.ffn_dim, c.n_encoder_layers, c.n_decoder_layers, None)
        .map_err(|e| e.to_string())?;
    let opts = TrainOptions {
        epochs: 4,
        seed: HEAD_SEED,
        ..TrainOptions::default()
    };
    let (head, head_report) = train_head(&backbone, &data.train_manifest, cfg, &opts).map_err(|e| e.to_string())?;
    let head_eval = evaluate_stress_head(&backbone, &head, &data.test_manifest).map_err(|e| e.to_string())?;
    let seconds = started.elapsed().as_secs_f64();
    let f1 = head_eval.metrics.f1;
    let detail = format!(
        "{n_train} train / {n_test} test, word accuracy {acc:.4}, layer {}/{}, test F1 {f1:.4} \
         (P {:.4}, R {:.4}, {} evaluated, {} excluded), {seconds:.0} s",
        head.config().input_layer_enc,
        head.config().input_layer_dec,
        head_eval.metrics.precision,
        head_eval.metrics.recall,
        head_eval.n_evaluated,
        head_eval.n_excluded,
    );
    let pipeline = Pipeline {
        _dir: dir,
        root,
        train: data.train_manifest,
        test: data.test_manifest,
        backbone,
        head,
        head_report,
        head_eval,
    };
    if f1 < F1_GATE || seconds > RUNTIME_BUDGET_S {
        return Err(format!("{detail}; gate F1 >= {F1_GATE} within {RUNTIME_BUDGET_S} s"));
    }
    Ok((pipeline, detail))
}

fn c3_frozen(p: &Pipeline) -> Check {
    let r = &p.head_report;
    let now = p.backbone.digest();
    ensure(
        r.backbone_digest_before == r.backbone_digest_after && r.backbone_digest_after == now,
        format!("{} -> {} (now {now})", r.backbone_digest_before, r.backbone_digest_after),
    )?;
    Ok(format!("digest {} unchanged", &now[..16]))
}

fn c4_gradients() -> Check {
    let cfg = HeadConfig {
        input_layer_enc: 1,
        input_layer_dec: 1,
        d_model: 8,
        n_heads: 1,
        ffn_dim: 16,
        classifier_hidden: 8,
        dropout: 0.0,
        use_block: true,
        positive_weight: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut random = |r: usize, c: usize| {
        Matrix::<f64>::from_vec(r, c, (0..r * c).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
    };
    let (enc, dec) = (random(6, 8), random(5, 8));
    let labels = [0, 1, 0, 0, 1];
    let mut head = StressHead::<f64>::new(cfg, "none", 9).map_err(|e| e.to_string())?;
    let loss = |head: &StressHead<f64>| head.loss_and_grads(&enc, &dec, &labels).map(|r| r.0).unwrap();
    let (_, grads) = head.loss_and_grads(&enc, &dec, &labels).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for p in 0..head.params().len() {
        let id = ParamId(p);
        for k in 0..head.params().get(id).len() {
            let orig = head.params().get(id).data()[k];
            head.params_mut().get_mut(id).data_mut()[k] = orig + h;
            let up = loss(&head);
            head.params_mut().get_mut(id).data_mut()[k] = orig - h;
            let down = loss(&head);
            head.params_mut().get_mut(id).data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[k]);
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
            checked += 1;
        }
    }
    ensure(worst <= 1e-3, format!("max relative error {worst:.3e} over {checked} parameters"))?;
    Ok(format!("max relative error {worst:.3e} over {checked} parameters"))
}

/// Every valid word-index map over `n` tokens.
fn index_maps(n: usize) -> Vec<Vec<i32>> {
    fn rec(n: usize, cur: Vec<i32>, words: i32, out: &mut Vec<Vec<i32>>) {
        if cur.len() == n {
            out.push(cur);
            return;
        }
        let mut punct = cur.clone();
        punct.push(NO_WORD);
        rec(n, punct, words, out);
        let mut next = cur.clone();
        next.push(words);
        rec(n, next, words + 1, out);
        if let Some(&prev) = cur.last() {
            if prev != NO_WORD {
                let mut cont = cur;
                cont.push(prev);
                rec(n, cont, words, out);
            }
        }
    }
    let mut out = Vec::new();
    rec(n, Vec::new(), 0, &mut out);
    out
}

fn n_words(map: &[i32]) -> usize {
    map.iter().filter(|&&w| w >= 0).map(|&w| w as usize + 1).max().unwrap_or(0)
}

fn c5_alignment() -> Check {
    let (mut agg, mut aligned) = (0u64, 0u64);
    for n in 0..=10 {
        for map in index_maps(n) {
            let words = n_words(&map);
            for mask in 0u32..(1 << n) {
                let labels: Vec<u8> = (0..n).map(|t| ((mask >> t) & 1) as u8).collect();
                let oracle: Vec<u8> = (0..words)
                    .map(|w| u8::from((0..n).any(|t| map[t] == w as i32 && labels[t] == 1)))
                    .collect();
                let got = aggregate_token_to_word(&labels, &map).map_err(|e| e.to_string())?;
                ensure(got == oracle, format!("aggregation differs for {map:?} {labels:?}"))?;
                agg += 1;
            }
            let hyp = Tokenized {
                tokens: (0..n).map(|t| format!("t{t}")).collect(),
                word_index: map.clone(),
            };
            for gold_words in [words.saturating_sub(1), words, words + 1] {
                if gold_words == 0 {
                    continue;
                }
                let names: Vec<String> = (0..gold_words).map(|w| format!("w{w}")).collect();
                for mask in 0u32..(1 << gold_words) {
                    let stress: Vec<u8> = (0..gold_words).map(|w| ((mask >> w) & 1) as u8).collect();
                    let gold = StressAnnotatedSentence::new_relaxed("g", names.join(" "), &names, &stress, 0)
                        .map_err(|e| e.to_string())?;
                    let outcome = align_stress_labels(&gold, &hyp).map_err(|e| e.to_string())?;
                    let ok = match outcome {
                        AlignOutcome::Rejected { .. } => gold_words != words,
                        AlignOutcome::Aligned(a) => {
                            let expected: Vec<u8> = map
                                .iter()
                                .map(|&w| if w == NO_WORD { 0 } else { stress[w as usize] })
                                .collect();
                            gold_words == words
                                && a.token_labels == expected
                                && aggregate_token_to_word(&a.token_labels, &a.word_index).ok() == Some(stress.clone())
                        }
                    };
                    ensure(ok, format!("alignment differs for {map:?} vs {stress:?}"))?;
                    aligned += 1;
                }
            }
        }
    }
    Ok(format!("{agg} aggregation and {aligned} alignment cases agree with brute force"))
}

fn segment(wave: &[f32], start_s: f64, len: usize) -> &[f32] {
    let s = (start_s * 16_000.0).round() as usize;
    &wave[s..(s + len).min(wave.len())]
}

fn rms_db(x: &[f32]) -> f64 {
    let ms = x.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>() / x.len() as f64;
    10.0 * ms.log10()
}

fn median_f0(x: &[f32]) -> Option<f64> {
    let f0 = compute_f0(x, 16_000);
    let mut v: Vec<f64> = (0..f0.len()).filter(|&i| f0.voiced[i]).map(|i| f0.values[i]).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

fn c6_acoustics() -> Check {
    const WORDS: [&str; 25] = [
        "as", "it", "cat", "dog", "green", "house", "apples", "little", "garden", "morning", "river", "yellow",
        "window", "quietly", "tomorrow", "bright", "stone", "teacher", "basket", "wonderful", "sun", "paper",
        "forest", "magnificent", "extraordinary",
    ];
    let voices = ["f0", "m2"];
    let (mut min_db, mut min_st, mut max_st) = (f64::MAX, f64::MAX, f64::MIN);
    let mut pairs = 0;
    for (k, word) in WORDS.iter().enumerate() {
        for voice in voices {
            let seed = derive_seed(k as u64, voice);
            let words = vec!["x".to_string(), word.to_string()];
            let render = |stress: [u8; 2]| -> Result<(Vec<f32>, f64, usize), String> {
                let plan = build_synthesis_plan(&words, &stress, voice, seed, false).map_err(|e| e.to_string())?;
                let s = synthesize_toy(&plan).map_err(|e| e.to_string())?;
                Ok((s.waveform, s.word_start_s[1], word_samples(&plan, 1)))
            };
            let (ws, ss, ls) = render([0, 1])?;
            let (wu, su, lu) = render([1, 0])?;
            let (a, b) = (segment(&ws, ss, ls), segment(&wu, su, lu));
            let db = rms_db(a) - rms_db(b);
            let (fs, fu) = (median_f0(a), median_f0(b));
            let (Some(fs), Some(fu)) = (fs, fu) else {
                return Err(format!("{word}/{voice}: no voiced frames"));
            };
            let st = 12.0 * (fs / fu).log2();
            ensure(db >= 2.0, format!("{word}/{voice}: RMS gain {db:.2} dB < 2"))?;
            ensure(ls > lu, format!("{word}/{voice}: duration {ls} !> {lu} samples"))?;
            ensure((st - 1.5).abs() <= 0.3, format!("{word}/{voice}: F0 shift {st:.3} st"))?;
            min_db = min_db.min(db);
            min_st = min_st.min(st);
            max_st = max_st.max(st);
            pairs += 1;
        }
    }
    Ok(format!(
        "{pairs} pairs: RMS gain >= {min_db:.2} dB, longer in all, F0 shift {min_st:.3}..{max_st:.3} st"
    ))
}

fn c7_ssml() -> Check {
    let cases: [(&str, &[&str], &[u8], bool); 5] = [
        ("single_stress", &["she", "bought", "apples"], &[0, 1, 0], false),
        ("long_word", &["an", "extraordinary", "idea"], &[0, 1, 0], false),
        ("two_stresses", &["Tom", "saw", "Ann", "today"], &[1, 0, 1, 0], false),
        ("escaped", &["rock", "&", "<roll>"], &[0, 0, 1], false),
        ("jittered", &["the", "green", "house", "stood"], &[0, 0, 1, 0], true),
    ];
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../datagen/tests/golden");
    for (name, words, stress, noise) in cases {
        let words: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        let plan = build_synthesis_plan(&words, stress, "f2", 17, noise).map_err(|e| e.to_string())?;
        let doc = emit_ssml(&plan);
        let golden = std::fs::read_to_string(dir.join(format!("{name}.ssml"))).map_err(|e| format!("{name}: {e}"))?;
        ensure(format!("{doc}\n") == golden, format!("{name}: emitted SSML differs from golden"))?;
        let parsed = parse_ssml(&golden).map_err(|e| e.to_string())?;
        let stressed: Vec<usize> = (0..plan.len()).filter(|&i| plan.stress[i] == 1).collect();
        ensure(parsed.len() == stressed.len(), format!("{name}: stressed word count"))?;
        for (p, &i) in parsed.iter().zip(&stressed) {
            let close = |a: f64, b: f64| (a - b).abs() <= 0.05 + 1e-9;
            ensure(
                p.word == plan.words[i]
                    && close(p.rate_pct, 100.0 - plan.rate_reduction_pct[i])
                    && close(p.volume_db, plan.gain_db[i])
                    && close(p.pitch_st, plan.pitch_st[i]),
                format!("{name}: attributes of {} do not round-trip", plan.words[i]),
            )?;
        }
    }
    Ok("5 golden documents byte-identical, attributes recovered at 1 decimal".into())
}

fn c8_probe(p: &Pipeline) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y: Vec<f64> = (0..500).map(|_| 80.0 + 200.0 * rng.random::<f64>()).collect();
    let x: Vec<Vec<f64>> = y
        .iter()
        .map(|&t| std::iter::once(t).chain((0..9).map(|_| rng.random::<f64>())).collect())
        .collect();
    let constructive = probe_layer(0, ProbeTarget::F0, &x, &y, 3).map_err(|e| e.to_string())?;
    ensure(constructive.mae_pct < 5.0, format!("constructive MAE% {:.2}", constructive.mae_pct))?;

    let y: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let x: Vec<Vec<f64>> = (0..500).map(|_| (0..10).map(|_| rng.random::<f64>()).collect()).collect();
    let noise = probe_layer(2, ProbeTarget::Rms, &x, &y, 6).map_err(|e| e.to_string())?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let mean_pred = 100.0 * y.iter().map(|v| (v - mean).abs()).sum::<f64>() / y.len() as f64 / (hi - lo);
    let rel = (noise.mae_pct - mean_pred).abs() / mean_pred;
    ensure(rel <= 0.2, format!("noise MAE% {:.2} vs mean predictor {mean_pred:.2}", noise.mae_pct))?;

    let frames = compute_rms(&vec![0.0f32; 16_000], 16_000).len();
    ensure(frames == 47, format!("{frames} frames for 1 s of audio"))?;

    let report = probe_report(&p.backbone, &p.test, None, &ProbeTarget::ALL, 5).map_err(|e| e.to_string())?;
    for r in &report.rows {
        ensure(
            r.ci_low <= r.mae_pct && r.mae_pct <= r.ci_high,
            format!("CI [{}, {}] misses {} at {} layer {}", r.ci_low, r.ci_high, r.mae_pct, r.target, r.layer),
        )?;
    }
    let out = p.root.join("probe");
    report.write(&out).map_err(|e| e.to_string())?;
    let curve = |t: ProbeTarget| {
        report
            .rows
            .iter()
            .filter(|r| r.target == t)
            .map(|r| format!("{:.1}", r.mae_pct))
            .collect::<Vec<_>>()
            .join("/")
    };
    Ok(format!(
        "constructive {:.2}%, noise {:.2}% vs mean {mean_pred:.2}%, 47 frames, {} toy CI rows ok \
         (f0 {}, rms {}, duration {})",
        constructive.mae_pct,
        noise.mae_pct,
        report.rows.len(),
        curve(ProbeTarget::F0),
        curve(ProbeTarget::Rms),
        curve(ProbeTarget::Duration),
    ))
}

fn c9_sweep(p: &Pipeline) -> Check {
    let base = p.head.config().clone();
    let opts = TrainOptions {
        epochs: 4,
        seed: HEAD_SEED,
        ..TrainOptions::default()
    };
    let layers: Vec<usize> = (1..=p.backbone.n_encoder_layers().min(p.backbone.n_decoder_layers())).collect();
    let run = || layer_sweep(&p.backbone, &p.train, &p.test, &base, &layers, &opts).map_err(|e| e.to_string());
    let (a, b) = (run()?, run()?);
    ensure(a == b, "sweep tables differ between identical runs")?;
    let md = a.to_markdown();
    ensure(md.starts_with("| Layer | Prec. | Rec. | F1 |"), format!("unexpected header: {md}"))?;
    for r in &a.rows {
        ensure(
            [r.precision, r.recall, r.f1].iter().all(|v| (0.0..=1.0).contains(v)),
            format!("layer {} has values outside [0, 1]", r.layer),
        )?;
    }
    println!("{md}");
    let best = a.best().map_or(0, |r| r.layer);
    Ok(format!("{} layers, identical across runs, best layer {best}", a.rows.len()))
}

fn subset_manifest(p: &Pipeline, n: usize) -> Result<PathBuf, String> {
    let records = read_manifest(&p.train).map_err(|e| e.to_string())?;
    let path = p.train.with_file_name("subset.jsonl");
    write_manifest(&path, &records[..n.min(records.len())]).map_err(|e| e.to_string())?;
    Ok(path)
}

fn c10_baseline(p: &Pipeline) -> Check {
    let source = AlignSource::Gt;
    let opts = BaselineTrainOptions {
        seed: 3,
        ..BaselineTrainOptions::default()
    };
    let (model, _) = train_baseline(&p.train, &source, &opts).map_err(|e| e.to_string())?;
    let baseline = evaluate_baseline(&model, &p.test, &source).map_err(|e| e.to_string())?;
    let comparison = Comparison::new(vec![p.head_eval.clone(), baseline.clone()]).map_err(|e| e.to_string())?;
    for r in &comparison.reports {
        ensure(
            r.n_evaluated + r.n_excluded == r.manifest_size,
            format!("{}: accounting {} + {} != {}", r.system, r.n_evaluated, r.n_excluded, r.manifest_size),
        )?;
        let m = &r.metrics;
        ensure(
            (m.f1 - f1_score(m.precision, m.recall)).abs() < 1e-12,
            format!("{}: F1 identity", r.system),
        )?;
    }
    write_report(&p.root.join("comparison.md"), &comparison.to_markdown())?;
    println!("{}", comparison.to_markdown());

    // Determinism on a smaller training set keeps the rerun cheap.
    let small = subset_manifest(p, 300)?;
    let quick = BaselineTrainOptions { epochs: 3, ..opts };
    let (m1, _) = train_baseline(&small, &source, &quick).map_err(|e| e.to_string())?;
    let (m2, _) = train_baseline(&small, &source, &quick).map_err(|e| e.to_string())?;
    ensure(m1.digest() == m2.digest(), "baseline checkpoints differ for one seed")?;
    let r1 = evaluate_baseline(&m1, &p.test, &source).map_err(|e| e.to_string())?;
    let r2 = evaluate_baseline(&m2, &p.test, &source).map_err(|e| e.to_string())?;
    ensure(r1.digest() == r2.digest(), "baseline reports differ for one seed")?;

    Ok(format!(
        "head F1 {:.4} ({} evaluated), baseline F1 {:.4} ({} evaluated), {} common samples; reruns identical",
        p.head_eval.metrics.f1,
        p.head_eval.n_evaluated,
        baseline.metrics.f1,
        baseline.n_evaluated,
        comparison.common_ids.len()
    ))
}

fn write_report(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| e.to_string())
}

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Check)> = Vec::new();
    let mut record = |n: usize, name: &'static str, r: Check| {
        match &r {
            Ok(d) => println!("criterion {n} ({name}): PASS - {d}"),
            Err(d) => println!("criterion {n} ({name}): FAIL - {d}"),
        }
        results.push((n, name, r));
    };

    record(1, "metric arithmetic", guarded(c1_metric_arithmetic));
    let pipeline = guarded(c2_pipeline);
    let pipeline = match pipeline {
        Ok((p, detail)) => {
            record(2, "end-to-end toy run", Ok(detail));
            Some(p)
        }
        Err(e) => {
            record(2, "end-to-end toy run", Err(e));
            None
        }
    };
    let needs = |p: &Option<Pipeline>, f: &dyn Fn(&Pipeline) -> Check| match p {
        Some(p) => guarded(|| f(p)),
        None => Err("toy pipeline unavailable".into()),
    };
    record(3, "frozen backbone", needs(&pipeline, &c3_frozen));
    record(4, "gradient check", guarded(c4_gradients));
    record(5, "alignment oracles", guarded(c5_alignment));
    record(6, "acoustic realization", guarded(c6_acoustics));
    record(7, "SSML goldens", guarded(c7_ssml));
    record(8, "probe oracles", needs(&pipeline, &c8_probe));
    record(9, "layer sweep", needs(&pipeline, &c9_sweep));
    record(10, "baseline parity", needs(&pipeline, &c10_baseline));

    println!();
    let mut unexpected = Vec::new();
    for (n, name, r) in &results {
        let known = KNOWN_UNATTAINABLE.iter().find(|(k, _)| k == n);
        let status = match (r.is_ok(), known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known: unattainable as pinned)",
            (false, None) => {
                unexpected.push(format!("{n} ({name})"));
                "FAIL"
            }
        };
        println!("criterion {n:>2}: {status} {name}");
    }
    for (n, why) in KNOWN_UNATTAINABLE {
        println!("note on criterion {n}: {why}");
    }
    if unexpected.is_empty() {
        println!("no unexpected failures");
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
