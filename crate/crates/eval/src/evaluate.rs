//! Per-system evaluation reports and their side-by-side comparison.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stress_backbone::LayeredAsr;
use stress_core::{precision_recall_f1, read_manifest, DatasetRecord, Metrics, WordPrediction};
use stress_head::predict::transcript_from_states;
use stress_head::{check_compatible, StressHead};

use crate::baseline::{load_table, sample_features, BlstmTagger};
use crate::features::AlignSource;
use crate::EvalError;

/// One test sample: its gold labels and either a prediction or the
/// reason it was left out of the micro-average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub id: String,
    pub gold_words: Vec<String>,
    pub gold: Vec<u8>,
    pub predicted: Option<Vec<u8>>,
    pub hypothesis: Option<String>,
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub manifest_size: usize,
    pub n_evaluated: usize,
    pub n_excluded: usize,
    pub metrics: Metrics,
    /// Sorted by sample id.
    pub samples: Vec<SampleOutcome>,
}

impl EvalReport {
    fn assemble(system: &str, mut samples: Vec<SampleOutcome>) -> Result<Self, EvalError> {
        samples.sort_by(|a, b| a.id.cmp(&b.id));
        let metrics = metrics_over(&samples, None)?;
        let n_evaluated = samples.iter().filter(|s| s.predicted.is_some()).count();
        Ok(Self {
            system: system.into(),
            manifest_size: samples.len(),
            n_evaluated,
            n_excluded: samples.len() - n_evaluated,
            metrics,
            samples,
        })
    }

    pub fn evaluated_ids(&self) -> BTreeSet<&str> {
        self.samples
            .iter()
            .filter(|s| s.predicted.is_some())
            .map(|s| s.id.as_str())
            .collect()
    }

    /// Metrics restricted to the samples whose id is in `ids`.
    pub fn metrics_on(&self, ids: &BTreeSet<&str>) -> Result<Metrics, EvalError> {
        metrics_over(&self.samples, Some(ids))
    }

    /// SHA-256 of the canonical JSON form. Samples are sorted by id, so
    /// manifest order does not affect it.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("report serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("# Evaluation: {}\n\n", self.system);
        s.push_str("| System | Prec. | Rec. | F1 | Evaluated | Excluded |\n|---|---|---|---|---|---|\n");
        let _ = writeln!(s, "{}", row(&self.system, &self.metrics, self.n_evaluated, self.n_excluded));
        let excluded: Vec<&SampleOutcome> = self.samples.iter().filter(|s| s.excluded.is_some()).collect();
        if !excluded.is_empty() {
            s.push_str("\n## Excluded samples\n\n");
            for e in excluded {
                let _ = writeln!(s, "- {}: {}", e.id, e.excluded.as_deref().unwrap_or_default());
            }
        }
        s
    }

    /// Writes `<stem>.json` and `<stem>.md` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(), EvalError> {
        std::fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, serde_json::to_string_pretty(self)?).map_err(|e| EvalError::io(&json, e))?;
        let md = dir.join(format!("{stem}.md"));
        std::fs::write(&md, self.to_markdown()).map_err(|e| EvalError::io(&md, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn row(name: &str, m: &Metrics, evaluated: usize, excluded: usize) -> String {
    format!(
        "| {name} | {:.3} | {:.3} | {:.3} | {evaluated} | {excluded} |",
        m.precision, m.recall, m.f1
    )
}

fn metrics_over(samples: &[SampleOutcome], ids: Option<&BTreeSet<&str>>) -> Result<Metrics, EvalError> {
    let predictions = samples
        .iter()
        .filter(|s| ids.is_none_or(|ids| ids.contains(s.id.as_str())))
        .filter_map(|s| {
            s.predicted
                .as_ref()
                .map(|p| WordPrediction::new(s.gold_words.clone(), p.clone(), Some(s.gold.clone())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(precision_recall_f1(&predictions)?)
}

fn non_empty(manifest: &Path) -> Result<Vec<DatasetRecord>, EvalError> {
    let records = read_manifest(manifest)?;
    if records.is_empty() {
        return Err(EvalError::EmptyTestSet(manifest.display().to_string()));
    }
    Ok(records)
}

/// Transcribes every test sample and scores the words of transcripts
/// whose word count matches the gold; the rest are excluded and listed.
pub fn evaluate_stress_head<B: LayeredAsr<f32>>(
    backbone: &B,
    head: &StressHead<f32>,
    manifest: &Path,
) -> Result<EvalReport, EvalError> {
    let records = non_empty(manifest)?;
    check_compatible(backbone, head)?;
    let samples = records
        .par_iter()
        .map(|r| -> Result<SampleOutcome, EvalError> {
            let (wav, sr) = stress_core::audio::read_wav(&r.audio_path(manifest))?;
            if sr != 16_000 {
                return Err(EvalError::Config(format!("{}: sample rate {sr}, expected 16000", r.id)));
            }
            let t = transcript_from_states(head, &backbone.transcribe_with_states(&wav))?;
            let matched = t.word_stress.len() == r.stress.len();
            Ok(SampleOutcome {
                id: r.id.clone(),
                gold_words: r.words.clone(),
                gold: r.stress.clone(),
                excluded: (!matched).then(|| {
                    format!("transcript has {} words, gold has {}", t.word_stress.len(), r.stress.len())
                }),
                predicted: matched.then(|| t.word_stress.clone()),
                hypothesis: Some(t.marked_text()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    EvalReport::assemble("whistress", samples)
}

/// Tags the words of every test sample over boundaries from `source`;
/// samples without usable boundaries are excluded and listed.
pub fn evaluate_baseline(
    model: &BlstmTagger<f32>,
    manifest: &Path,
    source: &AlignSource,
) -> Result<EvalReport, EvalError> {
    let records = non_empty(manifest)?;
    let table = load_table(source)?;
    let samples = records
        .par_iter()
        .map(|r| -> Result<SampleOutcome, EvalError> {
            let features = sample_features(r, manifest, source, table.as_ref())?;
            let (predicted, excluded) = match features {
                Ok(f) => (Some(model.tag(&f)), None),
                Err(reason) => (None, Some(reason)),
            };
            Ok(SampleOutcome {
                id: r.id.clone(),
                gold_words: r.words.clone(),
                gold: r.stress.clone(),
                predicted,
                hypothesis: None,
                excluded,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    EvalReport::assemble("baseline", samples)
}

/// Systems evaluated on one test manifest, plus their scores on the
/// samples every system evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<EvalReport>,
    pub common_ids: Vec<String>,
    pub common_metrics: Vec<Metrics>,
}

impl Comparison {
    pub fn new(reports: Vec<EvalReport>) -> Result<Self, EvalError> {
        let first = reports
            .first()
            .ok_or_else(|| EvalError::Config("nothing to compare".into()))?;
        let all: Vec<&str> = first.samples.iter().map(|s| s.id.as_str()).collect();
        for r in &reports {
            let ids: Vec<&str> = r.samples.iter().map(|s| s.id.as_str()).collect();
            if ids != all {
                return Err(EvalError::Config(format!(
                    "{} was evaluated on a different sample set",
                    r.system
                )));
            }
        }
        let mut common: BTreeSet<&str> = all.iter().copied().collect();
        for r in &reports {
            common = common.intersection(&r.evaluated_ids()).copied().collect();
        }
        let common_metrics = reports.iter().map(|r| r.metrics_on(&common)).collect::<Result<_, _>>()?;
        let common_ids = common.into_iter().map(String::from).collect();
        Ok(Self {
            reports,
            common_ids,
            common_metrics,
        })
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| System | Prec. | Rec. | F1 | Evaluated | Excluded |\n|---|---|---|---|---|---|\n");
        for r in &self.reports {
            let _ = writeln!(s, "{}", row(&r.system, &r.metrics, r.n_evaluated, r.n_excluded));
        }
        let n = self.common_ids.len();
        let _ = write!(s, "\nOn the {n} samples evaluated by every system:\n\n");
        s.push_str("| System | Prec. | Rec. | F1 | Evaluated | Excluded |\n|---|---|---|---|---|---|\n");
        for (r, m) in self.reports.iter().zip(&self.common_metrics) {
            let _ = writeln!(s, "{}", row(&r.system, m, n, r.manifest_size - n));
        }
        s
    }
}
