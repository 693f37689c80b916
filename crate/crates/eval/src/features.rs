//! Word-level acoustic features for the baseline tagger and the word
//! boundaries they are measured over.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stress_core::DatasetRecord;
use stress_probe::{compute_f0, compute_rms, FrameSeries};

use crate::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineWordFeatures {
    pub duration_s: f64,
    /// Mean framewise RMS over the segment.
    pub mean_energy: f64,
    /// Highest voiced F0 in the segment, 0 when none is voiced.
    pub max_pitch_hz: f64,
}

impl BaselineWordFeatures {
    pub const DIM: usize = 3;

    pub fn to_array(self) -> [f64; 3] {
        [self.duration_s, self.mean_energy, self.max_pitch_hz]
    }
}

/// Where word boundaries come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlignSource {
    /// Start times from the manifest; each word ends where the next
    /// starts, the last at the end of the audio.
    Gt,
    /// External per-word boundaries from a CSV file.
    Csv { path: PathBuf },
}

/// Per-word `(start_s, end_s)` segments keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentTable {
    pub segments: HashMap<String, Vec<(String, f64, f64)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AlignmentRow {
    id: String,
    word: String,
    start_s: f64,
    end_s: f64,
}

impl AlignmentTable {
    /// Reads `id,word,start_s,end_s` rows; rows of one id are in word
    /// order.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
        let mut segments: HashMap<String, Vec<(String, f64, f64)>> = HashMap::new();
        for row in reader.deserialize() {
            let row: AlignmentRow = row?;
            segments.entry(row.id).or_default().push((row.word, row.start_s, row.end_s));
        }
        Ok(Self { segments })
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut ids: Vec<&String> = self.segments.keys().collect();
        ids.sort();
        for id in ids {
            for (word, start_s, end_s) in &self.segments[id] {
                w.serialize(AlignmentRow {
                    id: id.clone(),
                    word: word.clone(),
                    start_s: *start_s,
                    end_s: *end_s,
                })?;
            }
        }
        w.flush().map_err(|e| EvalError::io(path, e))?;
        Ok(())
    }

    /// The manifest's own boundaries in table form.
    pub fn from_ground_truth(records: &[DatasetRecord], audio_end_s: impl Fn(&DatasetRecord) -> f64) -> Self {
        let segments = records
            .iter()
            .map(|r| {
                let b = gt_boundaries(r, audio_end_s(r));
                let rows = r.words.iter().zip(b).map(|(w, (s, e))| (w.clone(), s, e)).collect();
                (r.id.clone(), rows)
            })
            .collect();
        Self { segments }
    }
}

pub fn gt_boundaries(record: &DatasetRecord, audio_end_s: f64) -> Vec<(f64, f64)> {
    let s = &record.word_start_s;
    (0..s.len())
        .map(|i| (s[i], s.get(i + 1).copied().unwrap_or(audio_end_s)))
        .collect()
}

/// Boundaries of `record` from `source`, checked against the gold words.
pub fn boundaries_for(
    record: &DatasetRecord,
    audio_end_s: f64,
    source: &AlignSource,
    table: Option<&AlignmentTable>,
) -> Result<Vec<(f64, f64)>, EvalError> {
    match source {
        AlignSource::Gt => Ok(gt_boundaries(record, audio_end_s)),
        AlignSource::Csv { .. } => {
            let rows = table
                .and_then(|t| t.segments.get(&record.id))
                .ok_or_else(|| EvalError::Boundary(format!("{}: no alignment rows", record.id)))?;
            if rows.len() != record.words.len() {
                return Err(EvalError::Boundary(format!(
                    "{}: {} aligned words for {} gold words",
                    record.id,
                    rows.len(),
                    record.words.len()
                )));
            }
            Ok(rows.iter().map(|&(_, s, e)| (s, e)).collect())
        }
    }
}

fn frames_in(series: &FrameSeries, start: f64, end: f64) -> Vec<usize> {
    let inside: Vec<usize> = (0..series.len())
        .filter(|&i| {
            let c = series.frame_center_s(i);
            c >= start && c < end
        })
        .collect();
    if !inside.is_empty() || series.is_empty() {
        return inside;
    }
    // Segment shorter than the hop: take the frame closest to its middle.
    let mid = (start + end) / 2.0;
    let nearest = (0..series.len())
        .min_by(|&a, &b| {
            (series.frame_center_s(a) - mid)
                .abs()
                .total_cmp(&(series.frame_center_s(b) - mid).abs())
        })
        .expect("series is not empty");
    vec![nearest]
}

/// Duration, mean energy and maximum pitch per word segment.
pub fn extract_baseline_features(
    wav: &[f32],
    sample_rate: u32,
    boundaries: &[(f64, f64)],
) -> Result<Vec<BaselineWordFeatures>, EvalError> {
    let total = wav.len() as f64 / f64::from(sample_rate);
    let slack = 1.0 / f64::from(sample_rate);
    for &(s, e) in boundaries {
        if !(s >= 0.0 && e > s && e <= total + slack) {
            return Err(EvalError::Boundary(format!(
                "segment [{s:.3}, {e:.3}] outside audio of {total:.3} s"
            )));
        }
    }
    let rms = compute_rms(wav, sample_rate);
    let f0 = compute_f0(wav, sample_rate);
    Ok(boundaries
        .iter()
        .map(|&(s, e)| {
            let idx = frames_in(&rms, s, e);
            let mean_energy = if idx.is_empty() {
                0.0
            } else {
                idx.iter().map(|&i| rms.values[i]).sum::<f64>() / idx.len() as f64
            };
            let max_pitch_hz = idx
                .iter()
                .filter(|&&i| f0.voiced[i])
                .map(|&i| f0.values[i])
                .fold(0.0, f64::max);
            BaselineWordFeatures {
                duration_s: e - s,
                mean_energy,
                max_pitch_hz,
            }
        })
        .collect())
}
