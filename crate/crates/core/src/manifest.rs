//! JSONL dataset manifests: one [`DatasetRecord`] per line.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::StressAnnotatedSentence;

/// One synthesized utterance. `audio` is relative to the manifest's directory
/// and points at a 16 kHz mono 16-bit PCM WAV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub text: String,
    pub words: Vec<String>,
    pub stress: Vec<u8>,
    pub variant: u8,
    pub audio: String,
    pub word_start_s: Vec<f64>,
    pub voice: String,
}

impl DatasetRecord {
    pub fn validate(&self) -> Result<(), CoreError> {
        let fail = |reason: String| CoreError::InvalidRecord {
            id: self.id.clone(),
            reason,
        };
        if self.words.len() != self.stress.len() {
            return Err(fail(format!(
                "{} words but {} stress labels",
                self.words.len(),
                self.stress.len()
            )));
        }
        if self.words.len() != self.word_start_s.len() {
            return Err(fail(format!(
                "{} words but {} start times",
                self.words.len(),
                self.word_start_s.len()
            )));
        }
        if self.word_start_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(fail("word start times not strictly increasing".into()));
        }
        Ok(())
    }

    pub fn sentence(&self) -> Result<StressAnnotatedSentence, CoreError> {
        StressAnnotatedSentence::new_relaxed(
            self.id.clone(),
            self.text.clone(),
            &self.words,
            &self.stress,
            self.variant,
        )
    }

    /// Absolute audio path given the manifest location.
    pub fn audio_path(&self, manifest: &Path) -> PathBuf {
        manifest
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&self.audio)
    }
}

/// Serializes records to JSONL text (one object per line, trailing newline).
pub fn to_jsonl(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_manifest(path: &Path, records: &[DatasetRecord]) -> Result<(), CoreError> {
    let io = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(to_jsonl(records).as_bytes()).map_err(io)?;
    Ok(())
}

/// Reads and validates every non-blank line of a manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<DatasetRecord>, CoreError> {
    let io = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(fs::File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(&line).map_err(|source| CoreError::Json {
                path: path.to_path_buf(),
                line: n + 1,
                source,
            })?;
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> DatasetRecord {
        DatasetRecord {
            id: "s1-v0".into(),
            text: "Tom ran home.".into(),
            words: vec!["Tom".into(), "ran".into(), "home".into()],
            stress: vec![0, 0, 1],
            variant: 0,
            audio: "wav/s1-v0.wav".into(),
            word_start_s: vec![0.08, 0.34, 0.6],
            voice: "f0".into(),
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        write_manifest(&path, &[record(), record()]).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, vec![record(), record()]);
        assert_eq!(back[0].audio_path(&path), dir.path().join("wav/s1-v0.wav"));
    }

    #[test]
    fn record_field_names_are_stable() {
        let v: serde_json::Value = serde_json::from_str(&to_jsonl(&[record()])).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            ["audio", "id", "stress", "text", "variant", "voice", "word_start_s", "words"]
        );
    }

    #[test]
    fn invalid_records_are_rejected() {
        let mut r = record();
        r.word_start_s = vec![0.1, 0.1, 0.2];
        assert!(r.validate().is_err());
        let mut r = record();
        r.stress.pop();
        assert!(r.validate().is_err());
    }
}
