//! One head per input layer, scored on a test split.

use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stress_backbone::{select_head_input_layer, LayeredAsr};
use stress_core::read_manifest;
use stress_nn::Scalar;

use crate::config::HeadConfig;
use crate::data::prepare_samples;
use crate::predict::evaluate_prepared;
use crate::train::{train_on_prepared, TrainOptions};
use crate::HeadError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub layer: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub evaluated: usize,
    pub excluded: usize,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Layer | Prec. | Rec. | F1 |\n|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let _ = writeln!(s, "| {} | {:.3} | {:.3} | {:.3} |", r.layer, r.precision, r.recall, r.f1);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("layer,precision,recall,f1,evaluated,excluded\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{},{}",
                r.layer, r.precision, r.recall, r.f1, r.evaluated, r.excluded
            );
        }
        s
    }

    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().max_by(|a, b| a.f1.total_cmp(&b.f1))
    }
}

/// Trains a head reading layer `k` of both stacks for every `k` in
/// `layers` and evaluates it on `test`. Transcriptions are computed once
/// and shared; every head uses the same seed and options.
pub fn layer_sweep<T: Scalar, B: LayeredAsr<T>>(
    backbone: &B,
    train: &Path,
    test: &Path,
    base: &HeadConfig,
    layers: &[usize],
    opts: &TrainOptions,
) -> Result<SweepTable, HeadError> {
    for &k in layers {
        select_head_input_layer(backbone.n_encoder_layers(), Some(k))?;
        select_head_input_layer(backbone.n_decoder_layers(), Some(k))?;
    }
    let digest = backbone.digest();
    let train_samples = prepare_samples(backbone, &read_manifest(train)?, train)?;
    let test_samples = prepare_samples(backbone, &read_manifest(test)?, test)?;
    let mut rows = Vec::with_capacity(layers.len());
    for &k in layers {
        let config = HeadConfig {
            input_layer_enc: k,
            input_layer_dec: k,
            ..base.clone()
        };
        let (head, report) = train_on_prepared(&train_samples, config, &digest, opts)?;
        let eval = evaluate_prepared(&head, &test_samples)?;
        log::info!("layer {k}: F1 {:.3}", eval.metrics.f1);
        rows.push(SweepRow {
            layer: k,
            precision: eval.metrics.precision,
            recall: eval.metrics.recall,
            f1: eval.metrics.f1,
            evaluated: eval.evaluated,
            excluded: eval.excluded,
            final_train_loss: report.epochs.last().map_or(f64::NAN, |e| e.mean_loss),
        });
    }
    if backbone.digest() != digest {
        return Err(HeadError::Contract("backbone parameters changed during the sweep".into()));
    }
    Ok(SweepTable { rows })
}
