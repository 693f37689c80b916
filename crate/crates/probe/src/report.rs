//! Probes over layers and targets for a whole manifest, with CSV and SVG
//! output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stress_backbone::LayeredAsr;
use stress_core::audio::read_wav;
use stress_core::read_manifest;
use stress_core::seed::derive_seed;
use stress_nn::Scalar;

use crate::duration::word_duration_targets;
use crate::frames::{compute_f0, compute_rms};
use crate::pool::{align_windows, pool_targets, WINDOW_S};
use crate::probe::{probe_layer, LayerProbeResult, ProbeTarget};
use crate::ProbeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<LayerProbeResult>,
    pub samples: usize,
    /// Samples left out of the duration probe because their transcript
    /// does not match the gold word count.
    pub duration_skipped: usize,
    /// Data points per target.
    pub points: BTreeMap<ProbeTarget, usize>,
}

impl ProbeReport {
    pub fn to_csv(&self) -> Result<String, ProbeError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["layer", "target", "mae_pct", "ci_low", "ci_high"])?;
        for r in &self.rows {
            w.write_record([
                r.layer.to_string(),
                r.target.to_string(),
                format!("{:.4}", r.mae_pct),
                format!("{:.4}", r.ci_low),
                format!("{:.4}", r.ci_high),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| ProbeError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `probe.csv`, `probe.json` and one `probe_<target>.svg` per
    /// probed target into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ProbeError> {
        std::fs::create_dir_all(dir).map_err(|e| ProbeError::io(dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| ProbeError::io(&p, e))
        };
        put("probe.csv", self.to_csv()?)?;
        put("probe.json", serde_json::to_string_pretty(self)?)?;
        for t in ProbeTarget::ALL {
            let rows: Vec<&LayerProbeResult> = self.rows.iter().filter(|r| r.target == t).collect();
            if !rows.is_empty() {
                put(&format!("probe_{t}.svg"), render_svg(t, &rows))?;
            }
        }
        Ok(())
    }
}

/// Line chart of MAE% by layer with the confidence band shaded.
pub fn render_svg(target: ProbeTarget, rows: &[&LayerProbeResult]) -> String {
    let (w, h, m) = (480.0, 320.0, 48.0);
    let max_layer = rows.iter().map(|r| r.layer).max().unwrap_or(0).max(1) as f64;
    let top = rows.iter().map(|r| r.ci_high).fold(1.0, f64::max) * 1.1;
    let x = |l: usize| m + (w - 2.0 * m) * l as f64 / max_layer;
    let y = |v: f64| h - m - (h - 2.0 * m) * v / top;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let band: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.1},{:.1}", x(r.layer), y(r.ci_high)))
        .chain(rows.iter().rev().map(|r| format!("{:.1},{:.1}", x(r.layer), y(r.ci_low))))
        .collect();
    let _ = writeln!(s, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.5"/>"##, band.join(" "));
    let line: Vec<String> = rows.iter().map(|r| format!("{:.1},{:.1}", x(r.layer), y(r.mae_pct))).collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="2"/>"##,
        line.join(" ")
    );
    for r in rows {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#08519c"/>"##,
            x(r.layer),
            y(r.mae_pct)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x(r.layer),
            h - m + 16.0,
            r.layer
        );
    }
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            m - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{0}" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">layer</text>"#,
        w / 2.0,
        h - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{target} MAE %</text>"#,
        h / 2.0,
        h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

type Points = Vec<(Vec<f64>, f64)>;

/// Per-sample probe data: one point list per (target, layer).
struct SampleData {
    points: BTreeMap<(ProbeTarget, usize), Points>,
    duration_skipped: bool,
}

fn check_layers(layers: &[usize], available: usize, side: &str) -> Result<(), ProbeError> {
    match layers.iter().find(|&&l| l > available) {
        Some(l) => Err(ProbeError::Config(format!("{side} layer {l} outside [0, {available}]"))),
        None => Ok(()),
    }
}

/// Probes every requested layer for every target. `layers = None` means
/// all layers including the embedding output (index 0). Pitch and energy
/// read encoder layers; duration reads decoder layers.
pub fn probe_report<T: Scalar, B: LayeredAsr<T>>(
    backbone: &B,
    manifest: &Path,
    layers: Option<&[usize]>,
    targets: &[ProbeTarget],
    seed: u64,
) -> Result<ProbeReport, ProbeError> {
    let enc_layers: Vec<usize> = layers.map_or_else(|| (0..=backbone.n_encoder_layers()).collect(), <[_]>::to_vec);
    let dec_layers: Vec<usize> = layers.map_or_else(|| (0..=backbone.n_decoder_layers()).collect(), <[_]>::to_vec);
    check_layers(&enc_layers, backbone.n_encoder_layers(), "encoder")?;
    check_layers(&dec_layers, backbone.n_decoder_layers(), "decoder")?;
    let records = read_manifest(manifest)?;
    let data: Vec<SampleData> = records
        .par_iter()
        .map(|r| -> Result<SampleData, ProbeError> {
            let (wav, sr) = read_wav(&r.audio_path(manifest))?;
            let states = backbone.transcribe_with_states(&wav);
            let mut points = BTreeMap::new();
            let mut duration_skipped = false;
            for &t in targets {
                match t {
                    ProbeTarget::F0 | ProbeTarget::Rms => {
                        let series = if t == ProbeTarget::F0 {
                            compute_f0(&wav, sr)
                        } else {
                            compute_rms(&wav, sr)
                        };
                        let pooled = pool_targets(&series, WINDOW_S);
                        for &l in &enc_layers {
                            let (e, y) = align_windows(&pooled, &states.encoder_states[l], states.frame_rate_hz);
                            points.insert((t, l), e.into_iter().zip(y).collect());
                        }
                    }
                    ProbeTarget::Duration => {
                        let end = wav.len() as f64 / f64::from(sr);
                        for &l in &dec_layers {
                            match word_duration_targets(r, &states, l, end) {
                                Ok((e, y)) => {
                                    points.insert((t, l), e.into_iter().zip(y).collect());
                                }
                                Err(ProbeError::Mapping { .. }) => duration_skipped = true,
                                Err(e) => return Err(e),
                            }
                        }
                    }
                }
            }
            Ok(SampleData {
                points,
                duration_skipped,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut merged: BTreeMap<(ProbeTarget, usize), Points> = BTreeMap::new();
    for d in &data {
        for (k, v) in &d.points {
            merged.entry(*k).or_default().extend(v.iter().cloned());
        }
    }
    let duration_skipped = data.iter().filter(|d| d.duration_skipped).count();
    if targets.contains(&ProbeTarget::Duration) && duration_skipped > 0 {
        log::warn!("{duration_skipped} samples skipped for duration: transcript word count differs");
    }
    let mut jobs: Vec<(ProbeTarget, usize)> = Vec::new();
    for &t in targets {
        let ls = if t.uses_decoder() { &dec_layers } else { &enc_layers };
        jobs.extend(ls.iter().map(|&l| (t, l)));
    }
    let rows = jobs
        .par_iter()
        .map(|&(t, l)| {
            let pts = merged.get(&(t, l)).map(Vec::as_slice).unwrap_or_default();
            let (x, y): (Vec<Vec<f64>>, Vec<f64>) = pts.iter().cloned().unzip();
            probe_layer(l, t, &x, &y, derive_seed(seed, &format!("probe:{t}:{l}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let points = targets
        .iter()
        .map(|&t| {
            let l = if t.uses_decoder() { dec_layers[0] } else { enc_layers[0] };
            (t, merged.get(&(t, l)).map_or(0, Vec::len))
        })
        .collect();
    Ok(ProbeReport {
        rows,
        samples: records.len(),
        duration_skipped,
        points,
    })
}
