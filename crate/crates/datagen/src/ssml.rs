//! SSML documents for stressed sentences.

use crate::plan::SynthesisPlan;
use crate::DatagenError;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            other => out.push(other),
        }
    }
    out
}

/// `<speak>`-rooted document; stressed words are wrapped in `<prosody>` with
/// rate, volume and pitch attributes at one decimal place.
pub fn emit_ssml(plan: &SynthesisPlan) -> String {
    let mut out = String::from("<speak>");
    for (i, word) in plan.words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if plan.stress[i] == 1 {
            out.push_str(&format!(
                "<prosody rate=\"{:.1}%\" volume=\"+{:.1}dB\" pitch=\"+{:.1}st\">{}</prosody>",
                100.0 - plan.rate_reduction_pct[i],
                plan.gain_db[i],
                plan.pitch_st[i],
                escape(word)
            ));
        } else {
            out.push_str(&escape(word));
        }
    }
    out.push_str("</speak>");
    out
}

/// Prosody attributes recovered from one `<prosody>` element.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProsody {
    pub word: String,
    pub rate_pct: f64,
    pub volume_db: f64,
    pub pitch_st: f64,
}

fn number(attr: Option<&str>, suffix: &str) -> Result<f64, DatagenError> {
    let raw = attr.ok_or_else(|| DatagenError::Ssml(format!("missing attribute with suffix {suffix}")))?;
    raw.strip_suffix(suffix)
        .and_then(|v| v.trim_start_matches('+').parse().ok())
        .ok_or_else(|| DatagenError::Ssml(format!("bad attribute value {raw:?}")))
}

/// Parses the prosody elements of an emitted document, in order.
pub fn parse_ssml(doc: &str) -> Result<Vec<ParsedProsody>, DatagenError> {
    let tree = roxmltree::Document::parse(doc).map_err(|e| DatagenError::Ssml(e.to_string()))?;
    let root = tree.root_element();
    if root.tag_name().name() != "speak" {
        return Err(DatagenError::Ssml(format!(
            "root element is <{}>",
            root.tag_name().name()
        )));
    }
    root.descendants()
        .filter(|n| n.has_tag_name("prosody"))
        .map(|n| {
            Ok(ParsedProsody {
                word: n.text().unwrap_or_default().to_string(),
                rate_pct: number(n.attribute("rate"), "%")?,
                volume_db: number(n.attribute("volume"), "dB")?,
                pitch_st: number(n.attribute("pitch"), "st")?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(words: &[&str], stress: &[u8], r: f64, g: f64, p: f64) -> SynthesisPlan {
        let n = words.len();
        let pick = |v: f64| (0..n).map(|i| if stress[i] == 1 { v } else { 0.0 }).collect();
        SynthesisPlan {
            words: words.iter().map(|w| w.to_string()).collect(),
            stress: stress.to_vec(),
            rate_reduction_pct: pick(r),
            gain_db: pick(g),
            pitch_st: pick(p),
            voice_id: "f0".into(),
            seed: 0,
        }
    }

    #[test]
    fn two_word_example() {
        let doc = emit_ssml(&plan(&["Tom", "ran"], &[0, 1], 85.0, 6.0, 1.5));
        assert_eq!(
            doc,
            r#"<speak>Tom <prosody rate="15.0%" volume="+6.0dB" pitch="+1.5st">ran</prosody></speak>"#
        );
    }

    #[test]
    fn unstressed_plan_is_plain_text() {
        assert_eq!(emit_ssml(&plan(&["a", "b"], &[0, 0], 0.0, 0.0, 0.0)), "<speak>a b</speak>");
    }

    #[test]
    fn markup_characters_are_escaped() {
        let doc = emit_ssml(&plan(&["R&D", "<x>"], &[1, 0], 50.0, 4.0, 1.5));
        let parsed = parse_ssml(&doc).unwrap();
        assert_eq!(parsed[0].word, "R&D");
    }

    #[test]
    fn rejects_foreign_root() {
        assert!(parse_ssml("<voice>hi</voice>").is_err());
        assert!(parse_ssml("<speak>unclosed").is_err());
    }
}
