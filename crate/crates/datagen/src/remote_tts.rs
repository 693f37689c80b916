//! Contract for a cloud TTS service driven by SSML.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::plan::SynthesisPlan;
use crate::provider::{RetryPolicy, TransportError};
use crate::ssml::emit_ssml;
use crate::synth::{SpeechSample, SpeechSynthesizer, SAMPLE_RATE_HZ};
use crate::DatagenError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsRequest {
    pub ssml: String,
    pub voice: String,
    pub sample_rate_hz: u32,
    /// Ask the service for per-word start marks.
    pub word_timestamps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsResponse {
    pub pcm16: Vec<i16>,
    pub sample_rate_hz: u32,
    pub word_start_s: Vec<f64>,
}

pub trait TtsTransport: Sync {
    fn synthesize(&self, request: &TtsRequest) -> Result<TtsResponse, TransportError>;
}

pub struct RemoteTts<T> {
    pub transport: T,
    pub retry: RetryPolicy,
}

impl<T: TtsTransport> RemoteTts<T> {
    pub fn new(transport: T) -> Self {
        Self {
            transport,
            retry: RetryPolicy::default(),
        }
    }
}

impl<T: TtsTransport> SpeechSynthesizer for RemoteTts<T> {
    fn synthesize(&self, plan: &SynthesisPlan) -> Result<SpeechSample, DatagenError> {
        let request = TtsRequest {
            ssml: emit_ssml(plan),
            voice: plan.voice_id.clone(),
            sample_rate_hz: SAMPLE_RATE_HZ,
            word_timestamps: true,
        };
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                thread::sleep(self.retry.delay(attempt - 1));
            }
            match self.transport.synthesize(&request) {
                Ok(resp) => {
                    if resp.word_start_s.len() != plan.len() {
                        return Err(DatagenError::Remote(format!(
                            "service returned {} word marks for {} words",
                            resp.word_start_s.len(),
                            plan.len()
                        )));
                    }
                    let duration_s = resp.pcm16.len() as f64 / f64::from(resp.sample_rate_hz);
                    return Ok(SpeechSample {
                        waveform: resp.pcm16.iter().map(|&v| f32::from(v) / 32767.0).collect(),
                        sample_rate_hz: resp.sample_rate_hz,
                        transcript: plan.words.join(" "),
                        word_start_s: resp.word_start_s,
                        duration_s,
                    });
                }
                Err(TransportError::Transient(m)) => last = m,
                Err(TransportError::Permanent(m)) => return Err(DatagenError::Remote(m)),
            }
        }
        Err(DatagenError::Remote(format!("gave up after retries: {last}")))
    }
}
