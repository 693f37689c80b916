//! The ten-voice pool of the toy synthesizer.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voice {
    pub id: &'static str,
    pub base_f0_hz: f64,
}

pub const VOICES: [Voice; 10] = [
    Voice { id: "f0", base_f0_hz: 180.0 },
    Voice { id: "f1", base_f0_hz: 192.0 },
    Voice { id: "f2", base_f0_hz: 205.0 },
    Voice { id: "f3", base_f0_hz: 218.0 },
    Voice { id: "f4", base_f0_hz: 230.0 },
    Voice { id: "m0", base_f0_hz: 95.0 },
    Voice { id: "m1", base_f0_hz: 105.0 },
    Voice { id: "m2", base_f0_hz: 116.0 },
    Voice { id: "m3", base_f0_hz: 128.0 },
    Voice { id: "m4", base_f0_hz: 140.0 },
];

pub fn voice(id: &str) -> Option<Voice> {
    VOICES.iter().copied().find(|v| v.id == id)
}
