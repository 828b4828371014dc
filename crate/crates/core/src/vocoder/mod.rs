//! Source-filter analysis/synthesis: F0 contour, spectral envelope and band
//! aperiodicity, each editable independently before resynthesis.
//!
//! All three parameter streams share one frame grid: frame `i` is centred on
//! `i * hop_s`, and an utterance of `n` samples has `ceil(n / hop)` frames.

mod analysis;
mod dump;
mod f0;
mod synthesis;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::analyze;
pub use dump::{read_params, write_params, DUMP_MAGIC, DUMP_VERSION};
pub use f0::estimate_f0;
pub use synthesis::{synthesize, Synthesis};

#[derive(Debug, Error, PartialEq)]
pub enum VocoderError {
    #[error("input too short for analysis: {samples} samples, need at least {needed}")]
    TooShort { samples: usize, needed: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parameter dump: {0}")]
    Dump(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocoderConfig {
    pub hop_s: f64,
    pub f0_floor_hz: f64,
    pub f0_ceil_hz: f64,
    /// Upper bound on the normalized difference minimum for a voiced frame.
    pub voicing_threshold: f64,
    /// Frames quieter than this RMS are unvoiced regardless of periodicity.
    pub silence_rms: f64,
    /// F0 assumed when sizing the envelope window of unvoiced frames.
    pub unvoiced_window_f0_hz: f64,
    /// Upper edges (Hz) of the aperiodicity bands; the last band runs to Nyquist.
    pub aperiodicity_band_edges_hz: Vec<f64>,
}

impl Default for VocoderConfig {
    fn default() -> Self {
        Self {
            hop_s: 0.010,
            f0_floor_hz: 50.0,
            f0_ceil_hz: 1100.0,
            voicing_threshold: 0.2,
            silence_rms: 1e-4,
            unvoiced_window_f0_hz: 500.0,
            aperiodicity_band_edges_hz: vec![500.0, 1000.0, 2000.0, 4000.0],
        }
    }
}

impl VocoderConfig {
    pub fn validate(&self) -> Result<(), VocoderError> {
        let bad = |m: &str| Err(VocoderError::InvalidConfig(m.to_string()));
        if !(self.hop_s > 0.0 && self.hop_s.is_finite()) {
            return bad("hop_s must be positive");
        }
        if !(self.f0_floor_hz > 0.0 && self.f0_floor_hz < self.f0_ceil_hz) {
            return bad("need 0 < f0_floor_hz < f0_ceil_hz");
        }
        if !(0.0..1.0).contains(&self.voicing_threshold) {
            return bad("voicing_threshold must be in [0, 1)");
        }
        if self.unvoiced_window_f0_hz < self.f0_floor_hz {
            return bad("unvoiced_window_f0_hz below f0_floor_hz");
        }
        if self.aperiodicity_band_edges_hz.windows(2).any(|w| w[1] <= w[0]) {
            return bad("aperiodicity band edges must increase");
        }
        Ok(())
    }

    pub fn hop_samples(&self, sample_rate_hz: u32) -> f64 {
        self.hop_s * sample_rate_hz as f64
    }

    /// Frames needed to cover `n_samples` at this hop.
    pub fn frame_count(&self, n_samples: usize, sample_rate_hz: u32) -> usize {
        let hop = self.hop_samples(sample_rate_hz);
        ((n_samples as f64 / hop) - 1e-9).ceil().max(0.0) as usize
    }

    /// Envelope FFT size: smallest power of two holding three periods of the F0 floor.
    pub fn fft_size(&self, sample_rate_hz: u32) -> usize {
        let need = (3.0 * sample_rate_hz as f64 / self.f0_floor_hz).ceil() as usize + 1;
        need.next_power_of_two()
    }
}

/// MIDI-scale semitones: `69 + 12 log2(f / 440)`.
pub fn hz_to_semitone(hz: f64) -> f64 {
    69.0 + 12.0 * (hz / 440.0).log2()
}

pub fn semitone_to_hz(semitone: f64) -> f64 {
    440.0 * 2f64.powf((semitone - 69.0) / 12.0)
}

/// Pitch on the MIDI semitone scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SemitonePitch(pub f64);

impl SemitonePitch {
    pub fn from_hz(hz: f64) -> Self {
        Self(hz_to_semitone(hz))
    }

    pub fn to_hz(self) -> f64 {
        semitone_to_hz(self.0)
    }
}

/// Frame-level F0. A frame is voiced iff its F0 is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Contour {
    pub f0_hz: Vec<f64>,
    pub hop_s: f64,
}

impl F0Contour {
    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn is_voiced(&self, frame: usize) -> bool {
        self.f0_hz[frame] > 0.0
    }

    pub fn voiced_count(&self) -> usize {
        self.f0_hz.iter().filter(|&&f| f > 0.0).count()
    }

    /// Semitone pitch per frame, `None` on unvoiced frames.
    pub fn semitones(&self) -> Vec<Option<f64>> {
        self.f0_hz
            .iter()
            .map(|&f| (f > 0.0).then(|| hz_to_semitone(f)))
            .collect()
    }

    /// Mean semitone pitch over voiced frames.
    pub fn mean_semitone(&self) -> Option<f64> {
        let voiced: Vec<f64> = self.semitones().into_iter().flatten().collect();
        if voiced.is_empty() {
            None
        } else {
            Some(voiced.iter().sum::<f64>() / voiced.len() as f64)
        }
    }

    pub fn frame_time_s(&self, frame: usize) -> f64 {
        frame as f64 * self.hop_s
    }
}

/// The three-way decomposition of an utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct VocoderParams {
    pub f0: F0Contour,
    /// Per frame, `fft_size / 2 + 1` non-negative power values.
    pub spectral_envelope: Vec<Vec<f64>>,
    /// Per frame, one value in [0, 1] per band.
    pub aperiodicity: Vec<Vec<f64>>,
    pub band_edges_hz: Vec<f64>,
    pub sample_rate_hz: u32,
    pub fft_size: usize,
}

impl VocoderParams {
    pub fn frame_count(&self) -> usize {
        self.f0.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count() as f64 * self.f0.hop_s
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), VocoderError> {
        let n = self.f0.len();
        let bins = self.fft_size / 2 + 1;
        let bands = self.band_edges_hz.len() + 1;
        let bad = |m: String| Err(VocoderError::InvalidParams(m));
        if self.sample_rate_hz == 0 || !(self.f0.hop_s > 0.0) {
            return bad("sample rate and hop must be positive".into());
        }
        if self.spectral_envelope.len() != n || self.aperiodicity.len() != n {
            return bad(format!(
                "frame counts differ: f0 {n}, envelope {}, aperiodicity {}",
                self.spectral_envelope.len(),
                self.aperiodicity.len()
            ));
        }
        if let Some(i) = self.f0.f0_hz.iter().position(|f| !f.is_finite() || *f < 0.0) {
            return bad(format!("frame {i}: invalid f0 {}", self.f0.f0_hz[i]));
        }
        for (i, env) in self.spectral_envelope.iter().enumerate() {
            if env.len() != bins {
                return bad(format!("frame {i}: envelope has {} bins, expected {bins}", env.len()));
            }
            if env.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return bad(format!("frame {i}: envelope has negative or non-finite values"));
            }
        }
        for (i, ap) in self.aperiodicity.iter().enumerate() {
            if ap.len() != bands {
                return bad(format!("frame {i}: aperiodicity has {} bands, expected {bands}", ap.len()));
            }
            if ap.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad(format!("frame {i}: aperiodicity outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Aperiodicity of one frame expanded to envelope bins: each bin takes the
    /// value of the band containing it. Interpolating across band centres
    /// would leak a noisy upper band into the harmonics below its edge.
    pub fn aperiodicity_bins(&self, band_values: &[f64]) -> Vec<f64> {
        let bins = self.fft_size / 2 + 1;
        (0..bins)
            .map(|k| {
                let f = k as f64 * self.sample_rate_hz as f64 / self.fft_size as f64;
                let band = self.band_edges_hz.iter().take_while(|&&e| e <= f).count();
                band_values[band.min(band_values.len() - 1)]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn semitone_anchors() {
        assert_eq!(hz_to_semitone(440.0), 69.0);
        assert!((hz_to_semitone(880.0) - hz_to_semitone(440.0) - 12.0).abs() < 1e-12);
        assert!((semitone_to_hz(60.0) - 261.6255653005986).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn semitone_round_trip(f in 20.0f64..5000.0) {
            let back = SemitonePitch::from_hz(f).to_hz();
            prop_assert!(((back - f) / f).abs() < 1e-6);
        }
    }

    #[test]
    fn frame_count_is_ceil() {
        let cfg = VocoderConfig::default();
        assert_eq!(cfg.frame_count(16000, 16000), 100);
        assert_eq!(cfg.frame_count(16001, 16000), 101);
        assert_eq!(cfg.frame_count(159, 16000), 1);
        assert_eq!(cfg.fft_size(16000), 1024);
    }

    #[test]
    fn config_validation() {
        let mut cfg = VocoderConfig::default();
        cfg.validate().unwrap();
        cfg.f0_floor_hz = 2000.0;
        assert!(cfg.validate().is_err());
    }
}
