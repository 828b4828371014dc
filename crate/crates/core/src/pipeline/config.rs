use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::adjust::DurationConfig;
use crate::vocoder::VocoderConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Pdaugment,
    Random,
    PitchOnly,
    DurationOnly,
}

impl Mode {
    pub fn adjusts_pitch(self) -> bool {
        matches!(self, Mode::Pdaugment | Mode::PitchOnly)
    }

    pub fn adjusts_duration(self) -> bool {
        matches!(self, Mode::Pdaugment | Mode::DurationOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pdaugment => "pdaugment",
            Mode::Random => "random",
            Mode::PitchOnly => "pitch_only",
            Mode::DurationOnly => "duration_only",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pdaugment" => Ok(Mode::Pdaugment),
            "random" => Ok(Mode::Random),
            "pitch_only" | "pitch-only" => Ok(Mode::PitchOnly),
            "duration_only" | "duration-only" => Ok(Mode::DurationOnly),
            other => Err(format!(
                "unknown mode {other:?} (expected pdaugment, random, pitch_only or duration_only)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub ratio_low: f64,
    pub ratio_high: f64,
    /// Mean pitch difference (semitones) beyond which the notes are transposed.
    pub shift_threshold: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ratio_low: 0.5,
            ratio_high: 2.0,
            shift_threshold: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomRanges {
    pub pitch_semitones: [f64; 2],
    pub duration_ratio: [f64; 2],
}

impl Default for RandomRanges {
    fn default() -> Self {
        Self {
            pitch_semitones: [-6.0, 6.0],
            duration_ratio: [0.5, 1.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub seed: u64,
    pub mode: Mode,
    /// Directory of `.mid`/`.midi` files. Relative paths resolve against the
    /// config file's directory.
    pub midi_pool_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Alternative phone table; the built-in one is used otherwise.
    pub phone_table: Option<PathBuf>,
    /// Augmented copies per input utterance.
    pub copies: u32,
    /// Redraws allowed when a MIDI file has too few notes for an utterance.
    pub midi_retries: u32,
    pub thresholds: Thresholds,
    pub random: RandomRanges,
    pub vocoder: VocoderConfig,
    pub duration: DurationConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: Mode::Pdaugment,
            midi_pool_dir: None,
            output_dir: None,
            phone_table: None,
            copies: 1,
            midi_retries: 8,
            thresholds: Thresholds::default(),
            random: RandomRanges::default(),
            vocoder: VocoderConfig::default(),
            duration: DurationConfig::default(),
        }
    }
}

impl AugmentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.midi_pool_dir, &mut cfg.output_dir, &mut cfg.phone_table] {
            if let Some(rel) = p.as_ref().filter(|p| p.is_relative()) {
                *p = Some(base.join(rel));
            }
        }
        Ok(cfg)
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        let t = &self.thresholds;
        if !(t.ratio_low > 0.0 && t.ratio_low < t.ratio_high) {
            return bad("need 0 < ratio_low < ratio_high");
        }
        if !(t.shift_threshold >= 0.0) {
            return bad("shift_threshold must be non-negative");
        }
        let [plo, phi] = self.random.pitch_semitones;
        let [dlo, dhi] = self.random.duration_ratio;
        if !(plo <= phi) || !(0.0 < dlo && dlo <= dhi) {
            return bad("random ranges must be non-empty (duration ratios positive)");
        }
        let d = &self.duration;
        if !(0.0 < d.scale_min && d.scale_min <= 1.0 && d.scale_max >= 1.0) || !(d.min_vowel_s >= 0.0) {
            return bad("duration bounds must satisfy 0 < scale_min <= 1 <= scale_max");
        }
        if self.copies == 0 {
            return bad("copies must be at least 1");
        }
        self.vocoder
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = AugmentConfig::from_toml_str("").unwrap();
        assert_eq!(c.thresholds.ratio_low, 0.5);
        assert_eq!(c.thresholds.ratio_high, 2.0);
        assert_eq!(c.thresholds.shift_threshold, 5.0);
        assert_eq!(c.random.pitch_semitones, [-6.0, 6.0]);
        assert_eq!(c.random.duration_ratio, [0.5, 1.2]);
        assert_eq!(c.copies, 1);
        assert_eq!(c.mode, Mode::Pdaugment);
    }

    #[test]
    fn parses_sections_and_rejects_bad_values() {
        let c = AugmentConfig::from_toml_str(
            "seed = 9\nmode = \"pitch_only\"\n[thresholds]\nratio_low = 0.4\n[vocoder]\nhop_s = 0.005\n",
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.mode, Mode::PitchOnly);
        assert_eq!(c.thresholds.ratio_low, 0.4);
        assert_eq!(c.thresholds.ratio_high, 2.0);
        assert_eq!(c.vocoder.hop_s, 0.005);

        assert!(AugmentConfig::from_toml_str("[thresholds]\nratio_low = 3.0\n").is_err());
        assert!(AugmentConfig::from_toml_str("colour = 1\n").is_err());
        assert!(AugmentConfig::from_toml_str("[random]\nduration_ratio = [1.2, 0.5]\n").is_err());
    }
}
