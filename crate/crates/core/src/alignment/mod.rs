//! Phoneme-level alignment input, syllabification and syllable-to-note mapping.

mod mapping;
mod phones;
mod syllabify;
mod textgrid;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mapping::{align_durations, align_speech_notes, AlignedPair, PairKind, SyllableNoteAlignment};
pub use phones::{normalize_symbol, PhoneKind, PhoneTable};
pub use syllabify::{syllabify, Syllable, SyllableSequence};
pub use textgrid::{
    parse_alignment, parse_alignment_str, parse_phones_json, parse_textgrid, write_textgrid,
    AlignmentFormat,
};

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("TextGrid: {0}")]
    TextGrid(String),
    #[error("alignment JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no tier named \"phones\" (tiers: {0:?})")]
    MissingPhonesTier(Vec<String>),
    #[error("interval {index} ({label:?}): end {end} is not after start {start}")]
    BadInterval {
        index: usize,
        label: String,
        start: f64,
        end: f64,
    },
    #[error("intervals {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("utterance has no vowels and cannot be syllabified")]
    NoVowels,
    #[error("phone table line {line}: {message}")]
    PhoneTable { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeInterval {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
    pub kind: PhoneKind,
}

impl PhonemeInterval {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Sorted, non-overlapping phoneme intervals of one utterance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhonemeTier {
    pub intervals: Vec<PhonemeInterval>,
    /// Non-fatal issues found while parsing (unknown labels and the like).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PhonemeTier {
    /// Classifies raw `(label, start, end)` triples, sorts them and checks
    /// for inverted or overlapping intervals.
    pub fn from_raw(
        raw: Vec<(String, f64, f64)>,
        table: &PhoneTable,
    ) -> Result<Self, AlignmentError> {
        let mut warnings = Vec::new();
        let mut intervals = Vec::with_capacity(raw.len());
        for (index, (label, start, end)) in raw.into_iter().enumerate() {
            if !(start.is_finite() && end.is_finite()) || end <= start {
                return Err(AlignmentError::BadInterval {
                    index,
                    label,
                    start,
                    end,
                });
            }
            let (kind, known) = table.classify(&label);
            if !known {
                log::warn!("unknown phoneme label {label:?}, treating as consonant");
                warnings.push(format!("unknown phoneme label {label:?} treated as consonant"));
            }
            intervals.push(PhonemeInterval {
                label: label.trim().to_string(),
                start_s: start,
                end_s: end,
                kind,
            });
        }
        intervals.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for (i, pair) in intervals.windows(2).enumerate() {
            if pair[1].start_s < pair[0].end_s - 1e-9 {
                return Err(AlignmentError::Overlap {
                    first: i,
                    second: i + 1,
                });
            }
        }
        Ok(Self {
            intervals,
            warnings,
        })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn end_s(&self) -> f64 {
        self.intervals.last().map_or(0.0, |i| i.end_s)
    }

    /// Multiset of non-silence labels, in tier order.
    pub fn spoken_labels(&self) -> Vec<&str> {
        self.intervals
            .iter()
            .filter(|i| i.kind != PhoneKind::Silence)
            .map(|i| i.label.as_str())
            .collect()
    }
}
