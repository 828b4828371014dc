//! Phone classification and the legal-onset table used by syllabification.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AlignmentError;

const BUILTIN_TABLE: &str = include_str!("../../data/phones.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhoneKind {
    Vowel,
    Consonant,
    Silence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneTable {
    vowels: HashSet<String>,
    silences: HashSet<String>,
    consonants: HashSet<String>,
    onsets: HashSet<Vec<String>>,
}

/// Uppercases and strips ARPAbet stress digits.
pub fn normalize_symbol(label: &str) -> String {
    label
        .trim()
        .to_uppercase()
        .trim_end_matches(|c: char| c.is_ascii_digit())
        .to_string()
}

impl PhoneTable {
    /// The table shipped in `data/phones.txt`.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TABLE).expect("builtin phone table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AlignmentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AlignmentError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, AlignmentError> {
        let mut table = PhoneTable {
            vowels: HashSet::new(),
            silences: HashSet::new(),
            consonants: HashSet::new(),
            onsets: HashSet::new(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let directive = words.next().unwrap_or_default();
            let symbols: Vec<String> = words.map(|w| w.to_uppercase()).collect();
            match directive {
                "vowel" => table.vowels.extend(symbols),
                "silence" => table.silences.extend(symbols),
                "consonant" => table.consonants.extend(symbols),
                "onset" if !symbols.is_empty() => {
                    table.onsets.insert(symbols);
                }
                _ => {
                    return Err(AlignmentError::PhoneTable {
                        line: lineno + 1,
                        message: format!("unrecognized entry {line:?}"),
                    })
                }
            }
        }
        if table.vowels.is_empty() {
            return Err(AlignmentError::PhoneTable {
                line: 0,
                message: "table declares no vowels".into(),
            });
        }
        Ok(table)
    }

    /// Classifies a raw alignment label. The flag is false for labels the
    /// table does not know (these default to consonant).
    pub fn classify(&self, label: &str) -> (PhoneKind, bool) {
        let trimmed = label.trim();
        if trimmed.is_empty() {
            return (PhoneKind::Silence, true);
        }
        let upper = trimmed.to_uppercase();
        if self.silences.contains(&upper) {
            return (PhoneKind::Silence, true);
        }
        let base = normalize_symbol(trimmed);
        if self.vowels.contains(&base) {
            (PhoneKind::Vowel, true)
        } else {
            (PhoneKind::Consonant, self.consonants.contains(&base))
        }
    }

    pub fn is_legal_onset<S: AsRef<str>>(&self, cluster: &[S]) -> bool {
        if cluster.is_empty() {
            return true;
        }
        let key: Vec<String> = cluster.iter().map(|s| normalize_symbol(s.as_ref())).collect();
        self.onsets.contains(&key)
    }
}

impl Default for PhoneTable {
    fn default() -> Self {
        Self::builtin()
    }
}
