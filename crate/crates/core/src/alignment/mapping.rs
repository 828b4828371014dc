use serde::{Deserialize, Serialize};

use super::SyllableSequence;
use crate::midi::NoteSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    OneToOne,
    OneToMany,
    ManyToOne,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub syllables: Vec<usize>,
    pub notes: Vec<usize>,
    /// Set on the tail pair(s) that absorbed leftover syllables or notes;
    /// these are exempt from the ratio thresholds.
    #[serde(default)]
    pub forced: bool,
}

impl AlignedPair {
    pub fn kind(&self) -> PairKind {
        match (self.syllables.len(), self.notes.len()) {
            (1, 1) => PairKind::OneToOne,
            (1, _) => PairKind::OneToMany,
            _ => PairKind::ManyToOne,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SyllableNoteAlignment {
    pub pairs: Vec<AlignedPair>,
}

/// Greedy left-to-right syllable/note pairing on raw durations.
///
/// With `r = syllable / note`: inside `[low, high]` the pair is one-to-one;
/// below `low` further syllables join the note until the cumulative ratio
/// reaches `low`; above `high` further notes join the syllable until the
/// cumulative ratio drops to `high`. An accumulation that runs out of items
/// before reaching its bound is flagged `forced`. Items left once either side
/// is used up are merged into the final pair (also `forced`), splitting that
/// pair if merging would make it many-to-many.
pub fn align_durations(
    syllables: &[f64],
    notes: &[f64],
    low: f64,
    high: f64,
) -> SyllableNoteAlignment {
    let (ns, nn) = (syllables.len(), notes.len());
    let mut pairs: Vec<AlignedPair> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < ns && j < nn {
        let r = syllables[i] / notes[j];
        if r < low {
            let mut total = syllables[i];
            let mut k = i + 1;
            while total / notes[j] < low && k < ns {
                total += syllables[k];
                k += 1;
            }
            pairs.push(AlignedPair {
                syllables: (i..k).collect(),
                notes: vec![j],
                forced: total / notes[j] < low,
            });
            i = k;
            j += 1;
        } else if r > high {
            let mut total = notes[j];
            let mut k = j + 1;
            while syllables[i] / total > high && k < nn {
                total += notes[k];
                k += 1;
            }
            pairs.push(AlignedPair {
                syllables: vec![i],
                notes: (j..k).collect(),
                forced: syllables[i] / total > high,
            });
            i += 1;
            j = k;
        } else {
            pairs.push(AlignedPair {
                syllables: vec![i],
                notes: vec![j],
                forced: false,
            });
            i += 1;
            j += 1;
        }
    }

    if let Some(last) = pairs.last_mut() {
        if i < ns {
            if last.notes.len() == 1 {
                last.syllables.extend(i..ns);
                last.forced = true;
            } else {
                let note = last.notes.pop().expect("one-to-many pair has notes");
                last.forced = true;
                pairs.push(AlignedPair {
                    syllables: (i..ns).collect(),
                    notes: vec![note],
                    forced: true,
                });
            }
        } else if j < nn {
            if last.syllables.len() == 1 {
                last.notes.extend(j..nn);
                last.forced = true;
            } else {
                let syl = last.syllables.pop().expect("many-to-one pair has syllables");
                last.forced = true;
                pairs.push(AlignedPair {
                    syllables: vec![syl],
                    notes: (j..nn).collect(),
                    forced: true,
                });
            }
        }
    }
    SyllableNoteAlignment { pairs }
}

/// Aligns syllables to notes using their durations. Note durations are taken
/// before any pitch shift.
pub fn align_speech_notes(
    syllables: &SyllableSequence,
    notes: &NoteSequence,
    ratio_low: f64,
    ratio_high: f64,
) -> SyllableNoteAlignment {
    let syl: Vec<f64> = syllables.durations_s();
    let nd: Vec<f64> = notes.notes.iter().map(|n| n.duration_s).collect();
    align_durations(&syl, &nd, ratio_low, ratio_high)
}

impl SyllableNoteAlignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks totality, monotonicity and the no many-to-many rule.
    pub fn check(&self, n_syllables: usize, n_notes: usize) -> Result<(), String> {
        let syl: Vec<usize> = self.pairs.iter().flat_map(|p| p.syllables.iter().copied()).collect();
        let notes: Vec<usize> = self.pairs.iter().flat_map(|p| p.notes.iter().copied()).collect();
        if syl != (0..n_syllables).collect::<Vec<_>>() {
            return Err(format!("syllable cover {syl:?} is not 0..{n_syllables}"));
        }
        if notes != (0..n_notes).collect::<Vec<_>>() {
            return Err(format!("note cover {notes:?} is not 0..{n_notes}"));
        }
        for (k, p) in self.pairs.iter().enumerate() {
            if p.syllables.is_empty() || p.notes.is_empty() {
                return Err(format!("pair {k} is empty"));
            }
            if p.syllables.len() > 1 && p.notes.len() > 1 {
                return Err(format!("pair {k} is many-to-many"));
            }
        }
        Ok(())
    }
}
