//! Per-utterance pitch and duration statistics and their corpus means.
//!
//! Pitch metrics use voiced frames only, in semitones. Duration metrics use
//! syllable durations in seconds. A metric that is undefined for an utterance
//! (no voiced frames, say) is `null` and left out of that metric's mean.
//!
//! JSON schema of a report (keys in this order):
//!
//! ```text
//! {
//!   "corpus_id": str,
//!   "utterance_count": int,
//!   "failed_count": int,
//!   "means": {"pitch_range_semitones": num|null, "pitch_smoothness": num|null,
//!             "duration_range_s": num|null, "duration_variance_s2": num|null},
//!   "defined_counts": {same keys, int},
//!   "utterances": [{"id": str, "pitch_range_semitones": num|null,
//!                   "pitch_smoothness": num|null, "duration_range_s": num|null,
//!                   "duration_variance_s2": num|null, "n_voiced_frames": int,
//!                   "n_syllables": int}, ...]   sorted by id
//! }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::SyllableSequence;
use crate::vocoder::F0Contour;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("corpus has no utterances")]
    EmptyCorpus,
}

/// Max minus min semitone pitch over voiced frames.
pub fn pitch_range(c: &F0Contour) -> Option<f64> {
    let p: Vec<f64> = c.semitones().into_iter().flatten().collect();
    if p.is_empty() {
        return None;
    }
    let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max - min)
}

/// Mean absolute semitone step between adjacent frames that are both voiced.
pub fn pitch_smoothness(c: &F0Contour) -> Option<f64> {
    let p = c.semitones();
    let steps: Vec<f64> = p
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some((b - a).abs()),
            _ => None,
        })
        .collect();
    if steps.is_empty() {
        None
    } else {
        Some(steps.iter().sum::<f64>() / steps.len() as f64)
    }
}

pub fn duration_range(durations: &[f64]) -> Option<f64> {
    if durations.is_empty() {
        return None;
    }
    let max = durations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = durations.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max - min)
}

/// Population variance.
pub fn duration_variance(durations: &[f64]) -> Option<f64> {
    if durations.is_empty() {
        return None;
    }
    let n = durations.len() as f64;
    let mean = durations.iter().sum::<f64>() / n;
    Some(durations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceStats {
    pub id: String,
    pub pitch_range_semitones: Option<f64>,
    pub pitch_smoothness: Option<f64>,
    pub duration_range_s: Option<f64>,
    pub duration_variance_s2: Option<f64>,
    pub n_voiced_frames: usize,
    pub n_syllables: usize,
}

impl UtteranceStats {
    pub fn compute(id: &str, f0: &F0Contour, syllables: &SyllableSequence) -> Self {
        let d = syllables.durations_s();
        Self {
            id: id.to_string(),
            pitch_range_semitones: pitch_range(f0),
            pitch_smoothness: pitch_smoothness(f0),
            duration_range_s: duration_range(&d),
            duration_variance_s2: duration_variance(&d),
            n_voiced_frames: f0.voiced_count(),
            n_syllables: d.len(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub pitch_range_semitones: Option<f64>,
    pub pitch_smoothness: Option<f64>,
    pub duration_range_s: Option<f64>,
    pub duration_variance_s2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub pitch_range_semitones: usize,
    pub pitch_smoothness: usize,
    pub duration_range_s: usize,
    pub duration_variance_s2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub corpus_id: String,
    pub utterance_count: usize,
    /// Utterances that could not be analysed at all.
    pub failed_count: usize,
    pub means: MetricMeans,
    pub defined_counts: MetricCounts,
    pub utterances: Vec<UtteranceStats>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        (None, 0)
    } else {
        (Some(defined.iter().sum::<f64>() / defined.len() as f64), defined.len())
    }
}

/// Sorts utterances by id and averages each metric over the utterances where
/// it is defined.
pub fn corpus_report(
    corpus_id: &str,
    mut utterances: Vec<UtteranceStats>,
    failed_count: usize,
) -> Result<StatsReport, StatsError> {
    if utterances.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    utterances.sort_by(|a, b| a.id.cmp(&b.id));
    let (pr, npr) = mean_of(utterances.iter().map(|u| u.pitch_range_semitones));
    let (ps, nps) = mean_of(utterances.iter().map(|u| u.pitch_smoothness));
    let (dr, ndr) = mean_of(utterances.iter().map(|u| u.duration_range_s));
    let (dv, ndv) = mean_of(utterances.iter().map(|u| u.duration_variance_s2));
    Ok(StatsReport {
        corpus_id: corpus_id.to_string(),
        utterance_count: utterances.len(),
        failed_count,
        means: MetricMeans {
            pitch_range_semitones: pr,
            pitch_smoothness: ps,
            duration_range_s: dr,
            duration_variance_s2: dv,
        },
        defined_counts: MetricCounts {
            pitch_range_semitones: npr,
            pitch_smoothness: nps,
            duration_range_s: ndr,
            duration_variance_s2: ndv,
        },
        utterances,
    })
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Side-by-side table: one row per metric, one column per report.
pub fn render_table(reports: &[&StatsReport]) -> String {
    type Row = (&'static str, fn(&MetricMeans) -> Option<f64>);
    let rows: [Row; 4] = [
        ("Pitch Range (semitone)", |m| m.pitch_range_semitones),
        ("Pitch Smoothness", |m| m.pitch_smoothness),
        ("Duration Range (s)", |m| m.duration_range_s),
        ("Duration Variance (s^2)", |m| m.duration_variance_s2),
    ];
    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Property".to_string()];
    header.extend(reports.iter().map(|r| r.corpus_id.clone()));
    cells.push(header);
    for (name, get) in rows {
        let mut row = vec![name.to_string()];
        row.extend(reports.iter().map(|r| match get(&r.means) {
            Some(v) => format!("{v:.4}"),
            None => "-".to_string(),
        }));
        cells.push(row);
    }
    let mut row = vec!["Utterances".to_string()];
    row.extend(reports.iter().map(|r| r.utterance_count.to_string()));
    cells.push(row);

    let cols = cells[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
            out.push('\n');
        }
    }
    out
}
