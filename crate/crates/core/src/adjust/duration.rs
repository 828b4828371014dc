use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::alignment::{PhoneKind, PhonemeTier, SyllableNoteAlignment, SyllableSequence};
use crate::midi::NoteSequence;
use crate::vocoder::{hz_to_semitone, semitone_to_hz, F0Contour, VocoderParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DurationConfig {
    /// Shortest vowel the plan will ask for, in seconds.
    pub min_vowel_s: f64,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl Default for DurationConfig {
    fn default() -> Self {
        Self {
            min_vowel_s: 0.030,
            scale_min: 0.25,
            scale_max: 8.0,
        }
    }
}

/// One phoneme (or an implicit silence filling an untranscribed stretch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationEntry {
    /// Index into the source tier; `None` for implicit silence.
    pub phoneme_index: Option<usize>,
    pub label: String,
    pub kind: PhoneKind,
    pub source_start_s: f64,
    pub source_end_s: f64,
    pub target_start_s: f64,
    pub target_end_s: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampRecord {
    pub pair: usize,
    pub requested_scale: f64,
    pub applied_scale: f64,
}

/// A rest longer than one hop between consecutive notes. Rests are reported,
/// not rendered: silence is never stretched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestGap {
    pub after_note: usize,
    pub gap_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationPlan {
    pub entries: Vec<DurationEntry>,
    pub total_target_s: f64,
    pub clamps: Vec<ClampRecord>,
    pub rest_gaps: Vec<RestGap>,
}

/// Builds a plan that stretches only vowels.
///
/// For each pair with consonant time `C` (inner silences count as fixed time
/// too), vowel time `V` and note time `T`, every vowel in the pair is scaled
/// by `max(T - C, min_vowel_s * vowels) / V`, clamped to
/// `[scale_min, scale_max]`. Any deviation from `(T - C) / V` is recorded in
/// `clamps`. Consonants and silences keep scale 1. The entries tile
/// `[0, source_total_s]`; stretches the tier does not cover become implicit
/// silence.
pub fn compute_duration_plan(
    tier: &PhonemeTier,
    syllables: &SyllableSequence,
    notes: &NoteSequence,
    align: &SyllableNoteAlignment,
    cfg: &DurationConfig,
    source_total_s: f64,
    hop_s: f64,
) -> Result<DurationPlan, PlanError> {
    align
        .check(syllables.len(), notes.len())
        .map_err(PlanError::Inconsistent)?;
    let mut scales = vec![1.0; tier.len()];
    let mut clamps = Vec::new();
    for (k, pair) in align.pairs.iter().enumerate() {
        let members: Vec<usize> = pair
            .syllables
            .iter()
            .flat_map(|&s| syllables.syllables[s].tier_indices.iter().copied())
            .collect();
        let (first, last) = match (members.first(), members.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(PlanError::Inconsistent(format!("pair {k} has no phonemes"))),
        };
        let span = &tier.intervals[first..=last];
        let vowels: Vec<f64> = span
            .iter()
            .filter(|p| p.kind == PhoneKind::Vowel)
            .map(|p| p.duration_s())
            .collect();
        let v: f64 = vowels.iter().sum();
        if vowels.is_empty() || v <= 0.0 {
            return Err(PlanError::Inconsistent(format!("pair {k} has no vowel time")));
        }
        let whole = span.last().unwrap().end_s - span[0].start_s;
        let c = whole - v;
        let t: f64 = pair.notes.iter().map(|&j| notes.notes[j].duration_s).sum();
        let requested = (t - c) / v;
        let floored = (t - c).max(cfg.min_vowel_s * vowels.len() as f64) / v;
        let applied = floored.clamp(cfg.scale_min, cfg.scale_max);
        if (applied - requested).abs() > 1e-9 {
            log::debug!("pair {k}: vowel scale {requested:.3} clamped to {applied:.3}");
            clamps.push(ClampRecord {
                pair: k,
                requested_scale: requested,
                applied_scale: applied,
            });
        }
        for i in first..=last {
            if tier.intervals[i].kind == PhoneKind::Vowel {
                scales[i] = applied;
            }
        }
    }

    let mut rest_gaps = Vec::new();
    for (j, w) in notes.notes.windows(2).enumerate() {
        let gap = w[1].onset_s - w[0].end_s();
        if gap > hop_s {
            log::debug!("rest of {gap:.3} s after note {j} left unrendered");
            rest_gaps.push(RestGap {
                after_note: j,
                gap_s: gap,
            });
        }
    }

    Ok(build_entries(tier, &scales, source_total_s, clamps, rest_gaps))
}

/// Plan scaling every vowel by the same `ratio`; used by the random baseline.
pub fn uniform_vowel_plan(tier: &PhonemeTier, ratio: f64, source_total_s: f64) -> DurationPlan {
    let scales: Vec<f64> = tier
        .intervals
        .iter()
        .map(|p| if p.kind == PhoneKind::Vowel { ratio } else { 1.0 })
        .collect();
    build_entries(tier, &scales, source_total_s, Vec::new(), Vec::new())
}

fn build_entries(
    tier: &PhonemeTier,
    scales: &[f64],
    source_total_s: f64,
    clamps: Vec<ClampRecord>,
    rest_gaps: Vec<RestGap>,
) -> DurationPlan {
    let mut entries = Vec::with_capacity(tier.len() + 2);
    let mut cursor = 0.0;
    let mut target = 0.0;
    let mut push = |entries: &mut Vec<DurationEntry>, idx: Option<usize>, label: &str, kind, a: f64, b: f64, scale: f64| {
        let len = (b - a) * scale;
        entries.push(DurationEntry {
            phoneme_index: idx,
            label: label.to_string(),
            kind,
            source_start_s: a,
            source_end_s: b,
            target_start_s: target,
            target_end_s: target + len,
            scale,
        });
        target += len;
    };
    for (i, p) in tier.intervals.iter().enumerate() {
        if p.start_s > cursor + 1e-9 {
            push(&mut entries, None, "", PhoneKind::Silence, cursor, p.start_s, 1.0);
        }
        let start = p.start_s.max(cursor);
        push(&mut entries, Some(i), &p.label, p.kind, start, p.end_s, scales[i]);
        cursor = p.end_s;
    }
    if source_total_s > cursor + 1e-9 {
        push(&mut entries, None, "", PhoneKind::Silence, cursor, source_total_s, 1.0);
    }
    let total_target_s = entries.last().map_or(0.0, |e| e.target_end_s);
    DurationPlan {
        entries,
        total_target_s,
        clamps,
        rest_gaps,
    }
}

/// Output of [`apply_duration`]: the retimed parameters and, per plan entry,
/// its frame span in the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Retimed {
    pub params: VocoderParams,
    pub spans: Vec<(usize, usize)>,
}

impl Retimed {
    /// Output span of entry `k` in seconds.
    pub fn span_s(&self, k: usize) -> (f64, f64) {
        let hop = self.params.f0.hop_s;
        let (a, b) = self.spans[k];
        (a as f64 * hop, b as f64 * hop)
    }
}

/// Retimes parameters frame by frame.
///
/// Every run ends on the frame nearest its planned end time, so rounding
/// error never accumulates. Consonants and silences are unscaled, so a run
/// that spans a whole number of frames keeps exactly that many; others move
/// by at most one frame. Vowels keep at least one frame. The last run absorbs
/// whatever is needed to make the total `round(total_target_s / hop)`.
/// Within a run, frames are
/// resampled by linear interpolation; F0 is interpolated in semitones between
/// voiced neighbours and takes the voicing of the nearest source frame.
pub fn apply_duration(params: &VocoderParams, plan: &DurationPlan) -> Result<Retimed, PlanError> {
    params
        .validate()
        .map_err(|e| PlanError::Inconsistent(e.to_string()))?;
    let hop = params.f0.hop_s;
    let n_src = params.frame_count();
    let plan_end = plan.entries.last().map_or(0.0, |e| e.source_end_s);
    if (plan_end - n_src as f64 * hop).abs() > hop + 1e-9 {
        return Err(PlanError::Inconsistent(format!(
            "plan covers {plan_end:.3} s but params cover {:.3} s",
            n_src as f64 * hop
        )));
    }
    for w in plan.entries.windows(2) {
        if (w[1].source_start_s - w[0].source_end_s).abs() > 1e-9 {
            return Err(PlanError::Inconsistent("plan entries do not tile the source".into()));
        }
    }

    let to_frame = |t: f64| ((t / hop).round().max(0.0) as usize).min(n_src);
    let mut counts: Vec<usize> = Vec::with_capacity(plan.entries.len());
    let mut pos = 0usize;
    for e in &plan.entries {
        let min = usize::from(e.kind == PhoneKind::Vowel) as isize;
        let count = ((e.target_end_s / hop).round() as isize - pos as isize).max(min) as usize;
        counts.push(count);
        pos += count;
    }
    let want = (plan.total_target_s / hop).round() as usize;
    if let Some(last) = counts.last_mut() {
        let fixed = pos - *last;
        *last = want.saturating_sub(fixed);
    }

    let n_out: usize = counts.iter().sum();
    let bands = params.aperiodicity.first().map_or(0, Vec::len);
    let mut out = VocoderParams {
        f0: F0Contour {
            f0_hz: Vec::with_capacity(n_out),
            hop_s: hop,
        },
        spectral_envelope: Vec::with_capacity(n_out),
        aperiodicity: Vec::with_capacity(n_out),
        band_edges_hz: params.band_edges_hz.clone(),
        sample_rate_hz: params.sample_rate_hz,
        fft_size: params.fft_size,
    };
    let mut spans = Vec::with_capacity(counts.len());
    for (e, &count) in plan.entries.iter().zip(&counts) {
        let a = to_frame(e.source_start_s).min(n_src - 1);
        let b = to_frame(e.source_end_s).max(a + 1).min(n_src);
        let m = b - a;
        let start = out.frame_count();
        for j in 0..count {
            let pos = if count == m {
                (a + j) as f64
            } else {
                (a as f64 + (j as f64 + 0.5) * m as f64 / count as f64 - 0.5).clamp(a as f64, (b - 1) as f64)
            };
            push_frame(params, pos, bands, &mut out);
        }
        spans.push((start, out.frame_count()));
    }
    Ok(Retimed { params: out, spans })
}

fn push_frame(src: &VocoderParams, pos: f64, bands: usize, out: &mut VocoderParams) {
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(src.frame_count() - 1);
    let t = pos - lo as f64;
    let lerp = |x: &[f64], y: &[f64]| -> Vec<f64> {
        if t == 0.0 {
            x.to_vec()
        } else {
            x.iter().zip(y).map(|(a, b)| a + (b - a) * t).collect()
        }
    };
    out.spectral_envelope
        .push(lerp(&src.spectral_envelope[lo], &src.spectral_envelope[hi]));
    let ap = lerp(&src.aperiodicity[lo], &src.aperiodicity[hi]);
    debug_assert_eq!(ap.len(), bands);
    out.aperiodicity.push(ap);
    let (fa, fb) = (src.f0.f0_hz[lo], src.f0.f0_hz[hi]);
    let nearest = if t < 0.5 { fa } else { fb };
    let f0 = if t == 0.0 {
        fa
    } else if fa > 0.0 && fb > 0.0 {
        semitone_to_hz(hz_to_semitone(fa) * (1.0 - t) + hz_to_semitone(fb) * t)
    } else {
        nearest
    };
    out.f0.f0_hz.push(f0);
}
