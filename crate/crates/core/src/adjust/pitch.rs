use serde::{Deserialize, Serialize};

use super::{frame_span, PlanError};
use crate::alignment::{PairKind, SyllableNoteAlignment, SyllableSequence};
use crate::midi::NoteSequence;
use crate::vocoder::{semitone_to_hz, F0Contour, VocoderParams};

/// Frames `start_frame..end_frame` of syllable `syllable` take note `note`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PitchSegment {
    pub syllable: usize,
    pub note: usize,
    pub start_frame: usize,
    pub end_frame: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchPlan {
    pub target_f0: F0Contour,
    pub global_shift_semitones: i32,
    pub segment_log: Vec<PitchSegment>,
}

/// Integer transposition applied to the whole note sequence.
///
/// With `d = note_mean - speech_mean`: zero if `|d| <= threshold`, otherwise
/// `-round(d)`, which leaves at most half a semitone between the means.
pub fn compute_global_shift(speech_mean: f64, note_mean: f64, threshold: f64) -> i32 {
    let d = note_mean - speech_mean;
    if d.abs() <= threshold {
        0
    } else {
        -(d.round() as i32)
    }
}

/// Builds the target contour on the source frame grid.
///
/// Syllable frames take their note's shifted pitch (a one-to-many syllable is
/// cut into runs proportional to the note durations). Frames outside every
/// syllable are interpolated in semitones between the neighbouring targets,
/// or hold the nearest target at either end. Unvoiced source frames stay
/// unvoiced.
pub fn build_pitch_plan(
    src: &F0Contour,
    syllables: &SyllableSequence,
    notes: &NoteSequence,
    align: &SyllableNoteAlignment,
    shift: i32,
) -> Result<PitchPlan, PlanError> {
    let n = src.len();
    align
        .check(syllables.len(), notes.len())
        .map_err(PlanError::Inconsistent)?;
    if let Some(last) = syllables.syllables.last() {
        if last.end_s > n as f64 * src.hop_s + src.hop_s {
            return Err(PlanError::Inconsistent(format!(
                "syllables end at {:.3} s but the contour covers {:.3} s",
                last.end_s,
                n as f64 * src.hop_s
            )));
        }
    }

    let pitch_of = |note: usize| notes.notes[note].pitch as f64 + shift as f64;
    let mut target: Vec<Option<f64>> = vec![None; n];
    let mut segment_log = Vec::new();
    for pair in &align.pairs {
        if pair.kind() == PairKind::OneToMany {
            let s = pair.syllables[0];
            let syl = &syllables.syllables[s];
            let span = frame_span(syl.start_s, syl.end_s, src.hop_s, n);
            let durs: Vec<f64> = pair.notes.iter().map(|&j| notes.notes[j].duration_s).collect();
            let total: f64 = durs.iter().sum();
            let len = span.len() as f64;
            let mut cum = 0.0;
            let mut start = span.start;
            for (k, &j) in pair.notes.iter().enumerate() {
                cum += durs[k];
                let end = if k + 1 == pair.notes.len() {
                    span.end
                } else {
                    span.start + (len * cum / total).round() as usize
                };
                target[start..end].fill(Some(pitch_of(j)));
                segment_log.push(PitchSegment {
                    syllable: s,
                    note: j,
                    start_frame: start,
                    end_frame: end,
                });
                start = end;
            }
        } else {
            let j = pair.notes[0];
            for &s in &pair.syllables {
                let syl = &syllables.syllables[s];
                let span = frame_span(syl.start_s, syl.end_s, src.hop_s, n);
                target[span.clone()].fill(Some(pitch_of(j)));
                segment_log.push(PitchSegment {
                    syllable: s,
                    note: j,
                    start_frame: span.start,
                    end_frame: span.end,
                });
            }
        }
    }

    let filled = fill_gaps(&target).ok_or_else(|| {
        PlanError::Inconsistent("no syllable covers any frame of the contour".into())
    })?;
    let f0_hz = src
        .f0_hz
        .iter()
        .zip(&filled)
        .map(|(&f, &p)| if f > 0.0 { semitone_to_hz(p) } else { 0.0 })
        .collect();
    Ok(PitchPlan {
        target_f0: F0Contour {
            f0_hz,
            hop_s: src.hop_s,
        },
        global_shift_semitones: shift,
        segment_log,
    })
}

/// Linear interpolation between anchored frames; ends hold the nearest anchor.
fn fill_gaps(target: &[Option<f64>]) -> Option<Vec<f64>> {
    let anchors: Vec<usize> = (0..target.len()).filter(|&i| target[i].is_some()).collect();
    let first = *anchors.first()?;
    let last = *anchors.last()?;
    let mut out = vec![0.0; target.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = match target[i] {
            Some(p) => p,
            None if i < first => target[first].unwrap(),
            None if i > last => target[last].unwrap(),
            None => {
                let k = anchors.partition_point(|&a| a < i);
                let (a, b) = (anchors[k - 1], anchors[k]);
                let (pa, pb) = (target[a].unwrap(), target[b].unwrap());
                pa + (pb - pa) * (i - a) as f64 / (b - a) as f64
            }
        };
    }
    Some(out)
}

/// Plan that transposes every voiced frame by `semitones`.
pub fn transpose_plan(src: &F0Contour, semitones: f64) -> PitchPlan {
    PitchPlan {
        target_f0: F0Contour {
            f0_hz: src
                .f0_hz
                .iter()
                .map(|&f| if f > 0.0 { f * 2f64.powf(semitones / 12.0) } else { 0.0 })
                .collect(),
            hop_s: src.hop_s,
        },
        global_shift_semitones: 0,
        segment_log: Vec::new(),
    }
}

/// Replaces F0 with the plan's target; envelope and aperiodicity are copied
/// untouched.
pub fn apply_pitch(params: &VocoderParams, plan: &PitchPlan) -> Result<VocoderParams, PlanError> {
    let n = params.frame_count();
    if plan.target_f0.len() != n {
        return Err(PlanError::GridMismatch {
            expected: n,
            got: plan.target_f0.len(),
        });
    }
    if (plan.target_f0.hop_s - params.f0.hop_s).abs() > 1e-12 {
        return Err(PlanError::Inconsistent("plan and params use different hops".into()));
    }
    for (i, (&src, &tgt)) in params.f0.f0_hz.iter().zip(&plan.target_f0.f0_hz).enumerate() {
        if (src > 0.0) != (tgt > 0.0) {
            return Err(PlanError::Inconsistent(format!("frame {i}: plan changes voicing")));
        }
    }
    let mut out = params.clone();
    out.f0.f0_hz.clone_from(&plan.target_f0.f0_hz);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{AlignedPair, PhoneKind, PhonemeInterval, Syllable};
    use crate::midi::NoteEvent;
    use crate::vocoder::hz_to_semitone;

    fn syl(start: f64, end: f64) -> Syllable {
        Syllable {
            phonemes: vec![PhonemeInterval {
                label: "AA1".into(),
                start_s: start,
                end_s: end,
                kind: PhoneKind::Vowel,
            }],
            tier_indices: vec![0],
            nucleus_index: 0,
            start_s: start,
            end_s: end,
        }
    }

    fn notes(spec: &[(u8, f64)]) -> NoteSequence {
        let mut t = 0.0;
        NoteSequence {
            notes: spec
                .iter()
                .map(|&(pitch, d)| {
                    let n = NoteEvent {
                        pitch,
                        onset_s: t,
                        duration_s: d,
                        velocity: 80,
                    };
                    t += d;
                    n
                })
                .collect(),
            source_id: "t".into(),
        }
    }

    fn voiced(n: usize) -> F0Contour {
        F0Contour {
            f0_hz: vec![150.0; n],
            hop_s: 0.01,
        }
    }

    fn pair(s: &[usize], n: &[usize]) -> AlignedPair {
        AlignedPair {
            syllables: s.to_vec(),
            notes: n.to_vec(),
            forced: false,
        }
    }

    #[test]
    fn global_shift_examples() {
        assert_eq!(compute_global_shift(52.0, 55.0, 5.0), 0);
        assert_eq!(compute_global_shift(52.0, 70.3, 5.0), -18);
        assert_eq!(compute_global_shift(60.0, 60.0, 5.0), 0);
        assert_eq!(compute_global_shift(60.0, 65.0, 5.0), 0);
        assert_eq!(compute_global_shift(60.0, 50.0, 5.0), 10);
    }

    #[test]
    fn one_to_one_fills_syllable_frames() {
        let syls = SyllableSequence {
            syllables: vec![syl(0.10, 0.30)],
        };
        let plan = build_pitch_plan(
            &voiced(40),
            &syls,
            &notes(&[(69, 0.2)]),
            &SyllableNoteAlignment {
                pairs: vec![pair(&[0], &[0])],
            },
            0,
        )
        .unwrap();
        for i in 10..30 {
            assert!((plan.target_f0.f0_hz[i] - 440.0).abs() < 1e-9);
        }
        assert_eq!(plan.segment_log[0].start_frame, 10);
        assert_eq!(plan.segment_log[0].end_frame, 30);
    }

    #[test]
    fn one_to_many_splits_in_proportion() {
        let syls = SyllableSequence {
            syllables: vec![syl(0.0, 0.30)],
        };
        let plan = build_pitch_plan(
            &voiced(30),
            &syls,
            &notes(&[(60, 0.2), (64, 0.1)]),
            &SyllableNoteAlignment {
                pairs: vec![pair(&[0], &[0, 1])],
            },
            0,
        )
        .unwrap();
        let f = &plan.target_f0.f0_hz;
        for v in &f[0..20] {
            assert!((v - 261.6255653005986).abs() < 1e-6);
        }
        for v in &f[20..30] {
            assert!((v - 329.6275569128699).abs() < 1e-6);
        }
    }

    #[test]
    fn gap_frames_ramp_in_semitones() {
        // targets end at frame 29 and resume at frame 35: six intervals
        let syls = SyllableSequence {
            syllables: vec![syl(0.0, 0.30), syl(0.35, 0.50)],
        };
        let plan = build_pitch_plan(
            &voiced(50),
            &syls,
            &notes(&[(69, 0.3), (71, 0.15)]),
            &SyllableNoteAlignment {
                pairs: vec![pair(&[0], &[0]), pair(&[1], &[1])],
            },
            0,
        )
        .unwrap();
        for (k, i) in (29..=35).enumerate() {
            let p = hz_to_semitone(plan.target_f0.f0_hz[i]);
            assert!((p - (69.0 + 2.0 * k as f64 / 6.0)).abs() < 1e-9, "frame {i}: {p}");
        }
    }

    #[test]
    fn unvoiced_frames_stay_unvoiced_and_edges_hold() {
        let mut src = voiced(40);
        src.f0_hz[15] = 0.0;
        let syls = SyllableSequence {
            syllables: vec![syl(0.10, 0.30)],
        };
        let plan = build_pitch_plan(
            &src,
            &syls,
            &notes(&[(57, 0.2)]),
            &SyllableNoteAlignment {
                pairs: vec![pair(&[0], &[0])],
            },
            2,
        )
        .unwrap();
        assert_eq!(plan.target_f0.f0_hz[15], 0.0);
        assert!((hz_to_semitone(plan.target_f0.f0_hz[0]) - 59.0).abs() < 1e-9);
        assert!((hz_to_semitone(plan.target_f0.f0_hz[39]) - 59.0).abs() < 1e-9);
    }

    #[test]
    fn apply_keeps_envelope_and_aperiodicity() {
        let params = VocoderParams {
            f0: voiced(3),
            spectral_envelope: vec![vec![1.0, 2.0, 3.0]; 3],
            aperiodicity: vec![vec![0.1, 0.9]; 3],
            band_edges_hz: vec![1000.0],
            sample_rate_hz: 16000,
            fft_size: 4,
        };
        let plan = transpose_plan(&params.f0, 12.0);
        let out = apply_pitch(&params, &plan).unwrap();
        assert_eq!(out.spectral_envelope, params.spectral_envelope);
        assert_eq!(out.aperiodicity, params.aperiodicity);
        assert!((out.f0.f0_hz[1] - 300.0).abs() < 1e-9);

        let identity = transpose_plan(&params.f0, 0.0);
        assert_eq!(apply_pitch(&params, &identity).unwrap(), params);

        let mut short = plan.clone();
        short.target_f0.f0_hz.pop();
        assert!(matches!(apply_pitch(&params, &short), Err(PlanError::GridMismatch { .. })));
    }
}
