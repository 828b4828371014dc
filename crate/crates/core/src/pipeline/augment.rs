use super::config::{AugmentConfig, Mode};
use super::seed::RandomDraw;
use super::PipelineError;
use crate::adjust::{
    apply_duration, apply_pitch, build_pitch_plan, compute_duration_plan, compute_global_shift,
    transpose_plan, uniform_vowel_plan, DurationPlan, PitchPlan,
};
use crate::alignment::{
    align_speech_notes, syllabify, PhoneTable, PhonemeInterval, PhonemeTier, SyllableNoteAlignment,
    SyllableSequence,
};
use crate::audio::Waveform;
use crate::midi::NoteSequence;
use crate::vocoder::{analyze, synthesize, VocoderParams};

/// A canonical-rate utterance and its phoneme tier.
#[derive(Debug, Clone)]
pub struct SourceUtterance {
    pub id: String,
    pub waveform: Waveform,
    pub tier: PhonemeTier,
}

/// Everything produced for one augmented utterance.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub waveform: Waveform,
    pub clipped_samples: usize,
    /// Parameters as sent to the synthesizer.
    pub edited: VocoderParams,
    pub syllables: SyllableSequence,
    pub alignment: Option<SyllableNoteAlignment>,
    pub speech_mean_semitone: Option<f64>,
    pub note_mean_semitone: Option<f64>,
    pub global_shift_semitones: i32,
    pub pitch_plan: Option<PitchPlan>,
    pub duration_plan: Option<DurationPlan>,
    /// Output frame span of each duration-plan entry.
    pub spans: Option<Vec<(usize, usize)>>,
    /// Phoneme tier on the output time axis.
    pub output_tier: Vec<PhonemeInterval>,
}

/// Score-guided augmentation of one utterance against a note window.
pub fn augment_with_notes(
    src: &SourceUtterance,
    notes: &NoteSequence,
    mode: Mode,
    cfg: &AugmentConfig,
    table: &PhoneTable,
    noise_seed: u64,
) -> Result<Augmented, PipelineError> {
    if mode == Mode::Random {
        return Err(PipelineError::Config(
            "random mode does not take notes; use the random baseline".into(),
        ));
    }
    let params = analyze(&src.waveform, &cfg.vocoder)?;
    let syllables = syllabify(&src.tier, table)?;
    if notes.is_empty() {
        return Err(PipelineError::Selection("empty note window".into()));
    }
    let t = &cfg.thresholds;
    let alignment = align_speech_notes(&syllables, notes, t.ratio_low, t.ratio_high);
    let speech_mean = params.f0.mean_semitone();
    let note_mean = notes.mean_pitch();

    let mut edited = params;
    let mut shift = 0;
    let mut pitch_plan = None;
    if mode.adjusts_pitch() {
        let speech_mean = speech_mean.ok_or(PipelineError::NoVoicedFrames)?;
        let note_mean = note_mean.ok_or_else(|| PipelineError::Selection("empty note window".into()))?;
        shift = compute_global_shift(speech_mean, note_mean, t.shift_threshold);
        let plan = build_pitch_plan(&edited.f0, &syllables, notes, &alignment, shift)?;
        edited = apply_pitch(&edited, &plan)?;
        pitch_plan = Some(plan);
    }

    let mut duration_plan = None;
    let mut spans = None;
    let mut output_tier = src.tier.intervals.clone();
    if mode.adjusts_duration() {
        let plan = compute_duration_plan(
            &src.tier,
            &syllables,
            notes,
            &alignment,
            &cfg.duration,
            src.waveform.duration_s(),
            cfg.vocoder.hop_s,
        )?;
        let retimed = apply_duration(&edited, &plan)?;
        output_tier = retimed_tier(&src.tier, &plan, &retimed.spans, cfg.vocoder.hop_s);
        edited = retimed.params;
        spans = Some(retimed.spans);
        duration_plan = Some(plan);
    }

    let synth = synthesize(&edited, noise_seed)?;
    Ok(Augmented {
        waveform: synth.waveform,
        clipped_samples: synth.clipped_samples,
        edited,
        syllables,
        alignment: Some(alignment),
        speech_mean_semitone: speech_mean,
        note_mean_semitone: note_mean,
        global_shift_semitones: shift,
        pitch_plan,
        duration_plan,
        spans,
        output_tier,
    })
}

/// The random baseline: one transposition of the whole contour and one
/// duration ratio applied to every vowel.
pub fn augment_random(
    src: &SourceUtterance,
    draw: RandomDraw,
    cfg: &AugmentConfig,
    table: &PhoneTable,
    noise_seed: u64,
) -> Result<Augmented, PipelineError> {
    let params = analyze(&src.waveform, &cfg.vocoder)?;
    let syllables = syllabify(&src.tier, table)?;
    let speech_mean = params.f0.mean_semitone();
    let pitch_plan = transpose_plan(&params.f0, draw.pitch_offset_semitones);
    let shifted = apply_pitch(&params, &pitch_plan)?;
    let plan = uniform_vowel_plan(&src.tier, draw.duration_ratio, src.waveform.duration_s());
    let retimed = apply_duration(&shifted, &plan)?;
    let output_tier = retimed_tier(&src.tier, &plan, &retimed.spans, cfg.vocoder.hop_s);
    let synth = synthesize(&retimed.params, noise_seed)?;
    Ok(Augmented {
        waveform: synth.waveform,
        clipped_samples: synth.clipped_samples,
        edited: retimed.params,
        syllables,
        alignment: None,
        speech_mean_semitone: speech_mean,
        note_mean_semitone: None,
        global_shift_semitones: 0,
        pitch_plan: Some(pitch_plan),
        duration_plan: Some(plan),
        spans: Some(retimed.spans),
        output_tier,
    })
}

/// Source phonemes placed at their output frame spans. Phonemes retimed to
/// zero frames are dropped.
fn retimed_tier(
    tier: &PhonemeTier,
    plan: &DurationPlan,
    spans: &[(usize, usize)],
    hop_s: f64,
) -> Vec<PhonemeInterval> {
    plan.entries
        .iter()
        .zip(spans)
        .filter_map(|(e, &(a, b))| {
            let i = e.phoneme_index?;
            (b > a).then(|| PhonemeInterval {
                label: tier.intervals[i].label.clone(),
                start_s: a as f64 * hop_s,
                end_s: b as f64 * hop_s,
                kind: tier.intervals[i].kind,
            })
        })
        .collect()
}
