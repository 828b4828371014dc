//! Synthetic speech-like fixtures with known phoneme timing, plus matching
//! melodies and MIDI files.
//!
//! An utterance is silence, then syllables of (optional onset consonant,
//! vowel, optional coda consonant), then silence. Vowels are harmonic series
//! shaped by three formant resonances with a gliding F0; consonants are
//! white-noise bursts; silence is digital zero. All boundaries sit on a 10 ms
//! grid, like forced-aligner output.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{PhoneTable, PhonemeTier};
use crate::audio::{Waveform, CANONICAL_RATE_HZ};
use crate::midi::{writer, NoteEvent, NoteSequence};
use crate::vocoder::{hz_to_semitone, semitone_to_hz};

/// MIDI resolution and tempo used by generated files: 480 ticks per quarter
/// at 120 BPM, so one tick is 1/960 s.
pub const TICKS_PER_QUARTER: u16 = 480;
pub const TICKS_PER_SECOND: f64 = 960.0;

const VOWELS: [(&str, [f64; 3]); 5] = [
    ("AA1", [730.0, 1090.0, 2440.0]),
    ("IY1", [270.0, 2290.0, 3010.0]),
    ("UW1", [300.0, 870.0, 2240.0]),
    ("EH1", [530.0, 1840.0, 2480.0]),
    ("AO1", [570.0, 840.0, 2410.0]),
];
const BANDWIDTHS: [f64; 3] = [80.0, 100.0, 140.0];
const ONSETS: [&str; 6] = ["P", "T", "K", "S", "F", "HH"];
const CODAS: [&str; 2] = ["T", "K"];

#[derive(Debug, Clone)]
pub struct SyntheticUtterance {
    pub id: String,
    pub waveform: Waveform,
    pub tier: PhonemeTier,
    /// Start and end F0 of each vowel glide, in Hz.
    pub vowel_f0_hz: Vec<(f64, f64)>,
}

impl SyntheticUtterance {
    /// Mean of the vowel glides in semitones (glides are linear in semitones).
    pub fn mean_semitone(&self) -> f64 {
        let sum: f64 = self
            .vowel_f0_hz
            .iter()
            .map(|&(a, b)| 0.5 * (hz_to_semitone(a) + hz_to_semitone(b)))
            .sum();
        sum / self.vowel_f0_hz.len() as f64
    }
}

fn centis(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    rng.gen_range(lo..=hi) as f64 / 100.0
}

/// Generates an utterance with `n_syllables` syllables, deterministic in `seed`.
pub fn utterance(id: &str, n_syllables: usize, seed: u64) -> SyntheticUtterance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = CANONICAL_RATE_HZ as f64;
    let base = hz_to_semitone(rng.gen_range(110.0..200.0));

    let mut raw: Vec<(String, f64, f64)> = Vec::new();
    let mut glides = Vec::new();
    let mut formants = Vec::new();
    let mut t = centis(&mut rng, 8, 15);
    for k in 0..n_syllables {
        if k == 0 || rng.gen_bool(0.8) {
            let d = centis(&mut rng, 4, 8);
            raw.push((ONSETS.choose(&mut rng).unwrap().to_string(), t, t + d));
            t += d;
        }
        let (label, f) = VOWELS.choose(&mut rng).unwrap();
        let d = centis(&mut rng, 12, 24);
        raw.push((label.to_string(), t, t + d));
        t += d;
        let start = base + rng.gen_range(-2.0..2.0);
        let end = start + rng.gen_range(-3.0..3.0);
        glides.push((semitone_to_hz(start), semitone_to_hz(end)));
        formants.push(*f);
        if rng.gen_bool(0.3) {
            let d = centis(&mut rng, 4, 7);
            raw.push((CODAS.choose(&mut rng).unwrap().to_string(), t, t + d));
            t += d;
        }
    }
    let total = t + centis(&mut rng, 8, 15);
    let n = (total * fs).round() as usize;
    let mut x = vec![0.0f64; n];

    let mut vowel = 0;
    for (label, a, b) in &raw {
        let (s0, s1) = ((a * fs).round() as usize, (b * fs).round() as usize);
        if label.ends_with('1') {
            render_vowel(&mut x[s0..s1], glides[vowel], &formants[vowel], fs);
            vowel += 1;
        } else {
            let len = s1 - s0;
            for (i, v) in x[s0..s1].iter_mut().enumerate() {
                *v = 0.05 * rng.gen_range(-1.0..1.0) * ramp(i, len, (0.005 * fs) as usize);
            }
        }
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { 0.5 / peak } else { 1.0 };
    let waveform = Waveform::new(x.iter().map(|v| (v * gain) as f32).collect(), CANONICAL_RATE_HZ);
    let tier = PhonemeTier::from_raw(raw, &PhoneTable::builtin()).expect("generated tier is valid");
    SyntheticUtterance {
        id: id.to_string(),
        waveform,
        tier,
        vowel_f0_hz: glides,
    }
}

fn ramp(i: usize, len: usize, width: usize) -> f64 {
    let width = width.min(len / 2).max(1);
    let edge = i.min(len - 1 - i);
    if edge >= width {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge as f64 / width as f64).cos()
    }
}

fn resonance(f: f64, centre: f64, bw: f64) -> f64 {
    let c2 = centre * centre;
    c2 / ((c2 - f * f).powi(2) + (bw * f).powi(2)).sqrt()
}

fn render_vowel(out: &mut [f64], glide: (f64, f64), formants: &[f64; 3], fs: f64) {
    let len = out.len();
    let (p0, p1) = (hz_to_semitone(glide.0), hz_to_semitone(glide.1));
    let fmax = glide.0.max(glide.1);
    let harmonics = ((0.45 * fs) / fmax).floor() as usize;
    let mut phase = 0.0;
    for (i, v) in out.iter_mut().enumerate() {
        let f0 = semitone_to_hz(p0 + (p1 - p0) * i as f64 / len as f64);
        phase += 2.0 * PI * f0 / fs;
        let mut s = 0.0;
        for h in 1..=harmonics {
            let f = h as f64 * f0;
            let amp: f64 = formants
                .iter()
                .zip(BANDWIDTHS)
                .map(|(&c, bw)| resonance(f, c, bw))
                .product::<f64>()
                / h as f64;
            s += amp * (h as f64 * phase).sin();
        }
        *v = s * ramp(i, len, (0.015 * fs) as usize);
    }
}

/// A melody of `n_notes` held notes around `centre` (MIDI pitch), as
/// `(pitch, ticks)` pairs. Durations are multiples of 0.05 s between 0.15 s
/// and 0.8 s.
pub fn melody(n_notes: usize, centre: i32, seed: u64) -> Vec<(u8, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pitch = centre;
    (0..n_notes)
        .map(|_| {
            pitch = (pitch + rng.gen_range(-4..=4)).clamp(centre - 6, centre + 6);
            let ticks = 48 * rng.gen_range(3u32..=16);
            (pitch.clamp(1, 127) as u8, ticks)
        })
        .collect()
}

/// The melody as a gapless note sequence, onsets from zero.
pub fn note_sequence(melody: &[(u8, u32)], source_id: &str) -> NoteSequence {
    let mut t = 0u32;
    NoteSequence {
        notes: melody
            .iter()
            .map(|&(pitch, ticks)| {
                let n = NoteEvent {
                    pitch,
                    onset_s: t as f64 / TICKS_PER_SECOND,
                    duration_s: ticks as f64 / TICKS_PER_SECOND,
                    velocity: 80,
                };
                t += ticks;
                n
            })
            .collect(),
        source_id: source_id.to_string(),
    }
}

/// Format-1 file: a tempo track and one melody track on channel 0.
pub fn midi_file(melody: &[(u8, u32)]) -> Vec<u8> {
    let tempo_track = vec![(0, writer::tempo(500_000))];
    writer::smf(1, TICKS_PER_QUARTER, &[tempo_track, writer::melody(0, melody)])
}
