//! Pulse-plus-noise resynthesis.
//!
//! Voiced regions are rendered as a train of minimum-phase pulses placed by
//! integrating the F0 contour sample by sample, each shaped by the periodic
//! share of the envelope `E (1 - ap)`. The aperiodic share `E ap` (all of `E`
//! on unvoiced frames) is rendered as windowed white noise filtered frame by
//! frame and overlap-added.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{hz_to_semitone, semitone_to_hz, VocoderError, VocoderParams};
use crate::audio::Waveform;

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub waveform: Waveform,
    /// Samples that fell outside [-1, 1] and were clipped.
    pub clipped_samples: usize,
}

struct Ffts {
    fwd: std::sync::Arc<dyn Fft<f64>>,
    inv: std::sync::Arc<dyn Fft<f64>>,
    n: usize,
}

/// Renders parameters to audio. `noise_seed` fixes the aperiodic excitation,
/// so equal inputs give bit-identical output.
pub fn synthesize(p: &VocoderParams, noise_seed: u64) -> Result<Synthesis, VocoderError> {
    p.validate()?;
    let fs = p.sample_rate_hz as f64;
    let hop = p.f0.hop_s * fs;
    let n_frames = p.frame_count();
    let n_out = (n_frames as f64 * hop).round() as usize;
    let mut out = vec![0.0f64; n_out];
    if n_frames == 0 {
        return Err(VocoderError::InvalidParams("no frames".into()));
    }

    let mut planner = FftPlanner::<f64>::new();
    let ffts = Ffts {
        fwd: planner.plan_fft_forward(p.fft_size),
        inv: planner.plan_fft_inverse(p.fft_size),
        n: p.fft_size,
    };
    let ap_bins: Vec<Vec<f64>> = p.aperiodicity.iter().map(|a| p.aperiodicity_bins(a)).collect();

    render_pulses(p, &ap_bins, &ffts, hop, &mut out);
    render_noise(p, &ap_bins, &ffts, hop, noise_seed, &mut out);

    let mut waveform = Waveform::new(out.iter().map(|&v| v as f32).collect(), p.sample_rate_hz);
    let clipped_samples = waveform.clip_in_place();
    if clipped_samples > 0 {
        log::debug!("synthesis clipped {clipped_samples} samples");
    }
    Ok(Synthesis {
        waveform,
        clipped_samples,
    })
}

/// F0 at a fractional frame position: voicing from the nearest frame, value
/// interpolated in semitones between voiced neighbours.
fn f0_at(p: &VocoderParams, pos: f64) -> f64 {
    let n = p.frame_count();
    let pos = pos.clamp(0.0, (n - 1) as f64);
    let nearest = pos.round() as usize;
    let f = &p.f0.f0_hz;
    if f[nearest] <= 0.0 {
        return 0.0;
    }
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    match (f[lo] > 0.0, f[hi] > 0.0) {
        (true, true) if lo != hi => {
            let t = pos - lo as f64;
            semitone_to_hz(hz_to_semitone(f[lo]) * (1.0 - t) + hz_to_semitone(f[hi]) * t)
        }
        _ => f[nearest],
    }
}

fn render_pulses(p: &VocoderParams, ap_bins: &[Vec<f64>], ffts: &Ffts, hop: f64, out: &mut [f64]) {
    let fs = p.sample_rate_hz as f64;
    let n = ffts.n;
    let mut cache: HashMap<usize, Vec<Complex64>> = HashMap::new();
    let mut buf = vec![Complex64::default(); n];
    let mut phase = 0.0;
    for s in 0..out.len() {
        let f0 = f0_at(p, s as f64 / hop);
        if f0 <= 0.0 {
            phase = 0.0;
            continue;
        }
        let step = f0 / fs;
        phase += step;
        if phase < 1.0 {
            continue;
        }
        phase -= 1.0;
        let t = s as f64 - phase / step;
        let frame = ((t / hop).round().max(0.0) as usize).min(p.frame_count() - 1);
        let shape = cache
            .entry(frame)
            .or_insert_with(|| periodic_response(&p.spectral_envelope[frame], &ap_bins[frame], ffts));
        let gain = (fs / f0).sqrt();
        let base = t.floor();
        let frac = t - base;
        for (k, slot) in buf.iter_mut().enumerate() {
            // fractional delay as a linear phase term
            let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            let rot = Complex64::from_polar(1.0, -2.0 * PI * kk * frac / n as f64);
            *slot = shape[k] * rot * gain;
        }
        ffts.inv.process(&mut buf);
        let start = base as isize;
        for (m, v) in buf.iter().enumerate() {
            let idx = start + m as isize;
            if idx >= 0 && (idx as usize) < out.len() {
                out[idx as usize] += v.re / n as f64;
            }
        }
        if cache.len() > 64 {
            cache.retain(|&k, _| k + 2 >= frame);
        }
    }
}

/// Spectrum with magnitude `sqrt(E (1 - ap))` and minimum phase, via the
/// folded real cepstrum. The phase is taken from the magnitude floored at
/// `PHASE_FLOOR` of its peak, so frame-to-frame wobble in the deep stopband
/// does not move the pulse's group delay.
const PHASE_FLOOR: f64 = 1e-3;

fn periodic_response(env: &[f64], ap: &[f64], ffts: &Ffts) -> Vec<Complex64> {
    let n = ffts.n;
    let half = n / 2;
    let mag: Vec<f64> = env
        .iter()
        .zip(ap)
        .map(|(&e, &a)| (e * (1.0 - a)).max(0.0).sqrt())
        .collect();
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return vec![Complex64::default(); n];
    }
    let floor = peak * PHASE_FLOOR;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| {
            let b = if k <= half { k } else { n - k };
            Complex64::new(mag[b].max(floor).ln(), 0.0)
        })
        .collect();
    ffts.inv.process(&mut buf);
    for v in buf.iter_mut() {
        *v /= n as f64;
    }
    for v in &mut buf[1..half] {
        *v *= 2.0;
    }
    for v in buf.iter_mut().skip(half + 1) {
        *v = Complex64::default();
    }
    ffts.fwd.process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(k, c)| {
            let b = if k <= half { k } else { n - k };
            Complex64::from_polar(mag[b], c.im)
        })
        .collect()
}

fn render_noise(
    p: &VocoderParams,
    ap_bins: &[Vec<f64>],
    ffts: &Ffts,
    hop: f64,
    seed: u64,
    out: &mut [f64],
) {
    let n = ffts.n;
    let hop_i = hop.round().max(1.0) as usize;
    let seg_len = 2 * hop_i;
    // sqrt of a periodic Hann: squared windows at 50% overlap sum to one
    let window: Vec<f64> = (0..seg_len)
        .map(|k| (PI * k as f64 / seg_len as f64).sin())
        .collect();
    let unit = 3f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![Complex64::default(); n];
    let last = p.frame_count() - 1;
    for i in 0..=p.frame_count() {
        let frame = i.min(last);
        let gains: Vec<f64> = p.spectral_envelope[frame]
            .iter()
            .zip(&ap_bins[frame])
            .map(|(&e, &a)| (e * a).max(0.0).sqrt())
            .collect();
        // draw unconditionally so the noise stream does not depend on voicing
        let noise: Vec<f64> = (0..seg_len).map(|_| rng.gen_range(-unit..unit)).collect();
        if gains.iter().all(|&g| g <= 0.0) {
            continue;
        }
        buf.fill(Complex64::default());
        let off = n / 2 - seg_len / 2;
        for k in 0..seg_len {
            buf[off + k] = Complex64::new(noise[k] * window[k], 0.0);
        }
        ffts.fwd.process(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            let b = if k <= n / 2 { k } else { n - k };
            *v *= gains[b];
        }
        ffts.inv.process(&mut buf);
        let centre = (i * hop_i) as isize;
        let start = centre - (n / 2) as isize;
        for (m, v) in buf.iter().enumerate() {
            let idx = start + m as isize;
            if idx >= 0 && (idx as usize) < out.len() {
                out[idx as usize] += v.re / n as f64;
            }
        }
    }
}
