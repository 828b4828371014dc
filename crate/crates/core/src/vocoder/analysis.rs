//! Spectral envelope and band aperiodicity on the F0 frame grid.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::f0::{estimate_f0, padded_segment};
use super::{VocoderConfig, VocoderError, VocoderParams};
use crate::audio::Waveform;

/// Full analysis: F0, then envelope and aperiodicity on the same frames.
pub fn analyze(w: &Waveform, cfg: &VocoderConfig) -> Result<VocoderParams, VocoderError> {
    let f0 = estimate_f0(w, cfg)?;
    let x: Vec<f64> = w.samples.iter().map(|&s| s as f64).collect();
    let fs = w.sample_rate_hz;
    let fft_size = cfg.fft_size(fs);
    let hop = cfg.hop_samples(fs);

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(fft_size);

    let mut spectral_envelope = Vec::with_capacity(f0.len());
    let mut aperiodicity = Vec::with_capacity(f0.len());
    let n_bands = cfg.aperiodicity_band_edges_hz.len() + 1;
    for i in 0..f0.len() {
        let centre = i as f64 * hop;
        let frame_f0 = if f0.is_voiced(i) {
            f0.f0_hz[i]
        } else {
            cfg.unvoiced_window_f0_hz
        };
        let env = envelope_frame(&x, centre, frame_f0, fs, fft_size, &*fwd);
        aperiodicity.push(if f0.is_voiced(i) {
            band_aperiodicity(&x, centre, f0.f0_hz[i], fs, &cfg.aperiodicity_band_edges_hz, &env, &mut planner)
        } else {
            vec![1.0; n_bands]
        });
        spectral_envelope.push(env);
    }

    Ok(VocoderParams {
        f0,
        spectral_envelope,
        aperiodicity,
        band_edges_hz: cfg.aperiodicity_band_edges_hz.clone(),
        sample_rate_hz: fs,
        fft_size,
    })
}

/// Pitch-adaptive power spectrum: a Hann window three periods long, then a
/// rectangular smoother one F0 wide in frequency. Averaging over exactly one
/// harmonic spacing flattens the harmonic ripple, leaving the envelope.
///
/// The result is scaled as a power spectral density, so a white signal of
/// variance `s2` yields a flat envelope at `s2`.
pub(crate) fn envelope_frame(
    x: &[f64],
    centre: f64,
    f0_hz: f64,
    sample_rate_hz: u32,
    fft_size: usize,
    fwd: &dyn Fft<f64>,
) -> Vec<f64> {
    let fs = sample_rate_hz as f64;
    let win_len = ((3.0 * fs / f0_hz).round() as usize).clamp(3, fft_size) | 1;
    let win_len = win_len.min(fft_size - 1);
    let half = (win_len / 2) as isize;
    let seg = padded_segment(x, centre.round() as isize - half, win_len);
    let window: Vec<f64> = (0..win_len)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * (k + 1) as f64 / (win_len + 1) as f64).cos())
        .collect();
    let wsum: f64 = window.iter().sum();
    let wsq: f64 = window.iter().map(|v| v * v).sum();
    // remove the weighted mean so DC leakage does not masquerade as low-frequency energy
    let mean = seg.iter().zip(&window).map(|(s, w)| s * w).sum::<f64>() / wsum;

    let mut buf = vec![Complex64::default(); fft_size];
    for k in 0..win_len {
        buf[k] = Complex64::new((seg[k] - mean) * window[k], 0.0);
    }
    fwd.process(&mut buf);
    let bins = fft_size / 2 + 1;
    let power: Vec<f64> = buf[..bins].iter().map(|c| c.norm_sqr() / wsq).collect();

    let width_bins = f0_hz * fft_size as f64 / fs;
    smooth_boxcar(&power, width_bins)
}

/// Moving average of width `width` bins (fractional widths allowed) over a
/// spectrum mirrored at DC and Nyquist.
fn smooth_boxcar(power: &[f64], width: f64) -> Vec<f64> {
    let bins = power.len();
    if width <= 1.0 {
        return power.to_vec();
    }
    let pad = (width.ceil() as usize) + 2;
    // extended[j] corresponds to bin j - pad
    let ext_len = bins + 2 * pad;
    let at = |j: isize| -> f64 {
        let mut k = j;
        let last = (bins - 1) as isize;
        // reflect about 0 and about the Nyquist bin
        loop {
            if k < 0 {
                k = -k;
            } else if k > last {
                k = 2 * last - k;
            } else {
                break;
            }
        }
        power[k as usize]
    };
    let mut cum = vec![0.0; ext_len + 1];
    for j in 0..ext_len {
        cum[j + 1] = cum[j] + at(j as isize - pad as isize);
    }
    // integral of the piecewise-constant spectrum up to position u (bin units,
    // bin j occupies [j - 0.5, j + 0.5))
    let integral = |u: f64| -> f64 {
        let pos = u + pad as f64 + 0.5;
        let idx = pos.floor().clamp(0.0, ext_len as f64 - 1.0) as usize;
        let frac = pos - idx as f64;
        cum[idx] + frac * (cum[idx + 1] - cum[idx])
    };
    (0..bins)
        .map(|k| {
            let k = k as f64;
            ((integral(k + width / 2.0) - integral(k - width / 2.0)) / width).max(0.0)
        })
        .collect()
}

/// Weight of frequency `f` in band `b`. Neighbouring bands cross over with a
/// raised cosine of half-width `half_width` around each edge, so the weights
/// sum to one and a harmonic sitting on an edge is split smoothly.
fn band_weight(edges: &[f64], b: usize, f: f64, half_width: f64) -> f64 {
    let above = |e: f64| {
        if f <= e - half_width {
            0.0
        } else if f >= e + half_width {
            1.0
        } else {
            0.5 - 0.5 * (PI * (f - e + half_width) / (2.0 * half_width)).cos()
        }
    };
    let lower = if b == 0 { 1.0 } else { above(edges[b - 1]) };
    let upper = if b == edges.len() { 0.0 } else { above(edges[b]) };
    lower - upper
}

/// Per-band aperiodicity.
///
/// `r` is the normalized autocorrelation at one period of the Hann-windowed
/// frame restricted to the band (computed from the band's power spectrum),
/// divided by the window's own autocorrelation at that lag. The noise power
/// `(1 - r) P` is then expressed as a share of the envelope's power in the
/// band, because the envelope smears harmonic energy across band edges and
/// that smeared energy is periodic.
/// Aperiodicity window length in periods.
const AP_PERIODS: f64 = 6.0;

fn band_aperiodicity(
    x: &[f64],
    centre: f64,
    f0_hz: f64,
    sample_rate_hz: u32,
    band_edges: &[f64],
    envelope: &[f64],
    planner: &mut FftPlanner<f64>,
) -> Vec<f64> {
    let fs = sample_rate_hz as f64;
    let period = fs / f0_hz;
    let win_len = (AP_PERIODS * period).round() as usize | 1;
    let half = (win_len / 2) as isize;
    let seg = padded_segment(x, centre.round() as isize - half, win_len);
    let window: Vec<f64> = (0..win_len)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * (k + 1) as f64 / (win_len + 1) as f64).cos())
        .collect();
    let wsum: f64 = window.iter().sum();
    let wsq: f64 = window.iter().map(|v| v * v).sum();
    let mean = seg.iter().zip(&window).map(|(s, w)| s * w).sum::<f64>() / wsum;

    let n = (2 * win_len).next_power_of_two();
    let fwd = planner.plan_fft_forward(n);
    let spectrum = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(if k < win_len { f(k) } else { 0.0 }, 0.0))
            .collect();
        fwd.process(&mut buf);
        buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect()
    };
    let power = spectrum(&|k| (seg[k] - mean) * window[k]);
    let wpower = spectrum(&|k| window[k]);

    // one-sided sums: interior bins stand for their mirror image too
    let weight = |k: usize| if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
    let lag_cos = |k: usize| (2.0 * PI * k as f64 * period / n as f64).cos();
    let window_r = {
        let num: f64 = (0..=n / 2).map(|k| weight(k) * wpower[k] * lag_cos(k)).sum();
        let den: f64 = (0..=n / 2).map(|k| weight(k) * wpower[k]).sum();
        num / den
    };

    let nyquist = fs / 2.0;
    let env_bin_hz = nyquist / (envelope.len() - 1) as f64;
    let bin_hz = fs / n as f64;
    let edges: Vec<f64> = band_edges.iter().map(|e| e.min(nyquist)).collect();
    let mut out = Vec::with_capacity(edges.len() + 1);
    for b in 0..=edges.len() {
        let weight_at = |f: f64| band_weight(&edges, b, f, 0.5 * f0_hz);
        let (mut p, mut pc, mut wsum_band) = (0.0, 0.0, 0.0);
        for k in 0..=n / 2 {
            let g = weight_at(k as f64 * bin_hz);
            p += g * weight(k) * power[k];
            pc += g * weight(k) * power[k] * lag_cos(k);
            wsum_band += g * weight(k);
        }
        let (mut env, mut env_wsum) = (0.0, 0.0);
        for (k, &e) in envelope.iter().enumerate() {
            let g = weight_at(k as f64 * env_bin_hz);
            env += g * e;
            env_wsum += g;
        }
        let ap = if wsum_band <= 0.0 || env_wsum <= 0.0 || env <= 0.0 || p <= 0.0 {
            1.0
        } else {
            let r = (pc / p / window_r).clamp(0.0, 1.0);
            // mean power density of the frame in the band, on the envelope's scale
            let density = p / (wsum_band * wsq);
            // capped at one: near onsets the longer window sees energy the
            // envelope window does not, which says nothing about noise
            let share = (density / (env / env_wsum)).min(1.0);
            ((1.0 - r) * share).clamp(0.0, 1.0)
        };
        out.push(ap);
    }
    out
}
