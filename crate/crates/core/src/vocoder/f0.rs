//! YIN-style F0 estimation. The dip is located on the cumulative-mean
//! normalized difference and refined on a band-limited interpolation of the
//! raw difference, since parabolic fits are pulled toward integer lags on the
//! sharp dips of harmonic-rich signals.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{F0Contour, VocoderConfig, VocoderError};
use crate::audio::Waveform;

pub(crate) struct YinGeometry {
    /// Integration window in samples (three periods of the F0 floor).
    pub window: usize,
    pub tau_min: usize,
    pub tau_max: usize,
}

impl YinGeometry {
    pub fn new(cfg: &VocoderConfig, sample_rate_hz: u32) -> Self {
        let fs = sample_rate_hz as f64;
        Self {
            window: (3.0 * fs / cfg.f0_floor_hz).round() as usize,
            tau_min: ((fs / cfg.f0_ceil_hz).floor() as usize).max(2),
            tau_max: (fs / cfg.f0_floor_hz).ceil() as usize,
        }
    }

    fn span(&self) -> usize {
        self.window + self.tau_max + 1
    }
}

/// Copies `len` samples starting at `start` (possibly negative), zero-padding
/// outside the signal.
pub(crate) fn padded_segment(x: &[f64], start: isize, len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let i = start + k as isize;
            if i >= 0 && (i as usize) < x.len() {
                x[i as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Estimates F0 on the hop grid. Frames whose normalized difference never dips
/// below the voicing threshold, or whose level is below `silence_rms`, are unvoiced.
pub fn estimate_f0(w: &Waveform, cfg: &VocoderConfig) -> Result<F0Contour, VocoderError> {
    cfg.validate()?;
    let geo = YinGeometry::new(cfg, w.sample_rate_hz);
    if w.samples.len() < 2 * geo.window {
        return Err(VocoderError::TooShort {
            samples: w.samples.len(),
            needed: 2 * geo.window,
        });
    }
    let x: Vec<f64> = w.samples.iter().map(|&s| s as f64).collect();
    let n_frames = cfg.frame_count(x.len(), w.sample_rate_hz);
    let hop = cfg.hop_samples(w.sample_rate_hz);
    let fs = w.sample_rate_hz as f64;

    let n_fft = geo.span().next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);
    let mut scratch = vec![Complex64::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];

    let mut f0 = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let centre = (i as f64 * hop).round() as isize;
        let seg = padded_segment(&x, centre - (geo.span() / 2) as isize, geo.span());
        let d = difference_function(&seg, &geo, n_fft, &*fwd, &*inv, &mut scratch);
        let power = seg[..geo.window].iter().map(|v| v * v).sum::<f64>() / geo.window as f64;
        let hz = if power.sqrt() < cfg.silence_rms {
            0.0
        } else {
            pick_period(&d, &geo, cfg.voicing_threshold)
                .map(|tau| fs / tau)
                .filter(|hz| (cfg.f0_floor_hz..=cfg.f0_ceil_hz).contains(hz))
                .unwrap_or(0.0)
        };
        f0.push(hz);
    }
    Ok(F0Contour {
        f0_hz: f0,
        hop_s: cfg.hop_s,
    })
}

/// `d(tau) = sum_{j<W} (x[j] - x[j+tau])^2` for `tau` in `0..=tau_max`,
/// via energy prefix sums and an FFT cross-correlation.
fn difference_function(
    seg: &[f64],
    geo: &YinGeometry,
    n_fft: usize,
    fwd: &dyn rustfft::Fft<f64>,
    inv: &dyn rustfft::Fft<f64>,
    scratch: &mut [Complex64],
) -> Vec<f64> {
    let w = geo.window;
    let mut a: Vec<Complex64> = (0..n_fft)
        .map(|k| Complex64::new(if k < w { seg[k] } else { 0.0 }, 0.0))
        .collect();
    let mut b: Vec<Complex64> = (0..n_fft)
        .map(|k| Complex64::new(seg.get(k).copied().unwrap_or(0.0), 0.0))
        .collect();
    fwd.process_with_scratch(&mut a, scratch);
    fwd.process_with_scratch(&mut b, scratch);
    for (ak, bk) in a.iter_mut().zip(&b) {
        *ak = ak.conj() * bk;
    }
    inv.process_with_scratch(&mut a, scratch);
    let scale = 1.0 / n_fft as f64;

    let mut prefix = vec![0.0; seg.len() + 1];
    for (k, v) in seg.iter().enumerate() {
        prefix[k + 1] = prefix[k] + v * v;
    }
    let e0 = prefix[w];
    (0..=geo.tau_max)
        .map(|tau| {
            let et = prefix[tau + w] - prefix[tau];
            (e0 + et - 2.0 * a[tau].re * scale).max(0.0)
        })
        .collect()
}

/// Cumulative-mean-normalized dip search; returns a fractional period in samples.
fn pick_period(d: &[f64], geo: &YinGeometry, threshold: f64) -> Option<f64> {
    let mut cmnd = vec![1.0; d.len()];
    let mut running = 0.0;
    for tau in 1..d.len() {
        running += d[tau];
        cmnd[tau] = if running > 0.0 {
            d[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
    let mut tau = geo.tau_min;
    while tau <= geo.tau_max {
        if cmnd[tau] < threshold {
            while tau < geo.tau_max && cmnd[tau + 1] < cmnd[tau] {
                tau += 1;
            }
            break;
        }
        tau += 1;
    }
    if tau > geo.tau_max || cmnd[tau] >= threshold {
        return None;
    }
    if tau <= geo.tau_min || tau >= geo.tau_max {
        return Some(tau as f64);
    }
    Some(refine(d, tau))
}

const LANCZOS_A: isize = 16;

fn lanczos(x: f64) -> f64 {
    let a = LANCZOS_A as f64;
    if x.abs() < 1e-12 {
        1.0
    } else if x.abs() >= a {
        0.0
    } else {
        let px = std::f64::consts::PI * x;
        a * px.sin() * (px / a).sin() / (px * px)
    }
}

fn interp(d: &[f64], t: f64) -> f64 {
    let base = t.floor() as isize;
    (base - LANCZOS_A + 1..=base + LANCZOS_A)
        .filter(|&k| k >= 0 && (k as usize) < d.len())
        .map(|k| d[k as usize] * lanczos(t - k as f64))
        .sum()
}

/// Golden-section minimum of the interpolated difference within one sample
/// of `tau`.
fn refine(d: &[f64], tau: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (tau as f64 - 1.0, tau as f64 + 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (interp(d, x1), interp(d, x2));
    while b - a > 1e-4 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = interp(d, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = interp(d, x2);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tone(freq: f64, secs: f64) -> Waveform {
        let n = (16000.0 * secs) as usize;
        Waveform::new(
            (0..n)
                .map(|i| (0.5 * (2.0 * PI * freq * i as f64 / 16000.0).sin()) as f32)
                .collect(),
            16000,
        )
    }

    #[test]
    fn pure_tone_interior_frames_voiced_at_220() {
        let c = estimate_f0(&tone(220.0, 1.0), &VocoderConfig::default()).unwrap();
        assert_eq!(c.len(), 100);
        for i in 5..95 {
            assert!(c.is_voiced(i), "frame {i} unvoiced");
            assert!((c.f0_hz[i] - 220.0).abs() <= 2.0, "frame {i}: {}", c.f0_hz[i]);
        }
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = Waveform::new(
            (0..16000).map(|_| rng.gen_range(-0.5f32..0.5)).collect(),
            16000,
        );
        let c = estimate_f0(&w, &VocoderConfig::default()).unwrap();
        let unvoiced = c.len() - c.voiced_count();
        assert!(unvoiced as f64 >= 0.9 * c.len() as f64, "{unvoiced}/{}", c.len());
    }

    #[test]
    fn silence_all_unvoiced() {
        let c = estimate_f0(&Waveform::new(vec![0.0; 16000], 16000), &VocoderConfig::default())
            .unwrap();
        assert!(c.f0_hz.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn too_short_input() {
        let err = estimate_f0(&tone(220.0, 0.05), &VocoderConfig::default()).unwrap_err();
        assert!(matches!(err, VocoderError::TooShort { .. }));
    }

    #[test]
    fn range_of_tones() {
        for &f in &[80.0, 150.0, 330.0, 600.0, 1000.0] {
            let c = estimate_f0(&tone(f, 0.5), &VocoderConfig::default()).unwrap();
            for i in 10..40 {
                let cents = 1200.0 * (c.f0_hz[i] / f).log2();
                assert!(cents.abs() < 5.0, "{f} Hz frame {i}: {}", c.f0_hz[i]);
            }
        }
    }
}
