//! Mono PCM audio: WAV reading/writing and band-limited resampling.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Sample rate used for all analysis and synthesis.
pub const CANONICAL_RATE_HZ: u32 = 16_000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{path}: malformed WAV: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: {channels} channels; only mono input is supported")]
    UnsupportedChannels { path: PathBuf, channels: u16 },
    #[error("{path}: unsupported sample format ({bits}-bit {kind})")]
    UnsupportedSampleFormat {
        path: PathBuf,
        bits: u16,
        kind: &'static str,
    },
    #[error("{path}: write failed: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("invalid waveform: {0}")]
    Invalid(String),
    #[error("target rate {0} Hz outside [8000, 48000]")]
    BadTargetRate(u32),
}

/// A mono waveform with samples nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    /// Checks the invariants required before analysis: non-empty, finite, positive rate.
    pub fn validate(&self) -> Result<(), AudioError> {
        if self.sample_rate_hz == 0 {
            return Err(AudioError::Invalid("sample rate must be positive".into()));
        }
        if self.samples.is_empty() {
            return Err(AudioError::Invalid("empty sample buffer".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::Invalid(format!("non-finite sample at index {i}")));
        }
        Ok(())
    }

    /// Clamps every sample into [-1, 1] and returns how many were out of range.
    /// Non-finite samples are replaced by zero and counted.
    pub fn clip_in_place(&mut self) -> usize {
        let mut clipped = 0;
        for s in &mut self.samples {
            if !s.is_finite() {
                *s = 0.0;
                clipped += 1;
            } else if s.abs() > 1.0 {
                *s = s.clamp(-1.0, 1.0);
                clipped += 1;
            }
        }
        clipped
    }
}

/// Reads a mono 16-bit PCM or 32-bit float WAV file at its native rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform, AudioError> {
    let path = path.as_ref();
    let format_err = |source| AudioError::Format {
        path: path.to_path_buf(),
        source,
    };
    let reader = hound::WavReader::open(path).map_err(format_err)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::UnsupportedChannels {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<Result<Vec<_>, _>>()
            .map_err(format_err)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(format_err)?,
        (format, bits) => {
            return Err(AudioError::UnsupportedSampleFormat {
                path: path.to_path_buf(),
                bits,
                kind: match format {
                    hound::SampleFormat::Int => "int",
                    hound::SampleFormat::Float => "float",
                },
            })
        }
    };
    Ok(Waveform::new(samples, spec.sample_rate))
}

/// Outcome of [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteReport {
    pub clipped_samples: usize,
}

/// Writes a 16-bit PCM mono WAV. Out-of-range samples are clipped and counted.
pub fn write_wav(w: &Waveform, path: impl AsRef<Path>) -> Result<WriteReport, AudioError> {
    let path = path.as_ref();
    if w.samples.is_empty() {
        return Err(AudioError::Invalid("empty sample buffer".into()));
    }
    if w.sample_rate_hz == 0 {
        return Err(AudioError::Invalid("sample rate must be positive".into()));
    }
    let write_err = |source| AudioError::Write {
        path: path.to_path_buf(),
        source,
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(write_err)?;
    let mut clipped = 0;
    for &s in &w.samples {
        let v = if !s.is_finite() {
            clipped += 1;
            0.0
        } else if s.abs() > 1.0 {
            clipped += 1;
            s.clamp(-1.0, 1.0)
        } else {
            s
        };
        let q = (v as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(write_err)?;
    }
    writer.finalize().map_err(write_err)?;
    Ok(WriteReport {
        clipped_samples: clipped,
    })
}

// Zero crossings of the interpolation kernel on each side, at the narrower rate.
const SINC_HALF_ZEROS: f64 = 24.0;
const CUTOFF_FRACTION: f64 = 0.95;

/// Band-limited resampling with a Blackman-windowed sinc kernel.
///
/// The output holds `round(len * target / source)` samples, so duration is
/// preserved within one output sample.
pub fn resample(w: &Waveform, target_rate_hz: u32) -> Result<Waveform, AudioError> {
    if !(8000..=48000).contains(&target_rate_hz) {
        return Err(AudioError::BadTargetRate(target_rate_hz));
    }
    if w.sample_rate_hz == target_rate_hz {
        return Ok(w.clone());
    }
    if w.sample_rate_hz == 0 {
        return Err(AudioError::Invalid("sample rate must be positive".into()));
    }
    let src_rate = w.sample_rate_hz as f64;
    let dst_rate = target_rate_hz as f64;
    let step = src_rate / dst_rate;
    let out_len = (w.samples.len() as f64 * dst_rate / src_rate).round() as usize;

    // cutoff relative to the source Nyquist
    let cutoff = CUTOFF_FRACTION * (dst_rate / src_rate).min(1.0);
    let half_width = SINC_HALF_ZEROS / cutoff;
    let n = w.samples.len() as isize;

    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        let t = m as f64 * step;
        let lo = (t - half_width).ceil() as isize;
        let hi = (t + half_width).floor() as isize;
        let mut acc = 0.0;
        for k in lo.max(0)..=hi.min(n - 1) {
            let x = t - k as f64;
            acc += w.samples[k as usize] as f64 * kernel(x, cutoff, half_width);
        }
        out.push(acc as f32);
    }
    Ok(Waveform::new(out, target_rate_hz))
}

fn kernel(x: f64, cutoff: f64, half_width: f64) -> f64 {
    if x.abs() >= half_width {
        return 0.0;
    }
    let arg = PI * cutoff * x;
    let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
    // Blackman window over [-half_width, half_width]
    let u = 0.5 + x / (2.0 * half_width);
    let window = 0.42 - 0.5 * (2.0 * PI * u).cos() + 0.08 * (4.0 * PI * u).cos();
    cutoff * sinc * window
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, secs: f64, amp: f64) -> Waveform {
        let n = (rate as f64 * secs).round() as usize;
        let samples = (0..n)
            .map(|i| (amp * (2.0 * PI * freq * i as f64 / rate as f64).sin()) as f32)
            .collect();
        Waveform::new(samples, rate)
    }

    #[test]
    fn one_second_file_has_16000_samples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        write_wav(&sine(220.0, 16000, 1.0, 0.5), &path).unwrap();
        let w = read_wav(&path).unwrap();
        assert_eq!(w.len(), 16000);
        assert_eq!(w.sample_rate_hz, 16000);
        assert!((w.duration_s() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_second_at_22050_has_11025_samples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.wav");
        // independent writer: raw hound with 16-bit ints
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 22050,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut wr = hound::WavWriter::create(&path, spec).unwrap();
        for i in 0..11025 {
            wr.write_sample(((i % 100) as i16) * 10).unwrap();
        }
        wr.finalize().unwrap();
        let w = read_wav(&path).unwrap();
        assert_eq!(w.len(), 11025);
        assert_eq!(w.sample_rate_hz, 22050);
    }

    #[test]
    fn float_input_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut wr = hound::WavWriter::create(&path, spec).unwrap();
        for v in [0.25f32, -0.5, 0.75] {
            wr.write_sample(v).unwrap();
        }
        wr.finalize().unwrap();
        let w = read_wav(&path).unwrap();
        assert_eq!(w.samples, vec![0.25, -0.5, 0.75]);
    }

    #[test]
    fn stereo_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut wr = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            wr.write_sample(0i16).unwrap();
        }
        wr.finalize().unwrap();
        assert!(matches!(
            read_wav(&path),
            Err(AudioError::UnsupportedChannels { channels: 2, .. })
        ));
    }

    #[test]
    fn garbage_header_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.wav");
        std::fs::write(&path, b"RIFF\x10\x00\x00\x00WAVEjunkjunk").unwrap();
        assert!(matches!(read_wav(&path), Err(AudioError::Format { .. })));
    }

    #[test]
    fn round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        let w = sine(440.0, 16000, 0.25, 0.9);
        write_wav(&w, &path).unwrap();
        let r = read_wav(&path).unwrap();
        let max_err = w
            .samples
            .iter()
            .zip(&r.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err <= 1.0 / 32768.0, "max err {max_err}");
    }

    #[test]
    fn empty_buffer_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let w = Waveform::new(vec![], 16000);
        assert!(matches!(
            write_wav(&w, dir.path().join("e.wav")),
            Err(AudioError::Invalid(_))
        ));
    }

    #[test]
    fn overdriven_sample_is_clipped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.wav");
        let w = Waveform::new(vec![0.0, 1.5, -0.25], 16000);
        let report = write_wav(&w, &path).unwrap();
        assert_eq!(report.clipped_samples, 1);
        let r = read_wav(&path).unwrap();
        assert!((r.samples[1] - 1.0).abs() <= 1.0 / 32768.0);

        let mut w2 = w.clone();
        assert_eq!(w2.clip_in_place(), 1);
        assert_eq!(w2.samples[1], 1.0);
    }

    #[test]
    fn write_to_missing_dir_reports_path() {
        let err = write_wav(
            &Waveform::new(vec![0.0], 16000),
            "/nonexistent-dir/x/y.wav",
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x/y.wav"));
    }

    #[test]
    fn resample_identity() {
        let w = sine(300.0, 16000, 0.1, 0.5);
        assert_eq!(resample(&w, 16000).unwrap(), w);
    }

    #[test]
    fn resample_preserves_duration() {
        let w = sine(300.0, 22050, 1.0, 0.5);
        let r = resample(&w, 16000).unwrap();
        assert!((r.len() as i64 - 16000).abs() <= 1);
        assert_eq!(r.sample_rate_hz, 16000);
    }

    #[test]
    fn resample_rejects_out_of_range_target() {
        let w = sine(300.0, 16000, 0.1, 0.5);
        assert!(resample(&w, 4000).is_err());
        assert!(resample(&w, 96000).is_err());
    }

    // FFT peak-pick oracle: plain O(n^2) DFT magnitude over 1 Hz bins.
    fn peak_frequency(w: &Waveform, lo: f64, hi: f64) -> f64 {
        let n = w.len();
        let rate = w.sample_rate_hz as f64;
        let mut best = (0.0, 0.0);
        let mut f = lo;
        while f <= hi {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &s) in w.samples.iter().enumerate() {
                let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
                let ph = 2.0 * PI * f * i as f64 / rate;
                re += s as f64 * hann * ph.cos();
                im -= s as f64 * hann * ph.sin();
            }
            let mag = re * re + im * im;
            if mag > best.1 {
                best = (f, mag);
            }
            f += 0.25;
        }
        best.0
    }

    #[test]
    fn resample_48k_sine_keeps_peak() {
        let w = sine(440.0, 48000, 1.0, 0.5);
        let r = resample(&w, 16000).unwrap();
        let peak = peak_frequency(&r, 400.0, 480.0);
        assert!((peak - 440.0).abs() <= 1.0, "peak {peak}");
    }
}
