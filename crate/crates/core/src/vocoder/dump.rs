//! Binary container for [`VocoderParams`], used for debugging and fixtures.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic          4 bytes  "SSVP"
//! version        u32      currently 1
//! sample_rate    u32      Hz
//! fft_size       u32
//! hop_s          f64
//! frame_count    u32
//! band_count     u32      number of aperiodicity bands (edges + 1)
//! band_edges     f64 x (band_count - 1)
//! f0_hz          f64 x frame_count
//! envelope       f64 x frame_count x (fft_size / 2 + 1), frame-major
//! aperiodicity   f64 x frame_count x band_count, frame-major
//! ```

use std::io::{Read, Write};

use super::{F0Contour, VocoderError, VocoderParams};

pub const DUMP_MAGIC: [u8; 4] = *b"SSVP";
pub const DUMP_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> VocoderError {
    VocoderError::Dump(e.to_string())
}

pub fn write_params<W: Write>(p: &VocoderParams, mut out: W) -> Result<(), VocoderError> {
    p.validate()?;
    let u32_of = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| VocoderError::Dump(format!("{what} {v} does not fit in u32")))
    };
    let mut buf = Vec::new();
    buf.extend_from_slice(&DUMP_MAGIC);
    buf.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    buf.extend_from_slice(&p.sample_rate_hz.to_le_bytes());
    buf.extend_from_slice(&u32_of(p.fft_size, "fft size")?.to_le_bytes());
    buf.extend_from_slice(&p.f0.hop_s.to_le_bytes());
    buf.extend_from_slice(&u32_of(p.frame_count(), "frame count")?.to_le_bytes());
    buf.extend_from_slice(&u32_of(p.band_edges_hz.len() + 1, "band count")?.to_le_bytes());
    let floats = p
        .band_edges_hz
        .iter()
        .chain(&p.f0.f0_hz)
        .chain(p.spectral_envelope.iter().flatten())
        .chain(p.aperiodicity.iter().flatten());
    for v in floats {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf).map_err(io_err)
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N], VocoderError> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| VocoderError::Dump(format!("reading {what}: {e}")))?;
        Ok(b)
    }

    fn u32(&mut self, what: &str) -> Result<u32, VocoderError> {
        self.bytes::<4>(what).map(u32::from_le_bytes)
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, VocoderError> {
        (0..n).map(|_| self.bytes::<8>(what).map(f64::from_le_bytes)).collect()
    }
}

pub fn read_params<R: Read>(input: R) -> Result<VocoderParams, VocoderError> {
    let mut r = Reader { inner: input };
    if r.bytes::<4>("magic")? != DUMP_MAGIC {
        return Err(VocoderError::Dump("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != DUMP_VERSION {
        return Err(VocoderError::Dump(format!("unsupported version {version}")));
    }
    let sample_rate_hz = r.u32("sample rate")?;
    let fft_size = r.u32("fft size")? as usize;
    let hop_s = f64::from_le_bytes(r.bytes::<8>("hop")?);
    let frames = r.u32("frame count")? as usize;
    let bands = r.u32("band count")? as usize;
    if bands == 0 || fft_size < 2 {
        return Err(VocoderError::Dump("zero bands or fft size below 2".into()));
    }
    let band_edges_hz = r.f64s(bands - 1, "band edges")?;
    let f0_hz = r.f64s(frames, "f0")?;
    let bins = fft_size / 2 + 1;
    let spectral_envelope = (0..frames)
        .map(|_| r.f64s(bins, "envelope"))
        .collect::<Result<Vec<_>, _>>()?;
    let aperiodicity = (0..frames)
        .map(|_| r.f64s(bands, "aperiodicity"))
        .collect::<Result<Vec<_>, _>>()?;
    let p = VocoderParams {
        f0: F0Contour { f0_hz, hop_s },
        spectral_envelope,
        aperiodicity,
        band_edges_hz,
        sample_rate_hz,
        fft_size,
    };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VocoderParams {
        VocoderParams {
            f0: F0Contour {
                f0_hz: vec![0.0, 110.5, 220.25],
                hop_s: 0.01,
            },
            spectral_envelope: (0..3).map(|i| (0..5).map(|k| (i * 5 + k) as f64 * 0.1).collect()).collect(),
            aperiodicity: vec![vec![1.0, 1.0], vec![0.1, 0.6], vec![0.0, 0.3]],
            band_edges_hz: vec![1000.0],
            sample_rate_hz: 16000,
            fft_size: 8,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let p = params();
        let mut bytes = Vec::new();
        write_params(&p, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 4 + 4 + 8 + 4 + 4 + 8 * (1 + 3 + 15 + 6));
        assert_eq!(read_params(&bytes[..]).unwrap(), p);
    }

    #[test]
    fn header_fields_are_little_endian() {
        let mut bytes = Vec::new();
        write_params(&params(), &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"SSVP");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &16000u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &[3, 0, 0, 0]);
    }

    #[test]
    fn truncated_and_corrupt_inputs_fail() {
        let mut bytes = Vec::new();
        write_params(&params(), &mut bytes).unwrap();
        assert!(matches!(read_params(&bytes[..bytes.len() - 3]), Err(VocoderError::Dump(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_params(&bad[..]), Err(VocoderError::Dump(_))));
        let mut neg = bytes;
        let at = neg.len() - 8;
        neg[at..].copy_from_slice(&(-0.5f64).to_le_bytes());
        assert!(matches!(read_params(&neg[..]), Err(VocoderError::InvalidParams(_))));
    }
}
