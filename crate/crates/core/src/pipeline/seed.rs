use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RandomRanges;

/// Per-utterance seed: the first eight bytes (little-endian) of
/// `SHA-256(global seed LE || id UTF-8 || copy LE)`. Independent of the order
/// in which workers pick up utterances.
pub fn utterance_seed(global: u64, id: &str, copy: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(id.as_bytes());
    h.update(copy.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn utterance_rng(global: u64, id: &str, copy: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(utterance_seed(global, id, copy))
}

/// The random baseline's per-utterance edit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomDraw {
    pub pitch_offset_semitones: f64,
    pub duration_ratio: f64,
}

/// One uniform pitch offset and one uniform vowel duration ratio, both drawn
/// from closed ranges.
pub fn draw_random<R: Rng + ?Sized>(rng: &mut R, ranges: &RandomRanges) -> RandomDraw {
    let [plo, phi] = ranges.pitch_semitones;
    let [dlo, dhi] = ranges.duration_ratio;
    RandomDraw {
        pitch_offset_semitones: rng.gen_range(plo..=phi),
        duration_ratio: rng.gen_range(dlo..=dhi),
    }
}
