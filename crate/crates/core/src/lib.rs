//! Score-guided speech augmentation: syllable-level pitch and duration edits
//! of natural speech, driven by notes taken from MIDI melodies.

pub mod adjust;
pub mod alignment;
pub mod audio;
pub mod midi;
pub mod pipeline;
pub mod stats;
pub mod synthetic;
pub mod vocoder;
