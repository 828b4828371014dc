//! Score-driven edits of vocoder parameters: F0 replacement and vowel-only
//! retiming. Both work on the analysis frame grid.

mod duration;
mod pitch;

use std::ops::Range;

use thiserror::Error;

pub use duration::{
    apply_duration, compute_duration_plan, uniform_vowel_plan, ClampRecord, DurationConfig,
    DurationEntry, DurationPlan, RestGap, Retimed,
};
pub use pitch::{
    apply_pitch, build_pitch_plan, compute_global_shift, transpose_plan, PitchPlan, PitchSegment,
};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("frame grid mismatch: expected {expected} frames, got {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

/// Frames whose centre `i * hop` falls in `[start_s, end_s)`, clipped to `n`.
pub fn frame_span(start_s: f64, end_s: f64, hop_s: f64, n: usize) -> Range<usize> {
    let first = ((start_s / hop_s) - 1e-9).ceil().max(0.0) as usize;
    let last = ((end_s / hop_s) - 1e-9).ceil().max(0.0) as usize;
    first.min(n)..last.min(n)
}
