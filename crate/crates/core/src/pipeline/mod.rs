//! Batch front end: manifests, configuration, seeding and the augment,
//! random-baseline and stats runs.

mod augment;
mod config;
mod manifest;
mod run;
mod seed;

use std::path::PathBuf;

use thiserror::Error;

pub use augment::{augment_random, augment_with_notes, Augmented, SourceUtterance};
pub use config::{AugmentConfig, Mode, RandomRanges, Thresholds};
pub use manifest::{Manifest, ManifestEntry};
pub use run::{
    load_melody, load_source, run_augment, run_random_baseline, run_stats, Failure, MidiPool,
    NoteMeta, PairMeta, PoolFile, Summary, UtteranceMeta,
};
pub use seed::{draw_random, utterance_rng, utterance_seed, RandomDraw};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error("{id}: missing file {path}")]
    MissingFile { id: String, path: PathBuf },
    #[error("no usable MIDI files in {0}")]
    EmptyPool(PathBuf),
    #[error("note selection: {0}")]
    Selection(String),
    #[error("no voiced frames to compare against the notes")]
    NoVoicedFrames,
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error(transparent)]
    Alignment(#[from] crate::alignment::AlignmentError),
    #[error(transparent)]
    Midi(#[from] crate::midi::MidiError),
    #[error(transparent)]
    Vocoder(#[from] crate::vocoder::VocoderError),
    #[error(transparent)]
    Plan(#[from] crate::adjust::PlanError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// True for problems that stop a run before any utterance is processed.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::Manifest { .. }
                | PipelineError::EmptyManifest
                | PipelineError::MissingFile { .. }
                | PipelineError::EmptyPool(_)
        )
    }
}
