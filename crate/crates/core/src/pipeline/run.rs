use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::augment::{augment_random, augment_with_notes, Augmented, SourceUtterance};
use super::config::{AugmentConfig, Mode};
use super::manifest::{Manifest, ManifestEntry};
use super::seed::{draw_random, utterance_rng, utterance_seed, RandomDraw};
use super::PipelineError;
use crate::adjust::{ClampRecord, RestGap};
use crate::alignment::{parse_alignment, syllabify, write_textgrid, PairKind, PhoneTable};
use crate::audio::{read_wav, resample, write_wav, CANONICAL_RATE_HZ};
use crate::midi::{extract_melody, parse_midi, sample_note_window, MidiError, NoteSequence};
use crate::stats::{corpus_report, render_table, StatsReport, UtteranceStats};
use crate::vocoder::estimate_f0;

/// A melody from one pool file.
#[derive(Debug, Clone)]
pub struct PoolFile {
    /// File name without directories; recorded in the metadata.
    pub name: String,
    pub melody: NoteSequence,
}

#[derive(Debug, Clone, Default)]
pub struct MidiPool {
    pub files: Vec<PoolFile>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn load_melody(path: &Path) -> Result<PoolFile, PipelineError> {
    let name = file_name(path);
    let parsed = parse_midi(&read_bytes(path)?)?;
    let melody = extract_melody(&parsed.tracks, &parsed.tempo, &name)?;
    Ok(PoolFile { name, melody })
}

impl MidiPool {
    /// Parses every `.mid`/`.midi` file in `dir`, in file-name order. Files
    /// that fail to parse or hold no melody are skipped with a warning.
    pub fn load_dir(dir: &Path) -> Result<Self, PipelineError> {
        let listing = fs::read_dir(dir).map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = listing
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
            })
            .collect();
        paths.sort();
        let mut files = Vec::new();
        for p in paths {
            match load_melody(&p) {
                Ok(f) => files.push(f),
                Err(e) => log::warn!("skipping {}: {e}", p.display()),
            }
        }
        if files.is_empty() {
            return Err(PipelineError::EmptyPool(dir.to_path_buf()));
        }
        log::info!("midi pool: {} usable files from {}", files.len(), dir.display());
        Ok(Self { files })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteMeta {
    pub pitch: u8,
    pub onset_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub syllables: Vec<usize>,
    pub notes: Vec<usize>,
    pub kind: PairKind,
    pub forced: bool,
}

/// Contents of `<id>.meta.json`. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceMeta {
    pub id: String,
    pub source_id: String,
    pub copy: u32,
    pub mode: Mode,
    pub seed: u64,
    pub midi: Option<String>,
    pub note_window_start: Option<usize>,
    pub notes: Vec<NoteMeta>,
    pub speech_mean_semitone: Option<f64>,
    pub note_mean_semitone: Option<f64>,
    pub global_shift_semitones: i32,
    pub pairs: Vec<PairMeta>,
    pub clamps: Vec<ClampRecord>,
    pub rest_gaps: Vec<RestGap>,
    pub random: Option<RandomDraw>,
    pub input_duration_s: f64,
    pub output_duration_s: f64,
    pub clipped_samples: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub ok: usize,
    pub failed: usize,
    pub failures: Vec<Failure>,
}

impl Summary {
    /// 0 when everything succeeded, 1 when some utterances failed.
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            0
        } else {
            1
        }
    }
}

/// Reads, canonicalizes and pairs an utterance with its tier.
pub fn load_source(entry: &ManifestEntry, table: &PhoneTable) -> Result<SourceUtterance, PipelineError> {
    let mut waveform = read_wav(&entry.wav)?;
    if waveform.sample_rate_hz != CANONICAL_RATE_HZ {
        waveform = resample(&waveform, CANONICAL_RATE_HZ)?;
    }
    waveform.validate()?;
    let tier = parse_alignment(&entry.alignment, table)?;
    Ok(SourceUtterance {
        id: entry.id.clone(),
        waveform,
        tier,
    })
}

fn phone_table(cfg: &AugmentConfig) -> Result<PhoneTable, PipelineError> {
    match &cfg.phone_table {
        Some(p) => Ok(PhoneTable::load(p)?),
        None => Ok(PhoneTable::builtin()),
    }
}

struct Selection {
    midi: String,
    start: usize,
    notes: NoteSequence,
}

fn select_notes<R: Rng>(
    pool: &MidiPool,
    override_file: Option<&PoolFile>,
    n: usize,
    rng: &mut R,
    retries: u32,
) -> Result<Selection, PipelineError> {
    if let Some(f) = override_file {
        let (start, notes) = sample_note_window(&f.melody, n, rng)?;
        return Ok(Selection {
            midi: f.name.clone(),
            start,
            notes,
        });
    }
    for _ in 0..=retries {
        let f = &pool.files[rng.gen_range(0..pool.files.len())];
        match sample_note_window(&f.melody, n, rng) {
            Ok((start, notes)) => {
                return Ok(Selection {
                    midi: f.name.clone(),
                    start,
                    notes,
                })
            }
            Err(MidiError::InsufficientNotes { .. }) => {
                log::debug!("{} has fewer than {n} notes, redrawing", f.name);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(PipelineError::Selection(format!(
        "no pool file with {n} notes found in {} draws",
        retries + 1
    )))
}

fn output_name(id: &str, copy: u32, copies: u32) -> String {
    if copies == 1 {
        id.to_string()
    } else {
        format!("{id}_{copy}")
    }
}

#[allow(clippy::too_many_arguments)]
fn meta_for(
    name: &str,
    entry: &ManifestEntry,
    copy: u32,
    mode: Mode,
    seed: u64,
    src: &SourceUtterance,
    out: &Augmented,
    selection: Option<&Selection>,
    random: Option<RandomDraw>,
) -> UtteranceMeta {
    let pairs = out
        .alignment
        .iter()
        .flat_map(|a| a.pairs.iter())
        .map(|p| PairMeta {
            syllables: p.syllables.clone(),
            notes: p.notes.clone(),
            kind: p.kind(),
            forced: p.forced,
        })
        .collect();
    let (clamps, rest_gaps) = match &out.duration_plan {
        Some(p) => (p.clamps.clone(), p.rest_gaps.clone()),
        None => (Vec::new(), Vec::new()),
    };
    UtteranceMeta {
        id: name.to_string(),
        source_id: entry.id.clone(),
        copy,
        mode,
        seed,
        midi: selection.map(|s| s.midi.clone()),
        note_window_start: selection.map(|s| s.start),
        notes: selection
            .map(|s| {
                s.notes
                    .notes
                    .iter()
                    .map(|n| NoteMeta {
                        pitch: n.pitch,
                        onset_s: n.onset_s,
                        duration_s: n.duration_s,
                    })
                    .collect()
            })
            .unwrap_or_default(),
        speech_mean_semitone: out.speech_mean_semitone,
        note_mean_semitone: out.note_mean_semitone,
        global_shift_semitones: out.global_shift_semitones,
        pairs,
        clamps,
        rest_gaps,
        random,
        input_duration_s: src.waveform.duration_s(),
        output_duration_s: out.waveform.duration_s(),
        clipped_samples: out.clipped_samples,
        warnings: src.tier.warnings.clone(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_outputs(out_dir: &Path, meta: &UtteranceMeta, out: &Augmented) -> Result<(), PipelineError> {
    let name = &meta.id;
    write_wav(&out.waveform, out_dir.join(format!("{name}.wav")))?;
    let json = serde_json::to_string_pretty(meta)? + "\n";
    write_text(&out_dir.join(format!("{name}.meta.json")), &json)?;
    let tg = write_textgrid(&out.output_tier, out.waveform.duration_s());
    write_text(&out_dir.join(format!("{name}.TextGrid")), &tg)?;
    Ok(())
}

struct Job<'a> {
    entry: &'a ManifestEntry,
    copy: u32,
}

fn jobs(manifest: &Manifest, copies: u32) -> Vec<Job<'_>> {
    manifest
        .entries
        .iter()
        .flat_map(|entry| (0..copies).map(move |copy| Job { entry, copy }))
        .collect()
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))
}

fn prepare_out_dir(cfg: &AugmentConfig) -> Result<PathBuf, PipelineError> {
    let dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| PipelineError::Config("no output directory given".into()))?;
    fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

/// Writes the output manifest (`manifest.tsv`) and `summary.json`, in job order.
fn finish(
    out_dir: &Path,
    results: Vec<(String, Result<(), PipelineError>)>,
) -> Result<Summary, PipelineError> {
    let mut summary = Summary::default();
    let mut tsv = String::from("# id\twav\ttextgrid\n");
    for (name, r) in results {
        match r {
            Ok(()) => {
                summary.ok += 1;
                tsv.push_str(&format!("{name}\t{name}.wav\t{name}.TextGrid\n"));
            }
            Err(e) => {
                log::error!("{name}: {e}");
                summary.failed += 1;
                summary.failures.push(Failure {
                    id: name,
                    error: e.to_string(),
                });
            }
        }
    }
    write_text(&out_dir.join("manifest.tsv"), &tsv)?;
    write_text(
        &out_dir.join("summary.json"),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    log::info!("done: {} ok, {} failed", summary.ok, summary.failed);
    Ok(summary)
}

/// Score-guided augmentation over a manifest. `mode = random` delegates to the
/// random baseline. Startup problems are errors; per-utterance problems are
/// recorded in the summary.
pub fn run_augment(manifest: &Manifest, cfg: &AugmentConfig, jobs_n: usize) -> Result<Summary, PipelineError> {
    cfg.validate()?;
    if cfg.mode == Mode::Random {
        return run_random_baseline(manifest, cfg, jobs_n);
    }
    manifest.validate()?;
    let table = phone_table(cfg)?;
    let pool_dir = cfg
        .midi_pool_dir
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no MIDI pool directory given".into()))?;
    let pool = MidiPool::load_dir(pool_dir)?;
    let out_dir = prepare_out_dir(cfg)?;

    let work = jobs(manifest, cfg.copies);
    let results = thread_pool(jobs_n)?.install(|| {
        work.par_iter()
            .map(|job| {
                let name = output_name(&job.entry.id, job.copy, cfg.copies);
                let r = augment_job(job, &name, cfg, &table, &pool, &out_dir);
                (name, r)
            })
            .collect::<Vec<_>>()
    });
    finish(&out_dir, results)
}

fn augment_job(
    job: &Job,
    name: &str,
    cfg: &AugmentConfig,
    table: &PhoneTable,
    pool: &MidiPool,
    out_dir: &Path,
) -> Result<(), PipelineError> {
    let src = load_source(job.entry, table)?;
    let seed = utterance_seed(cfg.seed, &job.entry.id, job.copy);
    let mut rng = utterance_rng(cfg.seed, &job.entry.id, job.copy);
    let syllables = syllabify(&src.tier, table)?;
    let override_file = job.entry.midi.as_deref().map(load_melody).transpose()?;
    let selection = select_notes(pool, override_file.as_ref(), syllables.len(), &mut rng, cfg.midi_retries)?;
    let noise_seed: u64 = rng.gen();
    let out = augment_with_notes(&src, &selection.notes, cfg.mode, cfg, table, noise_seed)?;
    let meta = meta_for(name, job.entry, job.copy, cfg.mode, seed, &src, &out, Some(&selection), None);
    write_outputs(out_dir, &meta, &out)
}

/// Random pitch offset and vowel ratio per utterance; no MIDI involved.
pub fn run_random_baseline(
    manifest: &Manifest,
    cfg: &AugmentConfig,
    jobs_n: usize,
) -> Result<Summary, PipelineError> {
    cfg.validate()?;
    manifest.validate()?;
    let table = phone_table(cfg)?;
    let out_dir = prepare_out_dir(cfg)?;
    let work = jobs(manifest, cfg.copies);
    let results = thread_pool(jobs_n)?.install(|| {
        work.par_iter()
            .map(|job| {
                let name = output_name(&job.entry.id, job.copy, cfg.copies);
                let r = (|| {
                    let src = load_source(job.entry, &table)?;
                    let seed = utterance_seed(cfg.seed, &job.entry.id, job.copy);
                    let mut rng = utterance_rng(cfg.seed, &job.entry.id, job.copy);
                    let draw = draw_random(&mut rng, &cfg.random);
                    let noise_seed: u64 = rng.gen();
                    let out = augment_random(&src, draw, cfg, &table, noise_seed)?;
                    let meta = meta_for(&name, job.entry, job.copy, Mode::Random, seed, &src, &out, None, Some(draw));
                    write_outputs(&out_dir, &meta, &out)
                })();
                (name, r)
            })
            .collect::<Vec<_>>()
    });
    finish(&out_dir, results)
}

/// Pitch and duration statistics of the utterances in a manifest, written to
/// `stats.json` and `stats.txt` in the output directory. Utterances that fail
/// to load or analyse are counted and skipped.
pub fn run_stats(
    manifest: &Manifest,
    cfg: &AugmentConfig,
    corpus_id: &str,
    jobs_n: usize,
) -> Result<StatsReport, PipelineError> {
    cfg.validate()?;
    manifest.validate()?;
    let table = phone_table(cfg)?;
    let out_dir = prepare_out_dir(cfg)?;
    let results: Vec<Result<UtteranceStats, (String, PipelineError)>> = thread_pool(jobs_n)?.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                (|| {
                    let src = load_source(e, &table)?;
                    let f0 = estimate_f0(&src.waveform, &cfg.vocoder)?;
                    let syllables = syllabify(&src.tier, &table)?;
                    Ok(UtteranceStats::compute(&e.id, &f0, &syllables))
                })()
                .map_err(|err| (e.id.clone(), err))
            })
            .collect()
    });
    let mut stats = Vec::new();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(s) => stats.push(s),
            Err((id, e)) => {
                log::error!("{id}: {e}");
                failed += 1;
            }
        }
    }
    let report = corpus_report(corpus_id, stats, failed)?;
    write_text(&out_dir.join("stats.json"), &(report.to_json() + "\n"))?;
    write_text(&out_dir.join("stats.txt"), &render_table(&[&report]))?;
    Ok(report)
}
