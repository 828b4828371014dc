use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use songshift::pipeline::{run_augment, run_random_baseline, run_stats, AugmentConfig, Manifest, Mode};

/// Score-guided pitch and duration augmentation of speech toward singing.
///
/// Exit status: 0 when every utterance succeeded, 1 when some failed, 2 when
/// the run could not start.
#[derive(Parser)]
#[command(name = "songshift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Retime and re-pitch each utterance to notes drawn from a MIDI pool.
    Augment {
        #[command(flatten)]
        common: Common,
        /// pdaugment, pitch_only, duration_only or random.
        #[arg(long)]
        mode: Option<Mode>,
        /// Directory of MIDI files to draw note windows from.
        #[arg(long)]
        midi_pool: Option<PathBuf>,
    },
    /// Random whole-utterance pitch offset and vowel duration ratio.
    RandomBaseline {
        #[command(flatten)]
        common: Common,
    },
    /// Pitch and duration statistics of a corpus.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Name recorded in the report; defaults to the manifest file stem.
        #[arg(long)]
        corpus_id: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// TSV of id, wav, TextGrid and an optional MIDI file.
    #[arg(long)]
    manifest: PathBuf,
    /// TOML configuration; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<(Manifest, AugmentConfig, usize)> {
        let mut cfg = match &self.config {
            Some(path) => AugmentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => AugmentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let manifest = Manifest::load(&self.manifest)?;
        let jobs = self
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        Ok((manifest, cfg, jobs))
    }
}

fn corpus_name(manifest: &Path) -> String {
    manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into())
}

fn run(cli: Cli) -> Result<u8> {
    let failed = match cli.command {
        Command::Augment { common, mode, midi_pool } => {
            let (manifest, mut cfg, jobs) = common.load()?;
            if let Some(mode) = mode {
                cfg.mode = mode;
            }
            if let Some(dir) = midi_pool {
                cfg.midi_pool_dir = Some(dir);
            }
            let summary = run_augment(&manifest, &cfg, jobs)?;
            println!("{} ok, {} failed", summary.ok, summary.failed);
            summary.failed
        }
        Command::RandomBaseline { common } => {
            let (manifest, mut cfg, jobs) = common.load()?;
            cfg.mode = Mode::Random;
            let summary = run_random_baseline(&manifest, &cfg, jobs)?;
            println!("{} ok, {} failed", summary.ok, summary.failed);
            summary.failed
        }
        Command::Stats { common, corpus_id } => {
            let (manifest, cfg, jobs) = common.load()?;
            let id = corpus_id.unwrap_or_else(|| corpus_name(&common.manifest));
            let report = run_stats(&manifest, &cfg, &id, jobs)?;
            println!("{} ok, {} failed", report.utterance_count, report.failed_count);
            report.failed_count
        }
    };
    Ok(if failed == 0 { 0 } else { 1 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
