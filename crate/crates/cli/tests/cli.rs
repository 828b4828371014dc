use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use songshift::alignment::write_textgrid;
use songshift::audio::{read_wav, write_wav};
use songshift::pipeline::utterance_seed;
use songshift::synthetic::{melody, midi_file, utterance};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_songshift"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

/// Writes `n` synthetic utterances, a three-file MIDI pool and a manifest.
fn corpus(dir: &Path, n: u64) {
    fs::create_dir_all(dir.join("midi")).unwrap();
    for k in 0..3 {
        fs::write(dir.join(format!("midi/song{k}.mid")), midi_file(&melody(16, 55 + 2 * k, 10 + k as u64))).unwrap();
    }
    let mut tsv = String::from("# id\twav\ttextgrid\n");
    for k in 0..n {
        let u = utterance(&format!("s{k}"), 2 + (k as usize % 4), 300 + k);
        write_wav(&u.waveform, dir.join(format!("s{k}.wav"))).unwrap();
        fs::write(dir.join(format!("s{k}.TextGrid")), write_textgrid(&u.tier.intervals, u.waveform.duration_s())).unwrap();
        tsv.push_str(&format!("s{k}\ts{k}.wav\ts{k}.TextGrid\n"));
    }
    fs::write(dir.join("manifest.tsv"), tsv).unwrap();
}

fn augment(dir: &Path, out: &str, jobs: &str, extra: &[&str]) -> Output {
    let mut args = vec!["augment", "--manifest", "manifest.tsv", "--midi-pool", "midi", "--out", out, "--jobs", jobs];
    if !extra.contains(&"--seed") {
        args.extend_from_slice(&["--seed", "42"]);
    }
    args.extend_from_slice(extra);
    run(&args, dir)
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path(), 5);
    let a = augment(tmp.path(), "a", "1", &[]);
    let b = augment(tmp.path(), "b", "4", &[]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    for k in 0..5 {
        for ext in ["meta.json", "wav", "TextGrid"] {
            let name = format!("s{k}.{ext}");
            let x = fs::read(tmp.path().join("a").join(&name)).unwrap();
            let y = fs::read(tmp.path().join("b").join(&name)).unwrap();
            assert!(x == y, "{name} differs");
        }
    }
    for f in ["summary.json", "manifest.tsv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn seed_changes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path(), 2);
    assert_eq!(augment(tmp.path(), "a", "2", &[]).status.code(), Some(0));
    assert_eq!(augment(tmp.path(), "b", "2", &["--seed", "43"]).status.code(), Some(0));
    let x = fs::read(tmp.path().join("a/s0.wav")).unwrap();
    let y = fs::read(tmp.path().join("b/s0.wav")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn one_bad_utterance_gives_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path(), 3);
    fs::write(tmp.path().join("s1.TextGrid"), "not a textgrid").unwrap();
    let o = augment(tmp.path(), "out", "2", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "2 ok, 1 failed");
    assert!(tmp.path().join("out/s0.wav").exists());
    assert!(!tmp.path().join("out/s1.wav").exists());
    assert!(tmp.path().join("out/s2.meta.json").exists());
}

#[test]
fn startup_problems_are_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path(), 1);
    fs::write(tmp.path().join("empty.tsv"), "# nothing here\n").unwrap();
    let o = run(&["augment", "--manifest", "empty.tsv", "--midi-pool", "midi", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    fs::create_dir_all(tmp.path().join("nomidi")).unwrap();
    let o = run(&["augment", "--manifest", "manifest.tsv", "--midi-pool", "nomidi", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(tmp.path().join("bad.toml"), "seed = 1\nunknown_key = 2\n").unwrap();
    let o = run(&["stats", "--manifest", "manifest.tsv", "--config", "bad.toml", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pitch_only_keeps_duration() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path(), 3);
    let o = augment(tmp.path(), "out", "2", &["--mode", "pitch_only"]);
    assert_eq!(o.status.code(), Some(0));
    for k in 0..3 {
        let src = read_wav(tmp.path().join(format!("s{k}.wav"))).unwrap();
        let out = read_wav(tmp.path().join(format!("out/s{k}.wav"))).unwrap();
        assert!((src.duration_s() - out.duration_s()).abs() <= 0.02);
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path(), 2);
    fs::write(
        tmp.path().join("run.toml"),
        "seed = 7\nmode = \"duration_only\"\nmidi_pool_dir = \"midi\"\noutput_dir = \"from_config\"\n",
    )
    .unwrap();
    let o = run(&["augment", "--manifest", "manifest.tsv", "--config", "run.toml", "--seed", "9"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = fs::read_to_string(tmp.path().join("from_config/s0.meta.json")).unwrap();
    assert!(meta.contains("\"mode\": \"duration_only\""), "{meta}");
    let want = format!("\"seed\": {},", utterance_seed(9, "s0", 0));
    assert!(meta.contains(&want), "{meta}");
}

#[test]
fn random_baseline_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(tmp.path(), 3);
    let o = run(&["random-baseline", "--manifest", "manifest.tsv", "--out", "rand", "--seed", "5"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("rand/s2.wav").exists());

    let o = run(&["stats", "--manifest", "manifest.tsv", "--out", "st"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let json = fs::read_to_string(tmp.path().join("st/stats.json")).unwrap();
    assert!(json.contains("\"corpus_id\": \"manifest\""), "{json}");
    assert!(json.contains("\"utterance_count\": 3"));
    assert!(tmp.path().join("st/stats.txt").exists());
}
