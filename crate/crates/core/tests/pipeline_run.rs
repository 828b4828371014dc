use std::fs;
use std::path::Path;

use songshift::alignment::{parse_alignment, write_textgrid, PhoneTable};
use songshift::audio::{read_wav, write_wav};
use songshift::pipeline::{run_augment, run_random_baseline, run_stats, AugmentConfig, Manifest, Mode, UtteranceMeta};
use songshift::synthetic::{melody, midi_file, utterance};

fn corpus(dir: &Path, n: u64, override_midi: bool) -> Manifest {
    fs::create_dir_all(dir.join("pool")).unwrap();
    fs::write(dir.join("pool/a.mid"), midi_file(&melody(12, 57, 1))).unwrap();
    fs::write(dir.join("pool/b.mid"), midi_file(&melody(12, 62, 2))).unwrap();
    fs::write(dir.join("pool/notes.txt"), "not midi").unwrap();
    fs::write(dir.join("special.mid"), midi_file(&melody(8, 50, 3))).unwrap();
    let mut tsv = String::new();
    for k in 0..n {
        let u = utterance(&format!("u{k}"), 3 + k as usize, 50 + k);
        write_wav(&u.waveform, dir.join(format!("u{k}.wav"))).unwrap();
        fs::write(dir.join(format!("u{k}.TextGrid")), write_textgrid(&u.tier.intervals, u.waveform.duration_s())).unwrap();
        tsv.push_str(&format!("u{k}\tu{k}.wav\tu{k}.TextGrid"));
        if override_midi && k == 0 {
            tsv.push_str("\tspecial.mid");
        }
        tsv.push('\n');
    }
    fs::write(dir.join("list.tsv"), tsv).unwrap();
    Manifest::load(&dir.join("list.tsv")).unwrap()
}

fn config(dir: &Path, out: &str) -> AugmentConfig {
    AugmentConfig {
        seed: 11,
        midi_pool_dir: Some(dir.join("pool")),
        output_dir: Some(dir.join(out)),
        ..AugmentConfig::default()
    }
}

fn meta(dir: &Path, name: &str) -> UtteranceMeta {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.meta.json"))).unwrap()).unwrap()
}

#[test]
fn three_utterances_all_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(tmp.path(), 3, true);
    let summary = run_augment(&manifest, &config(tmp.path(), "out"), 2).unwrap();
    assert_eq!((summary.ok, summary.failed), (3, 0));
    let out = tmp.path().join("out");
    for k in 0..3 {
        let m = meta(&out, &format!("u{k}"));
        assert_eq!(m.mode, Mode::Pdaugment);
        assert!(!m.pairs.is_empty());
        let w = read_wav(out.join(format!("u{k}.wav"))).unwrap();
        assert!((w.duration_s() - m.output_duration_s).abs() < 1e-3);
        let tier = parse_alignment(out.join(format!("u{k}.TextGrid")), &PhoneTable::builtin()).unwrap();
        assert!(tier.end_s() <= w.duration_s() + 1e-6);
    }
    assert_eq!(meta(&out, "u0").midi.as_deref(), Some("special.mid"));
    assert!(matches!(meta(&out, "u1").midi.as_deref(), Some("a.mid" | "b.mid")));
    let listed = fs::read_to_string(out.join("manifest.tsv")).unwrap();
    assert_eq!(listed.lines().filter(|l| !l.starts_with('#')).count(), 3);
    // the written manifest is itself a valid input
    Manifest::load(&out.join("manifest.tsv")).unwrap().validate().unwrap();
}

#[test]
fn reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(tmp.path(), 3, false);
    run_augment(&manifest, &config(tmp.path(), "a"), 1).unwrap();
    run_augment(&manifest, &config(tmp.path(), "b"), 3).unwrap();
    for k in 0..3 {
        for ext in ["meta.json", "wav"] {
            let f = format!("u{k}.{ext}");
            assert_eq!(fs::read(tmp.path().join("a").join(&f)).unwrap(), fs::read(tmp.path().join("b").join(&f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn copies_get_distinct_names_and_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(tmp.path(), 1, false);
    let cfg = AugmentConfig {
        copies: 3,
        ..config(tmp.path(), "out")
    };
    let summary = run_augment(&manifest, &cfg, 2).unwrap();
    assert_eq!(summary.ok, 3);
    let out = tmp.path().join("out");
    let seeds: Vec<u64> = (0..3).map(|c| meta(&out, &format!("u0_{c}")).seed).collect();
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2] && seeds[0] != seeds[2]);
}

#[test]
fn ablation_modes_touch_only_their_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(tmp.path(), 2, false);
    let pitch = AugmentConfig {
        mode: Mode::PitchOnly,
        ..config(tmp.path(), "pitch")
    };
    let dur = AugmentConfig {
        mode: Mode::DurationOnly,
        ..config(tmp.path(), "dur")
    };
    run_augment(&manifest, &pitch, 2).unwrap();
    run_augment(&manifest, &dur, 2).unwrap();
    for k in 0..2 {
        let p = meta(&tmp.path().join("pitch"), &format!("u{k}"));
        assert!((p.output_duration_s - p.input_duration_s).abs() <= 0.02);
        let d = meta(&tmp.path().join("dur"), &format!("u{k}"));
        assert_eq!(d.global_shift_semitones, 0);
    }
}

#[test]
fn random_mode_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(tmp.path(), 3, false);
    let cfg = AugmentConfig {
        mode: Mode::Random,
        midi_pool_dir: None,
        ..config(tmp.path(), "rand")
    };
    let s = run_random_baseline(&manifest, &cfg, 2).unwrap();
    assert_eq!(s.ok, 3);
    let m = meta(&tmp.path().join("rand"), "u2");
    let draw = m.random.unwrap();
    assert!((-6.0..=6.0).contains(&draw.pitch_offset_semitones));
    assert!((0.5..=1.2).contains(&draw.duration_ratio));

    let report = run_stats(&manifest, &config(tmp.path(), "stats"), "src", 2).unwrap();
    assert_eq!((report.utterance_count, report.failed_count), (3, 0));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("stats/stats.json")).unwrap()).unwrap();
    assert_eq!(json["corpus_id"], "src");
    assert_eq!(json["utterances"].as_array().unwrap().len(), 3);
}

#[test]
fn empty_pool_is_a_startup_error() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(tmp.path(), 1, false);
    fs::create_dir_all(tmp.path().join("empty")).unwrap();
    let cfg = AugmentConfig {
        midi_pool_dir: Some(tmp.path().join("empty")),
        ..config(tmp.path(), "out")
    };
    let err = run_augment(&manifest, &cfg, 1).unwrap_err();
    assert!(err.is_fatal(), "{err}");
}
