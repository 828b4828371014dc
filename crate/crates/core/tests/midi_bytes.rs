//! MIDI files assembled byte by byte, with note lists worked out by hand.

use songshift::midi::{extract_melody, parse_midi, NoteSequence};

fn chunk(tag: &[u8; 4], body: &[u8]) -> Vec<u8> {
    let mut v = tag.to_vec();
    v.extend_from_slice(&(body.len() as u32).to_be_bytes());
    v.extend_from_slice(body);
    v
}

fn file(format: u16, division: u16, tracks: &[&[u8]]) -> Vec<u8> {
    let mut head = Vec::new();
    head.extend_from_slice(&format.to_be_bytes());
    head.extend_from_slice(&(tracks.len() as u16).to_be_bytes());
    head.extend_from_slice(&division.to_be_bytes());
    let mut v = chunk(b"MThd", &head);
    for t in tracks {
        v.extend(chunk(b"MTrk", t));
    }
    v
}

const END: [u8; 4] = [0x00, 0xFF, 0x2F, 0x00];

fn melody(bytes: &[u8]) -> NoteSequence {
    let m = parse_midi(bytes).unwrap();
    extract_melody(&m.tracks, &m.tempo, "fixture").unwrap()
}

fn assert_notes(seq: &NoteSequence, want: &[(u8, f64, f64)]) {
    assert_eq!(seq.notes.len(), want.len(), "{:?}", seq.notes);
    for (n, &(p, on, d)) in seq.notes.iter().zip(want) {
        assert_eq!(n.pitch, p);
        assert!((n.onset_s - on).abs() < 1e-6, "onset {} vs {on}", n.onset_s);
        assert!((n.duration_s - d).abs() < 1e-6, "duration {} vs {d}", n.duration_s);
    }
}

#[test]
fn tempo_change_inside_a_note() {
    // 96 ticks per quarter. Tempo 500000 us/q, then 750000 us/q at tick 96.
    // Note 60 spans ticks 0..192: 0.5 s + 0.75 s. Note 64 spans 192..240: 0.375 s.
    let tempo: Vec<u8> = [
        &[0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20][..],
        &[0x60, 0xFF, 0x51, 0x03, 0x0B, 0x71, 0xB0][..],
        &END[..],
    ]
    .concat();
    let notes: Vec<u8> = [
        &[0x00, 0x90, 60, 100][..],
        &[0x81, 0x40, 0x80, 60, 0][..],
        &[0x00, 0x90, 64, 100][..],
        &[0x30, 0x80, 64, 0][..],
        &END[..],
    ]
    .concat();
    assert_notes(&melody(&file(1, 96, &[&tempo, &notes])), &[(60, 0.0, 1.25), (64, 1.25, 0.375)]);
}

#[test]
fn running_status_with_velocity_zero_offs() {
    // Default tempo (120 BPM), 480 ticks per quarter; one status byte for all.
    let track: Vec<u8> = [
        &[0x00, 0x91, 67, 90][..],
        &[0x83, 0x60, 67, 0][..],
        &[0x00, 69, 90][..],
        &[0x81, 0x70, 69, 0][..],
        &[0x81, 0x70, 71, 80][..],
        &[0x87, 0x40, 71, 0][..],
        &END[..],
    ]
    .concat();
    assert_notes(&melody(&file(0, 480, &[&track])), &[(67, 0.0, 0.5), (69, 0.5, 0.25), (71, 1.0, 1.0)]);
}

#[test]
fn chords_reduce_to_the_top_line() {
    // C-E-G chord for a quarter, then D alone; the chord keeps G.
    let track: Vec<u8> = [
        &[0x00, 0x90, 60, 80, 0x00, 64, 80, 0x00, 67, 80][..],
        &[0x83, 0x60, 0x80, 60, 64, 0x00, 64, 64, 0x00, 67, 64][..],
        &[0x00, 0x90, 62, 80][..],
        &[0x83, 0x60, 0x80, 62, 64][..],
        &END[..],
    ]
    .concat();
    assert_notes(&melody(&file(0, 480, &[&track])), &[(67, 0.0, 0.5), (62, 0.5, 0.5)]);
}

#[test]
fn truncated_and_foreign_files_are_rejected() {
    assert!(parse_midi(b"RIFF\x00\x00\x00\x00").is_err());
    let good = file(0, 480, &[&[0x00, 0x90, 60, 80, 0x60, 0x80, 60, 0, 0x00, 0xFF, 0x2F, 0x00]]);
    assert!(parse_midi(&good[..good.len() - 3]).is_err());
}
