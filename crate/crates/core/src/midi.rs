//! Standard MIDI File parsing and melody extraction.
//!
//! Only what is needed to turn a score into a monophonic note list is
//! interpreted: note on/off, running status and Set Tempo. Everything else
//! is skipped by length.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_US_PER_QUARTER: u32 = 500_000;
const PERCUSSION_CHANNEL: u8 = 9;

#[derive(Debug, Error, PartialEq)]
pub enum MidiError {
    #[error("not a MIDI file: missing MThd header")]
    MissingHeader,
    #[error("truncated data at byte offset {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },
    #[error("malformed data at byte offset {offset}: {what}")]
    Malformed { offset: usize, what: String },
    #[error("unsupported MIDI format {0} (only 0 and 1)")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    SmpteDivision,
    #[error("score has no melodic (non-percussion) notes")]
    EmptyScore,
    #[error("need {needed} notes but sequence has {available}")]
    InsufficientNotes { needed: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset_s: f64,
    pub duration_s: f64,
    pub velocity: u8,
}

impl NoteEvent {
    pub fn end_s(&self) -> f64 {
        self.onset_s + self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteSequence {
    pub notes: Vec<NoteEvent>,
    pub source_id: String,
}

impl NoteSequence {
    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    /// Unweighted mean MIDI pitch over all notes.
    pub fn mean_pitch(&self) -> Option<f64> {
        if self.notes.is_empty() {
            return None;
        }
        Some(self.notes.iter().map(|n| n.pitch as f64).sum::<f64>() / self.notes.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TempoChange {
    pub tick: u64,
    pub us_per_quarter: u32,
}

/// Piecewise-constant tempo, used to convert ticks to seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TempoMap {
    pub ticks_per_quarter: u16,
    changes: Vec<TempoChange>,
    // seconds elapsed at each change point
    offsets_s: Vec<f64>,
}

impl TempoMap {
    /// Builds a map from unordered change points. A change at tick 0 with the
    /// default tempo is inserted when missing; later entries at the same tick win.
    pub fn new(ticks_per_quarter: u16, mut changes: Vec<TempoChange>) -> Self {
        changes.sort_by_key(|c| c.tick);
        let mut dedup: Vec<TempoChange> = Vec::with_capacity(changes.len() + 1);
        for c in changes {
            match dedup.last_mut() {
                Some(last) if last.tick == c.tick => *last = c,
                _ => dedup.push(c),
            }
        }
        if dedup.first().is_none_or(|c| c.tick != 0) {
            dedup.insert(
                0,
                TempoChange {
                    tick: 0,
                    us_per_quarter: DEFAULT_US_PER_QUARTER,
                },
            );
        }
        let tpq = ticks_per_quarter.max(1) as f64;
        let mut offsets_s = Vec::with_capacity(dedup.len());
        let mut acc = 0.0;
        for (i, c) in dedup.iter().enumerate() {
            if i > 0 {
                let prev = dedup[i - 1];
                acc += (c.tick - prev.tick) as f64 * prev.us_per_quarter as f64 / (tpq * 1e6);
            }
            offsets_s.push(acc);
        }
        Self {
            ticks_per_quarter,
            changes: dedup,
            offsets_s,
        }
    }

    pub fn changes(&self) -> &[TempoChange] {
        &self.changes
    }

    pub fn seconds_at(&self, tick: u64) -> f64 {
        let idx = match self.changes.binary_search_by_key(&tick, |c| c.tick) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let c = self.changes[idx];
        let tpq = self.ticks_per_quarter.max(1) as f64;
        self.offsets_s[idx] + (tick - c.tick) as f64 * c.us_per_quarter as f64 / (tpq * 1e6)
    }
}

/// A paired note-on/note-off in tick units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawNote {
    pub channel: u8,
    pub pitch: u8,
    pub velocity: u8,
    pub start_tick: u64,
    pub end_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTrack {
    pub index: usize,
    pub name: Option<String>,
    pub notes: Vec<RawNote>,
    /// Note-ons left open at end of track; they were closed at the final tick.
    pub unpaired_note_ons: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMidi {
    pub format: u16,
    pub tempo: TempoMap,
    pub tracks: Vec<RawTrack>,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    // absolute offset of data[0] in the file
    base: usize,
}

impl<'a> Cursor<'a> {
    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, MidiError> {
        let b = *self.data.get(self.pos).ok_or(MidiError::Truncated {
            offset: self.offset(),
            what,
        })?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], MidiError> {
        if self.remaining() < n {
            return Err(MidiError::Truncated {
                offset: self.offset(),
                what,
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32be(&mut self, what: &'static str) -> Result<u32, MidiError> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self, what: &'static str) -> Result<u32, MidiError> {
        let start = self.offset();
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8(what)?;
            value = (value << 7) | (b & 0x7f) as u32;
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(MidiError::Malformed {
            offset: start,
            what: format!("variable-length quantity longer than 4 bytes ({what})"),
        })
    }
}

/// Parses a format 0 or 1 Standard MIDI File into a tempo map and per-track notes.
pub fn parse_midi(bytes: &[u8]) -> Result<ParsedMidi, MidiError> {
    if bytes.len() < 4 || &bytes[..4] != b"MThd" {
        return Err(MidiError::MissingHeader);
    }
    let mut cur = Cursor {
        data: bytes,
        pos: 4,
        base: 0,
    };
    let header_len = cur.u32be("header length")? as usize;
    let header = cur.take(header_len, "header chunk")?;
    if header_len < 6 {
        return Err(MidiError::Malformed {
            offset: 8,
            what: format!("header length {header_len} < 6"),
        });
    }
    let format = u16::from_be_bytes([header[0], header[1]]);
    let n_tracks = u16::from_be_bytes([header[2], header[3]]) as usize;
    let division = u16::from_be_bytes([header[4], header[5]]);
    if format > 1 {
        return Err(MidiError::UnsupportedFormat(format));
    }
    if division & 0x8000 != 0 {
        return Err(MidiError::SmpteDivision);
    }
    if division == 0 {
        return Err(MidiError::Malformed {
            offset: 12,
            what: "zero ticks per quarter".into(),
        });
    }

    let mut tracks = Vec::new();
    let mut tempo_changes = Vec::new();
    while tracks.len() < n_tracks {
        if cur.remaining() == 0 {
            return Err(MidiError::Truncated {
                offset: cur.offset(),
                what: "missing track chunk",
            });
        }
        let id = cur.take(4, "chunk id")?;
        let len = cur.u32be("chunk length")? as usize;
        let chunk_offset = cur.offset();
        let body = cur.take(len, "chunk body")?;
        if id != b"MTrk" {
            // alien chunk
            continue;
        }
        let track = parse_track(body, chunk_offset, tracks.len(), &mut tempo_changes)?;
        tracks.push(track);
    }

    Ok(ParsedMidi {
        format,
        tempo: TempoMap::new(division, tempo_changes),
        tracks,
    })
}

fn parse_track(
    body: &[u8],
    base: usize,
    index: usize,
    tempo_changes: &mut Vec<TempoChange>,
) -> Result<RawTrack, MidiError> {
    let mut cur = Cursor {
        data: body,
        pos: 0,
        base,
    };
    let mut track = RawTrack {
        index,
        ..Default::default()
    };
    let mut open: HashMap<(u8, u8), VecDeque<(u64, u8)>> = HashMap::new();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;

    while cur.remaining() > 0 {
        tick += cur.vlq("delta time")? as u64;
        let event_offset = cur.offset();
        let first = cur.u8("status")?;
        let (status, first_data) = if first & 0x80 != 0 {
            (first, None)
        } else {
            match running {
                Some(s) => (s, Some(first)),
                None => {
                    return Err(MidiError::Malformed {
                        offset: event_offset,
                        what: "data byte without running status".into(),
                    })
                }
            }
        };

        match status {
            0xFF => {
                running = None;
                let kind = cur.u8("meta type")?;
                let len = cur.vlq("meta length")? as usize;
                let data = cur.take(len, "meta data")?;
                match kind {
                    0x51 if len == 3 => {
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        tempo_changes.push(TempoChange {
                            tick,
                            us_per_quarter: us.max(1),
                        });
                    }
                    0x03 if track.name.is_none() => {
                        track.name = Some(String::from_utf8_lossy(data).into_owned());
                    }
                    0x2F => break,
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = cur.vlq("sysex length")? as usize;
                cur.take(len, "sysex data")?;
            }
            0xF1..=0xFE => {
                return Err(MidiError::Malformed {
                    offset: event_offset,
                    what: format!("system message 0x{status:02X} inside track"),
                });
            }
            _ => {
                running = Some(status);
                let kind = status & 0xF0;
                let channel = status & 0x0F;
                let d1 = match first_data {
                    Some(b) => b,
                    None => cur.u8("channel data")?,
                };
                let n_data = if kind == 0xC0 || kind == 0xD0 { 1 } else { 2 };
                let d2 = if n_data == 2 {
                    cur.u8("channel data")?
                } else {
                    0
                };
                match kind {
                    0x90 if d2 > 0 => {
                        open.entry((channel, d1)).or_default().push_back((tick, d2));
                    }
                    0x80 | 0x90 => {
                        if let Some((start, vel)) =
                            open.get_mut(&(channel, d1)).and_then(|q| q.pop_front())
                        {
                            track.notes.push(RawNote {
                                channel,
                                pitch: d1,
                                velocity: vel,
                                start_tick: start,
                                end_tick: tick,
                            });
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    let mut leftovers: Vec<_> = open
        .into_iter()
        .flat_map(|((channel, pitch), q)| {
            q.into_iter().map(move |(start, velocity)| RawNote {
                channel,
                pitch,
                velocity,
                start_tick: start,
                end_tick: tick,
            })
        })
        .collect();
    track.unpaired_note_ons = leftovers.len();
    if !leftovers.is_empty() {
        log::warn!(
            "track {index}: {} note-on(s) without note-off closed at end of track",
            leftovers.len()
        );
    }
    track.notes.append(&mut leftovers);
    track
        .notes
        .sort_by_key(|n| (n.start_tick, n.pitch, n.channel, n.end_tick));
    Ok(track)
}

/// Picks the non-percussion track with the most notes and reduces it to a
/// monophonic line, keeping the higher pitch wherever notes overlap.
pub fn extract_melody(
    tracks: &[RawTrack],
    tempo: &TempoMap,
    source_id: &str,
) -> Result<NoteSequence, MidiError> {
    let best = tracks
        .iter()
        .map(|t| {
            let melodic: Vec<RawNote> = t
                .notes
                .iter()
                .copied()
                .filter(|n| n.channel != PERCUSSION_CHANNEL && n.end_tick > n.start_tick)
                .collect();
            melodic
        })
        .enumerate()
        // max_by_key returns the last maximum; negate the index so the first wins
        .max_by_key(|(i, notes)| (notes.len(), std::cmp::Reverse(*i)))
        .map(|(_, notes)| notes)
        .filter(|notes| !notes.is_empty())
        .ok_or(MidiError::EmptyScore)?;

    let mono = reduce_monophonic(best);
    let notes = mono
        .into_iter()
        .map(|n| {
            let onset_s = tempo.seconds_at(n.start_tick);
            NoteEvent {
                pitch: n.pitch,
                onset_s,
                duration_s: tempo.seconds_at(n.end_tick) - onset_s,
                velocity: n.velocity,
            }
        })
        .filter(|n| n.duration_s > 0.0)
        .collect();
    Ok(NoteSequence {
        notes,
        source_id: source_id.to_string(),
    })
}

/// Removes overlaps in tick space. A higher note entering over a sounding
/// lower note truncates the lower one at the overlap start; a lower note
/// entering under a sounding higher note loses its overlapped head.
fn reduce_monophonic(mut notes: Vec<RawNote>) -> Vec<RawNote> {
    notes.sort_by(|a, b| {
        a.start_tick
            .cmp(&b.start_tick)
            .then(b.pitch.cmp(&a.pitch))
            .then(b.end_tick.cmp(&a.end_tick))
    });
    let mut out: Vec<RawNote> = Vec::with_capacity(notes.len());
    // trimmed notes are pushed back in start order
    let mut queue: VecDeque<RawNote> = notes.into();
    while let Some(mut n) = queue.pop_front() {
        let Some(last) = out.last_mut() else {
            out.push(n);
            continue;
        };
        if last.end_tick <= n.start_tick {
            out.push(n);
            continue;
        }
        if n.start_tick == last.start_tick {
            // same onset: `last` is the higher (or equal, longer) note
            if n.end_tick > last.end_tick {
                n.start_tick = last.end_tick;
                reinsert(&mut queue, n);
            }
            continue;
        }
        if n.pitch > last.pitch {
            last.end_tick = n.start_tick;
            out.push(n);
        } else if n.end_tick > last.end_tick {
            n.start_tick = last.end_tick;
            reinsert(&mut queue, n);
        }
    }
    out
}

fn reinsert(queue: &mut VecDeque<RawNote>, n: RawNote) {
    let pos = queue
        .iter()
        .position(|q| (q.start_tick, std::cmp::Reverse(q.pitch)) > (n.start_tick, std::cmp::Reverse(n.pitch)))
        .unwrap_or(queue.len());
    queue.insert(pos, n);
}

/// Draws a contiguous window of `n_notes` notes and shifts it to start at 0 s.
/// Returns the window start index alongside the window.
pub fn sample_note_window<R: Rng + ?Sized>(
    seq: &NoteSequence,
    n_notes: usize,
    rng: &mut R,
) -> Result<(usize, NoteSequence), MidiError> {
    if n_notes == 0 || seq.notes.len() < n_notes {
        return Err(MidiError::InsufficientNotes {
            needed: n_notes,
            available: seq.notes.len(),
        });
    }
    let start = rng.gen_range(0..=seq.notes.len() - n_notes);
    let window = &seq.notes[start..start + n_notes];
    let t0 = window[0].onset_s;
    let notes = window
        .iter()
        .map(|n| NoteEvent {
            onset_s: n.onset_s - t0,
            ..*n
        })
        .collect();
    Ok((
        start,
        NoteSequence {
            notes,
            source_id: seq.source_id.clone(),
        },
    ))
}

/// Builds SMF bytes from simple per-track event lists. Used to author fixtures.
#[doc(hidden)]
pub mod writer {
    /// One event: delta ticks followed by raw event bytes (status included).
    pub type Event = (u32, Vec<u8>);

    pub fn vlq(mut v: u32) -> Vec<u8> {
        let mut bytes = vec![(v & 0x7f) as u8];
        v >>= 7;
        while v > 0 {
            bytes.push(((v & 0x7f) as u8) | 0x80);
            v >>= 7;
        }
        bytes.reverse();
        bytes
    }

    pub fn smf(format: u16, tpq: u16, tracks: &[Vec<Event>]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"MThd");
        out.extend_from_slice(&6u32.to_be_bytes());
        out.extend_from_slice(&format.to_be_bytes());
        out.extend_from_slice(&(tracks.len() as u16).to_be_bytes());
        out.extend_from_slice(&tpq.to_be_bytes());
        for events in tracks {
            let mut body = Vec::new();
            for (delta, bytes) in events {
                body.extend(vlq(*delta));
                body.extend_from_slice(bytes);
            }
            body.extend([0x00, 0xFF, 0x2F, 0x00]);
            out.extend_from_slice(b"MTrk");
            out.extend_from_slice(&(body.len() as u32).to_be_bytes());
            out.extend(body);
        }
        out
    }

    pub fn tempo(us_per_quarter: u32) -> Vec<u8> {
        let b = us_per_quarter.to_be_bytes();
        vec![0xFF, 0x51, 0x03, b[1], b[2], b[3]]
    }

    pub fn on(ch: u8, pitch: u8, vel: u8) -> Vec<u8> {
        vec![0x90 | ch, pitch, vel]
    }

    pub fn off(ch: u8, pitch: u8) -> Vec<u8> {
        vec![0x80 | ch, pitch, 0]
    }

    /// A monophonic melody as (pitch, ticks) pairs; pitch 0 means a rest.
    pub fn melody(ch: u8, notes: &[(u8, u32)]) -> Vec<Event> {
        let mut events = Vec::new();
        let mut pending_rest = 0;
        for &(pitch, len) in notes {
            if pitch == 0 {
                pending_rest += len;
                continue;
            }
            events.push((pending_rest, on(ch, pitch, 80)));
            events.push((len, off(ch, pitch)));
            pending_rest = 0;
        }
        events
    }
}
