//! Praat TextGrid (long and short text forms) and the JSON phones format.
//!
//! Both TextGrid forms carry the same sequence of values; the long form only
//! adds `key =` labels and `item [n]:` headers. The reader therefore tokenizes
//! to values (numbers, quoted strings, `<exists>` flags) and walks the value
//! stream, which handles either form.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{AlignmentError, PhonemeInterval, PhonemeTier, PhoneTable};

const PHONES_TIER: &str = "phones";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentFormat {
    TextGrid,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Str(String),
    Flag(bool),
}

fn tokenize(text: &str) -> Result<Vec<Token>, AlignmentError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.trim_start_matches('\u{feff}').chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(AlignmentError::TextGrid("unterminated string".into())),
                        Some('"') if chars.get(i + 1) == Some(&'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                tokens.push(Token::Str(s));
            }
            '[' => {
                // `item [1]:` style indices are labels, not values
                while i < chars.len() && chars[i] != ']' {
                    i += 1;
                }
                i += 1;
            }
            '<' => {
                let start = i;
                while i < chars.len() && chars[i] != '>' {
                    i += 1;
                }
                let word: String = chars[start + 1..i.min(chars.len())].iter().collect();
                i += 1;
                match word.as_str() {
                    "exists" => tokens.push(Token::Flag(true)),
                    "absent" => tokens.push(Token::Flag(false)),
                    _ => {}
                }
            }
            '!' => {
                // Praat comment to end of line
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '.' | '-' | '+'))
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if let Ok(v) = word.parse::<f64>() {
                    tokens.push(Token::Num(v));
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                // keys such as `xmin`, `intervals`, `class`
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
            }
            _ => i += 1,
        }
    }
    Ok(tokens)
}

struct Stream {
    tokens: std::vec::IntoIter<Token>,
}

impl Stream {
    fn next(&mut self, what: &str) -> Result<Token, AlignmentError> {
        self.tokens
            .next()
            .ok_or_else(|| AlignmentError::TextGrid(format!("unexpected end of file reading {what}")))
    }

    fn num(&mut self, what: &str) -> Result<f64, AlignmentError> {
        match self.next(what)? {
            Token::Num(v) => Ok(v),
            other => Err(AlignmentError::TextGrid(format!("expected number for {what}, got {other:?}"))),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, AlignmentError> {
        match self.next(what)? {
            Token::Str(s) => Ok(s),
            other => Err(AlignmentError::TextGrid(format!("expected string for {what}, got {other:?}"))),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, AlignmentError> {
        let v = self.num(what)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(AlignmentError::TextGrid(format!("bad {what} {v}")));
        }
        Ok(v as usize)
    }
}

/// Raw tier content: interval tiers hold `(label, start, end)` triples.
struct RawTier {
    name: String,
    intervals: Option<Vec<(String, f64, f64)>>,
}

fn read_tiers(text: &str) -> Result<Vec<RawTier>, AlignmentError> {
    let mut s = Stream {
        tokens: tokenize(text)?.into_iter(),
    };
    let file_type = s.string("file type")?;
    if !file_type.starts_with("ooTextFile") {
        return Err(AlignmentError::TextGrid(format!("unsupported file type {file_type:?}")));
    }
    let class = s.string("object class")?;
    if class != "TextGrid" {
        return Err(AlignmentError::TextGrid(format!("object class {class:?} is not TextGrid")));
    }
    s.num("xmin")?;
    s.num("xmax")?;
    match s.next("tiers flag")? {
        Token::Flag(true) => {}
        Token::Flag(false) => return Ok(vec![]),
        other => return Err(AlignmentError::TextGrid(format!("expected <exists>, got {other:?}"))),
    }
    let n_tiers = s.count("tier count")?;
    let mut tiers = Vec::with_capacity(n_tiers);
    for _ in 0..n_tiers {
        let class = s.string("tier class")?;
        let name = s.string("tier name")?;
        s.num("tier xmin")?;
        s.num("tier xmax")?;
        let n = s.count("interval count")?;
        match class.as_str() {
            "IntervalTier" => {
                let mut intervals = Vec::with_capacity(n);
                for _ in 0..n {
                    let start = s.num("interval xmin")?;
                    let end = s.num("interval xmax")?;
                    let label = s.string("interval text")?;
                    intervals.push((label, start, end));
                }
                tiers.push(RawTier {
                    name,
                    intervals: Some(intervals),
                });
            }
            "TextTier" => {
                for _ in 0..n {
                    s.num("point time")?;
                    s.string("point mark")?;
                }
                tiers.push(RawTier {
                    name,
                    intervals: None,
                });
            }
            other => return Err(AlignmentError::TextGrid(format!("unknown tier class {other:?}"))),
        }
    }
    Ok(tiers)
}

/// Reads the "phones" interval tier of a TextGrid. A tier whose name ends in
/// "phones" (MFA's multi-speaker `<speaker> - phones`) is accepted when no
/// exact match exists.
pub fn parse_textgrid(text: &str, table: &PhoneTable) -> Result<PhonemeTier, AlignmentError> {
    let tiers = read_tiers(text)?;
    let names: Vec<String> = tiers.iter().map(|t| t.name.clone()).collect();
    let pick = tiers
        .iter()
        .position(|t| t.intervals.is_some() && t.name == PHONES_TIER)
        .or_else(|| {
            tiers
                .iter()
                .position(|t| t.intervals.is_some() && t.name.trim().ends_with(PHONES_TIER))
        })
        .ok_or(AlignmentError::MissingPhonesTier(names))?;
    let raw = tiers.into_iter().nth(pick).and_then(|t| t.intervals).unwrap_or_default();
    PhonemeTier::from_raw(raw, table)
}

#[derive(Deserialize)]
struct JsonPhone {
    label: String,
    start: f64,
    end: f64,
}

#[derive(Deserialize)]
struct JsonAlignment {
    phones: Vec<JsonPhone>,
}

/// Reads `{"phones": [{"label": .., "start": .., "end": ..}, ..]}`.
pub fn parse_phones_json(text: &str, table: &PhoneTable) -> Result<PhonemeTier, AlignmentError> {
    let doc: JsonAlignment = serde_json::from_str(text)?;
    PhonemeTier::from_raw(
        doc.phones.into_iter().map(|p| (p.label, p.start, p.end)).collect(),
        table,
    )
}

pub fn parse_alignment_str(
    text: &str,
    format: AlignmentFormat,
    table: &PhoneTable,
) -> Result<PhonemeTier, AlignmentError> {
    match format {
        AlignmentFormat::TextGrid => parse_textgrid(text, table),
        AlignmentFormat::Json => parse_phones_json(text, table),
    }
}

/// Reads an alignment file; `.json` files (or content starting with `{`) are
/// parsed as JSON, everything else as a TextGrid.
pub fn parse_alignment(path: impl AsRef<Path>, table: &PhoneTable) -> Result<PhonemeTier, AlignmentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AlignmentError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start_matches('\u{feff}').trim_start().starts_with('{');
    let format = if is_json {
        AlignmentFormat::Json
    } else {
        AlignmentFormat::TextGrid
    };
    parse_alignment_str(&text, format, table)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Renders intervals as a long-form TextGrid with a single "phones" tier.
/// Uncovered time between intervals becomes empty-label intervals.
pub fn write_textgrid(intervals: &[PhonemeInterval], xmax: f64) -> String {
    let xmax = intervals.last().map_or(xmax, |i| xmax.max(i.end_s));
    let mut filled: Vec<(f64, f64, &str)> = Vec::new();
    let mut t = 0.0;
    for iv in intervals {
        if iv.start_s > t + 1e-9 {
            filled.push((t, iv.start_s, ""));
        }
        filled.push((iv.start_s, iv.end_s, iv.label.as_str()));
        t = iv.end_s;
    }
    if xmax > t + 1e-9 {
        filled.push((t, xmax, ""));
    }

    let mut out = String::new();
    let _ = writeln!(out, "File type = \"ooTextFile\"");
    let _ = writeln!(out, "Object class = \"TextGrid\"");
    let _ = writeln!(out);
    let _ = writeln!(out, "xmin = 0 ");
    let _ = writeln!(out, "xmax = {xmax} ");
    let _ = writeln!(out, "tiers? <exists> ");
    let _ = writeln!(out, "size = 1 ");
    let _ = writeln!(out, "item []: ");
    let _ = writeln!(out, "    item [1]:");
    let _ = writeln!(out, "        class = \"IntervalTier\" ");
    let _ = writeln!(out, "        name = \"phones\" ");
    let _ = writeln!(out, "        xmin = 0 ");
    let _ = writeln!(out, "        xmax = {xmax} ");
    let _ = writeln!(out, "        intervals: size = {} ", filled.len());
    for (i, (a, b, label)) in filled.iter().enumerate() {
        let _ = writeln!(out, "        intervals [{}]:", i + 1);
        let _ = writeln!(out, "            xmin = {a} ");
        let _ = writeln!(out, "            xmax = {b} ");
        let _ = writeln!(out, "            text = {} ", quote(label));
    }
    out
}
