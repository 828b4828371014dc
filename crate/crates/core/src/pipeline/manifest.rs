use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub wav: PathBuf,
    pub alignment: PathBuf,
    /// Use this MIDI file instead of drawing from the pool.
    pub midi: Option<PathBuf>,
}

/// Tab-separated `id, wav, alignment[, midi]` lines. Blank lines and lines
/// starting with `#` are skipped. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            if !(3..=4).contains(&fields.len()) || fields[..3].iter().any(|f| f.is_empty()) {
                return Err(PipelineError::Manifest {
                    line: line_no,
                    message: format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let id = fields[0].to_string();
            if !seen.insert(id.clone()) {
                return Err(PipelineError::Manifest {
                    line: line_no,
                    message: format!("duplicate id {id:?}"),
                });
            }
            if id.contains(['/', '\\']) {
                return Err(PipelineError::Manifest {
                    line: line_no,
                    message: format!("id {id:?} contains a path separator"),
                });
            }
            let resolve = |p: &str| {
                let p = Path::new(p);
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base.join(p)
                }
            };
            entries.push(ManifestEntry {
                id,
                wav: resolve(fields[1]),
                alignment: resolve(fields[2]),
                midi: fields.get(3).filter(|f| !f.is_empty()).map(|f| resolve(f)),
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Fails on an empty manifest or on any referenced file that is missing.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.entries.is_empty() {
            return Err(PipelineError::EmptyManifest);
        }
        for e in &self.entries {
            for p in [Some(&e.wav), Some(&e.alignment), e.midi.as_ref()].into_iter().flatten() {
                if !p.is_file() {
                    return Err(PipelineError::MissingFile {
                        id: e.id.clone(),
                        path: p.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows_and_resolves_paths() {
        let m = Manifest::parse(
            "# id\twav\ttg\nu1\ta.wav\ta.TextGrid\n\nu2\t/abs/b.wav\tb.json\tm.mid\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].wav, PathBuf::from("/data/a.wav"));
        assert_eq!(m.entries[0].midi, None);
        assert_eq!(m.entries[1].wav, PathBuf::from("/abs/b.wav"));
        assert_eq!(m.entries[1].midi, Some(PathBuf::from("/data/m.mid")));
    }

    #[test]
    fn rejects_duplicates_and_short_rows() {
        let dup = Manifest::parse("a\tx\ty\na\tx\ty\n", Path::new("."));
        assert!(matches!(dup, Err(PipelineError::Manifest { line: 2, .. })));
        let short = Manifest::parse("a\tx\n", Path::new("."));
        assert!(matches!(short, Err(PipelineError::Manifest { line: 1, .. })));
        assert!(matches!(Manifest::default().validate(), Err(PipelineError::EmptyManifest)));
    }
}
