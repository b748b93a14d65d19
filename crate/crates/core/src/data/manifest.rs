//! Dataset manifest: one `photo<TAB>sketch[<TAB>labels]` line per sample.
//! Blank lines and lines starting with `#` are ignored; relative paths are
//! resolved against the manifest's directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub photo: PathBuf,
    pub sketch: PathBuf,
    pub labels: Option<PathBuf>,
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let resolve = |p: &str| {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let entry = match fields.as_slice() {
            [photo, sketch] => ManifestEntry {
                photo: resolve(photo),
                sketch: resolve(sketch),
                labels: None,
            },
            [photo, sketch, labels] => ManifestEntry {
                photo: resolve(photo),
                sketch: resolve(sketch),
                labels: (!labels.is_empty()).then(|| resolve(labels)),
            },
            _ => {
                return Err(Error::format(
                    "manifest",
                    format!("line {}: expected 2 or 3 tab-separated fields, got {}", lineno + 1, fields.len()),
                ))
            }
        };
        entries.push(entry);
    }
    Ok(entries)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}
