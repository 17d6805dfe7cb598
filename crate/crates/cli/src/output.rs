//! Atomic file output: everything is written to a temporary file next to the
//! target and renamed into place only once complete.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use skelaug::ingest::{write_jsonl, write_packed};
use skelaug::{Corpus, CorpusFormat};
use tempfile::NamedTempFile;

pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

pub fn write_corpus(path: &Path, corpus: &Corpus, format: CorpusFormat) -> Result<()> {
    write_atomic(path, |w| {
        match format {
            CorpusFormat::Jsonl => write_jsonl(w, corpus)?,
            CorpusFormat::Packed => write_packed(w, corpus)?,
        }
        Ok(())
    })
}

/// Writes a set of files into `dir`, creating it if needed. Contents are
/// prepared by the caller beforehand, so a failure can only come from the
/// file system.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, text) in files {
        write_text(&dir.join(name), text)?;
    }
    Ok(())
}
