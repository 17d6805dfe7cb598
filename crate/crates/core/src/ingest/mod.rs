//! Corpus I/O: NTU `.skeleton` recordings, the two corpus file formats and a
//! synthetic motion generator.
//!
//! `jsonl` holds one record per line:
//! `{"id": ..., "label": ..., "subject": ..., "frames": [[[x, y, z], ...], ...]}`.
//!
//! `packed` is little-endian binary: the magic `SKL1`, a `u32` record count,
//! then per record a `u32` id length, the UTF-8 id, an `i32` label (`-1` for
//! none), `u32` T, `u32` J and `T * J * 3` `f32` coordinates. Subjects are not
//! stored in packed files.

mod ntu;
mod synth;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{MotionSequence, SequenceMeta};

pub use ntu::{
    parse_ntu_skeleton, select_primary_body, write_ntu_skeleton, BodyFrame, NtuRecording,
};
pub use synth::{generate_synthetic, MotionProfile, SyntheticSpec};

pub const PACKED_MAGIC: &[u8; 4] = b"SKL1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateSpace {
    #[default]
    Camera,
    /// Root-centred and axis-aligned by [`crate::skeleton::preprocess`].
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sequences: Vec<MotionSequence>,
    pub space: CoordinateSpace,
}

impl Corpus {
    /// Checks that all sequences share one joint count and that ids are unique.
    pub fn new(sequences: Vec<MotionSequence>, space: CoordinateSpace) -> Result<Self> {
        if let Some(first) = sequences.first() {
            let j = first.num_joints();
            if let Some(bad) = sequences.iter().find(|s| s.num_joints() != j) {
                return Err(Error::invalid(format!(
                    "sequence {:?} has {} joints, corpus has {j}",
                    bad.meta.id,
                    bad.num_joints()
                )));
            }
        }
        let mut seen = HashSet::new();
        for s in &sequences {
            if !seen.insert(s.meta.id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate sequence id {:?}",
                    s.meta.id
                )));
            }
        }
        Ok(Corpus { sequences, space })
    }

    pub fn empty() -> Self {
        Corpus {
            sequences: Vec::new(),
            space: CoordinateSpace::Camera,
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn joints(&self) -> Option<usize> {
        self.sequences.first().map(MotionSequence::num_joints)
    }

    /// The shared sequence length, if every sequence has the same one.
    pub fn canonical_len(&self) -> Option<usize> {
        let t = self.sequences.first()?.len();
        self.sequences.iter().all(|s| s.len() == t).then_some(t)
    }

    pub(crate) fn require_canonical(&self) -> Result<(usize, usize)> {
        let j = self
            .joints()
            .ok_or_else(|| Error::invalid("corpus is empty"))?;
        let t = self.canonical_len().ok_or_else(|| {
            Error::invalid("corpus sequences differ in length; resize them first")
        })?;
        Ok((t, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    Jsonl,
    Packed,
}

impl CorpusFormat {
    /// `.jsonl`/`.json` files are JSON lines, anything else is packed.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Packed,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    #[serde(default)]
    label: Option<i32>,
    #[serde(default)]
    subject: Option<String>,
    frames: Vec<Vec<[f32; 3]>>,
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut sequences = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let rec: JsonRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("line {lineno}: {e}")))?;
        let joints = rec.frames.first().map_or(0, Vec::len);
        if joints == 0 {
            return Err(Error::format(format!(
                "line {lineno}: record has no joints"
            )));
        }
        if rec.frames.iter().any(|f| f.len() != joints) {
            return Err(Error::format(format!(
                "line {lineno}: frames disagree on joint count"
            )));
        }
        let data = rec.frames.into_iter().flatten().flatten().collect();
        let meta = SequenceMeta {
            id: rec.id,
            label: rec.label,
            subject: rec.subject,
        };
        let seq = MotionSequence::new(meta, joints, data)
            .map_err(|e| Error::format(format!("line {lineno}: {e}")))?;
        sequences.push(seq);
    }
    Corpus::new(sequences, CoordinateSpace::Camera).map_err(|e| Error::format(e.to_string()))
}

pub fn write_jsonl<W: Write>(mut writer: W, corpus: &Corpus) -> Result<()> {
    for seq in &corpus.sequences {
        let rec = JsonRecord {
            id: seq.meta.id.clone(),
            label: seq.meta.label,
            subject: seq.meta.subject.clone(),
            frames: seq
                .frames()
                .map(|f| f.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
                .collect(),
        };
        serde_json::to_writer(&mut writer, &rec).map_err(|e| Error::format(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format(format!("short read in {what}")),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_packed<R: Read>(mut reader: R) -> Result<Corpus> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut reader, &mut magic, "header")?;
    if &magic != PACKED_MAGIC {
        return Err(Error::format(format!("bad magic {magic:?}, expected SKL1")));
    }
    let count = read_u32(&mut reader, "record count")?;
    let mut sequences = Vec::new();
    for rec in 0..count {
        let id_len = read_u32(&mut reader, "id length")? as usize;
        let mut id = vec![0u8; id_len];
        read_exact_or(&mut reader, &mut id, "id")?;
        let id = String::from_utf8(id)
            .map_err(|_| Error::format(format!("record {rec}: id is not UTF-8")))?;
        let label = read_u32(&mut reader, "label")? as i32;
        let t = read_u32(&mut reader, "frame count")? as usize;
        let j = read_u32(&mut reader, "joint count")? as usize;
        let n = t
            .checked_mul(j)
            .and_then(|v| v.checked_mul(3))
            .ok_or_else(|| Error::format(format!("record {rec}: size overflow")))?;
        let mut bytes = vec![0u8; n * 4];
        read_exact_or(&mut reader, &mut bytes, "coordinates")?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let meta = SequenceMeta {
            id,
            label: (label >= 0).then_some(label),
            subject: None,
        };
        let seq = MotionSequence::new(meta, j, data)
            .map_err(|e| Error::format(format!("record {rec}: {e}")))?;
        sequences.push(seq);
    }
    Corpus::new(sequences, CoordinateSpace::Camera).map_err(|e| Error::format(e.to_string()))
}

pub fn write_packed<W: Write>(mut writer: W, corpus: &Corpus) -> Result<()> {
    writer.write_all(PACKED_MAGIC)?;
    writer.write_all(&(corpus.len() as u32).to_le_bytes())?;
    for seq in &corpus.sequences {
        let id = seq.meta.id.as_bytes();
        writer.write_all(&(id.len() as u32).to_le_bytes())?;
        writer.write_all(id)?;
        writer.write_all(&seq.meta.label.unwrap_or(-1).to_le_bytes())?;
        writer.write_all(&(seq.len() as u32).to_le_bytes())?;
        writer.write_all(&(seq.num_joints() as u32).to_le_bytes())?;
        for v in seq.data() {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = BufReader::new(File::open(path)?);
    match format {
        CorpusFormat::Jsonl => read_jsonl(file),
        CorpusFormat::Packed => read_packed(file),
    }
}

pub fn write_corpus(path: &Path, corpus: &Corpus, format: CorpusFormat) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        CorpusFormat::Jsonl => write_jsonl(file, corpus),
        CorpusFormat::Packed => write_packed(file, corpus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(id: &str, t: usize, j: usize, offset: f32) -> MotionSequence {
        let data = (0..t * j * 3).map(|i| i as f32 * 0.1 + offset).collect();
        MotionSequence::new(SequenceMeta::new(id).with_label(3), j, data).unwrap()
    }

    #[test]
    fn empty_packed_corpus() {
        let mut buf = Vec::new();
        write_packed(&mut buf, &Corpus::empty()).unwrap();
        assert_eq!(buf, b"SKL1\0\0\0\0");
        assert!(read_packed(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn packed_round_trip_is_bit_exact() {
        let mut odd = seq("b", 2, 2, 0.0);
        odd.meta.label = None;
        let c = Corpus::new(
            vec![seq("a", 3, 2, 1.0 / 3.0), odd, seq("c", 1, 2, -7.25e-12)],
            CoordinateSpace::Camera,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_packed(&mut buf, &c).unwrap();
        let back = read_packed(&buf[..]).unwrap();
        let mut buf2 = Vec::new();
        write_packed(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.sequences[1].meta.label, None);
        for (a, b) in c.sequences.iter().zip(&back.sequences) {
            let bits =
                |s: &MotionSequence| s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn packed_errors() {
        assert!(matches!(
            read_packed(&b"SKL2\0\0\0\0"[..]),
            Err(Error::Format(_))
        ));
        let c = Corpus::new(vec![seq("a", 3, 2, 0.0)], CoordinateSpace::Camera).unwrap();
        let mut buf = Vec::new();
        write_packed(&mut buf, &c).unwrap();
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(read_packed(cut), Err(Error::Format(m)) if m.contains("short read")));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut s = seq("x", 4, 3, 0.5);
        s.meta.subject = Some("P001".into());
        let c = Corpus::new(vec![s, seq("y", 2, 3, 9.0)], CoordinateSpace::Camera).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &c).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 2);
        let back = read_jsonl(&buf[..]).unwrap();
        for (a, b) in c.sequences.iter().zip(&back.sequences) {
            assert_eq!(a.meta, b.meta);
            assert!(a
                .data()
                .iter()
                .zip(b.data())
                .all(|(x, y)| (x - y).abs() <= 1e-6));
        }
    }

    #[test]
    fn jsonl_missing_frames_names_the_line() {
        let text = "{\"id\":\"a\",\"frames\":[[[0,0,0]]]}\n{\"id\":\"b\",\"label\":1}\n";
        match read_jsonl(text.as_bytes()) {
            Err(Error::Format(m)) => {
                assert!(m.contains("line 2"), "{m}");
                assert!(m.contains("frames"), "{m}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn corpus_invariants() {
        let dup = Corpus::new(
            vec![seq("a", 2, 1, 0.0), seq("a", 2, 1, 1.0)],
            CoordinateSpace::Camera,
        );
        assert!(dup.is_err());
        let mixed = Corpus::new(
            vec![seq("a", 2, 1, 0.0), seq("b", 2, 2, 1.0)],
            CoordinateSpace::Camera,
        );
        assert!(mixed.is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            CorpusFormat::from_path(Path::new("a/b.jsonl")),
            CorpusFormat::Jsonl
        );
        assert_eq!(
            CorpusFormat::from_path(Path::new("a/b.skl")),
            CorpusFormat::Packed
        );
    }
}
