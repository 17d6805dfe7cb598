//! NTU RGB+D `.skeleton` text files.
//!
//! Layout, one item per line:
//!
//! ```text
//! <frame count>
//! per frame:  <body count>
//!   per body: <body id> <9 tracking values>
//!             <joint count>
//!             per joint: x y z depthX depthY colorX colorY oW oX oY oZ trackingState
//! ```
//!
//! The parser is strict on counts and token counts, and tolerant of trailing
//! whitespace, CRLF line endings and blank lines after the last frame.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::skeleton::{MotionSequence, SequenceMeta};

const BODY_INFO_TOKENS: usize = 10;
const JOINT_TOKENS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct BodyFrame {
    pub body_id: String,
    /// The nine tracking values after the id, kept verbatim.
    pub tracking: Vec<String>,
    pub joints: Vec<[f32; 3]>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NtuRecording {
    pub frames: Vec<Vec<BodyFrame>>,
}

impl NtuRecording {
    pub fn num_joints(&self) -> Option<usize> {
        self.frames.iter().flatten().map(|b| b.joints.len()).next()
    }

    /// `(frames, max bodies per frame, joints)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        let bodies = self.frames.iter().map(Vec::len).max().unwrap_or(0);
        (self.frames.len(), bodies, self.num_joints().unwrap_or(0))
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next line split into tokens, with its 1-based number.
    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line.split_whitespace().collect()))
            }
            None => Err(Error::parse(
                self.last + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn count(&mut self, what: &str) -> Result<(usize, usize)> {
        let (line, toks) = self.next_tokens(what)?;
        match toks.as_slice() {
            [tok] => tok
                .parse::<usize>()
                .map(|n| (line, n))
                .map_err(|_| Error::parse(line, format!("{what} {tok:?} is not a count"))),
            _ => Err(Error::parse(
                line,
                format!("expected a single {what}, found {} tokens", toks.len()),
            )),
        }
    }
}

fn check_numeric(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(line, format!("{tok:?} is not a finite number")))
}

/// Parses an NTU `.skeleton` file.
pub fn parse_ntu_skeleton(bytes: &[u8]) -> Result<NtuRecording> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        Error::parse(line, "file is not valid UTF-8 text")
    })?;
    let mut lines = Lines::new(text);
    let (_, n_frames) = lines.count("frame count")?;
    let mut joint_count: Option<usize> = None;
    let mut frames = Vec::with_capacity(n_frames.min(1 << 16));

    for _ in 0..n_frames {
        let (_, n_bodies) = lines.count("body count")?;
        let mut bodies = Vec::with_capacity(n_bodies.min(16));
        for _ in 0..n_bodies {
            let (line, info) = lines.next_tokens("body info line")?;
            if info.len() != BODY_INFO_TOKENS {
                return Err(Error::parse(
                    line,
                    format!(
                        "body info line has {} values, expected {BODY_INFO_TOKENS}",
                        info.len()
                    ),
                ));
            }
            for tok in &info {
                check_numeric(line, tok)?;
            }
            let (line, n_joints) = lines.count("joint count")?;
            match joint_count {
                Some(j) if j != n_joints => {
                    return Err(Error::parse(
                        line,
                        format!("joint count {n_joints} differs from earlier bodies ({j})"),
                    ))
                }
                _ => joint_count = Some(n_joints),
            }
            if n_joints == 0 {
                return Err(Error::parse(line, "joint count must be positive"));
            }
            let mut joints = Vec::with_capacity(n_joints);
            for _ in 0..n_joints {
                let (line, toks) = lines.next_tokens("joint line")?;
                if toks.len() != JOINT_TOKENS {
                    return Err(Error::parse(
                        line,
                        format!(
                            "joint line has {} values, expected {JOINT_TOKENS}",
                            toks.len()
                        ),
                    ));
                }
                let mut xyz = [0.0f32; 3];
                for (k, tok) in toks.iter().enumerate() {
                    let v = check_numeric(line, tok)?;
                    if k < 3 {
                        let f = tok.parse::<f32>().map_err(|_| {
                            Error::parse(line, format!("{tok:?} is not a coordinate"))
                        })?;
                        if !f.is_finite() {
                            return Err(Error::parse(
                                line,
                                format!("coordinate {v} overflows f32"),
                            ));
                        }
                        xyz[k] = f;
                    }
                }
                joints.push(xyz);
            }
            bodies.push(BodyFrame {
                body_id: info[0].to_string(),
                tracking: info[1..].iter().map(|s| s.to_string()).collect(),
                joints,
            });
        }
        frames.push(bodies);
    }

    for (i, line) in lines.inner.by_ref() {
        if !line.trim().is_empty() {
            return Err(Error::parse(
                i + 1,
                "unexpected content after the last frame",
            ));
        }
    }
    Ok(NtuRecording { frames })
}

/// Writes a recording in the same layout. Joint lines carry the coordinates
/// followed by nine zeros; coordinates use the shortest representation that
/// parses back to the same `f32`.
pub fn write_ntu_skeleton(rec: &NtuRecording) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", rec.frames.len());
    for frame in &rec.frames {
        let _ = writeln!(out, "{}", frame.len());
        for body in frame {
            out.push_str(&body.body_id);
            for t in &body.tracking {
                out.push(' ');
                out.push_str(t);
            }
            for _ in body.tracking.len()..BODY_INFO_TOKENS - 1 {
                out.push_str(" 0");
            }
            out.push('\n');
            let _ = writeln!(out, "{}", body.joints.len());
            for [x, y, z] in &body.joints {
                let _ = writeln!(out, "{x:?} {y:?} {z:?} 0 0 0 0 0 0 0 0 0");
            }
        }
    }
    out
}

/// Frames where one body is present, with its data.
type Track<'a> = Vec<(usize, &'a BodyFrame)>;

/// Picks the most active body of a recording and returns it as a sequence.
///
/// Bodies are tracked by id across frames. All-zero bodies are discarded; of
/// the rest, the one with the largest summed per-coordinate variance over its
/// present frames wins (earliest appearance on ties). Frames where it is
/// missing copy the nearest frame where it is present (earlier on ties).
pub fn select_primary_body(rec: &NtuRecording, meta: SequenceMeta) -> Result<MotionSequence> {
    let joints = rec.num_joints().ok_or(Error::NoValidBody)?;
    // body id -> (first appearance, frames present)
    let mut tracks: BTreeMap<&str, (usize, Track)> = BTreeMap::new();
    let mut order = 0;
    for (t, frame) in rec.frames.iter().enumerate() {
        for body in frame {
            let entry = tracks.entry(body.body_id.as_str()).or_insert_with(|| {
                order += 1;
                (order, Vec::new())
            });
            if !entry.1.iter().any(|(ft, _)| *ft == t) {
                entry.1.push((t, body));
            }
        }
    }

    let mut best: Option<(f64, usize, &Track)> = None;
    for (first_seen, present) in tracks.values() {
        let all_zero = present
            .iter()
            .all(|(_, b)| b.joints.iter().flatten().all(|&v| v == 0.0));
        if all_zero {
            continue;
        }
        let score = motion_variance(present.iter().map(|(_, b)| *b), joints);
        let better = match best {
            None => true,
            Some((s, o, _)) => score > s || (score == s && *first_seen < o),
        };
        if better {
            best = Some((score, *first_seen, present));
        }
    }
    let (_, _, present) = best.ok_or(Error::NoValidBody)?;

    let mut data = Vec::with_capacity(rec.frames.len() * joints * 3);
    for t in 0..rec.frames.len() {
        let src = present
            .iter()
            .min_by_key(|(ft, _)| (ft.abs_diff(t), *ft))
            .map(|(_, b)| *b)
            .expect("selected body is present in at least one frame");
        data.extend(src.joints.iter().flatten());
    }
    MotionSequence::new(meta, joints, data)
}

fn motion_variance<'a>(bodies: impl Iterator<Item = &'a BodyFrame>, joints: usize) -> f64 {
    let mut sum = vec![0.0f64; joints * 3];
    let mut sum_sq = vec![0.0f64; joints * 3];
    let mut n = 0usize;
    for b in bodies {
        n += 1;
        for (k, &v) in b.joints.iter().flatten().enumerate() {
            sum[k] += v as f64;
            sum_sq[k] += (v as f64) * (v as f64);
        }
    }
    let n = n as f64;
    sum.iter()
        .zip(&sum_sq)
        .map(|(s, sq)| (sq / n - (s / n) * (s / n)).max(0.0))
        .sum()
}
