//! Learned linear temporal transforms.
//!
//! A transform is a `T x T` matrix with a single one per row, stored as the
//! column index of that one: applying it gathers `out[i] = x[indices[i]]`.
//!
//! Transforms are learned from (partial, full) pairs built by cropping fixed
//! windows out of each corpus sequence. For a pair, row `i` of the similarity
//! matrix is a softmax over partial frames `j` of `-|v_i - u_j| / lambda_T`,
//! where `v` is the full sequence. The matrices of all pairs are clustered,
//! each center is row-normalized, and row `i` of a center yields the index
//! `round(sum_j j * s_ij)`. A learned transform therefore maps a partial
//! observation onto the layout of the complete action it was cut from.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::kmeans::{kmeans_fit, KMeansConfig};
use crate::skeleton::{resize_linear, MotionSequence};

pub const DEFAULT_LAMBDA_T: f64 = 0.1;
pub const DEFAULT_N_TR: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    t: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Wraps a row-major `t x t` matrix with non-negative entries.
    pub fn from_rows(t: usize, values: Vec<f64>) -> Result<Self> {
        if t == 0 || values.len() != t * t {
            return Err(Error::invalid(format!(
                "{} values do not form a {t}x{t} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(
                "similarity entries must be finite and non-negative",
            ));
        }
        Ok(SimilarityMatrix { t, values })
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.t..(i + 1) * self.t]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.t + j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearTransform {
    pub indices: Vec<usize>,
}

impl LinearTransform {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let t = indices.len();
        if t == 0 {
            return Err(Error::invalid("transform must have at least one row"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= t) {
            return Err(Error::invalid(format!(
                "transform index {bad} out of range for T={t}"
            )));
        }
        Ok(LinearTransform { indices })
    }

    pub fn identity(t: usize) -> Self {
        LinearTransform {
            indices: (0..t).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The equivalent dense one-hot matrix, row-major.
    pub fn to_dense(&self) -> Vec<u8> {
        let t = self.len();
        let mut m = vec![0u8; t * t];
        for (i, &j) in self.indices.iter().enumerate() {
            m[i * t + j] = 1;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropWindow {
    pub start: f64,
    pub end: f64,
}

impl CropWindow {
    pub const fn new(start: f64, end: f64) -> Self {
        CropWindow { start, end }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.start && self.start < self.end && self.end <= 1.0) {
            return Err(Error::invalid(format!(
                "crop window ({}, {}) must satisfy 0 <= start < end <= 1",
                self.start, self.end
            )));
        }
        Ok(())
    }

    /// Frame range `round(start * T)..round(end * T)`.
    pub fn frame_range(&self, t: usize) -> (usize, usize) {
        let a = (self.start * t as f64).round() as usize;
        let b = ((self.end * t as f64).round() as usize).min(t);
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub windows: Vec<CropWindow>,
}

impl Default for PairSpec {
    /// The full window, the two halves, three shifted halves and two
    /// three-quarter windows.
    fn default() -> Self {
        PairSpec {
            windows: vec![
                CropWindow::new(0.0, 1.0),
                CropWindow::new(0.0, 0.5),
                CropWindow::new(0.5, 1.0),
                CropWindow::new(0.25, 0.75),
                CropWindow::new(0.125, 0.625),
                CropWindow::new(0.375, 0.875),
                CropWindow::new(0.0, 0.75),
                CropWindow::new(0.25, 1.0),
            ],
        }
    }
}

impl PairSpec {
    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(Error::invalid("pair spec has no windows"));
        }
        self.windows.iter().try_for_each(CropWindow::validate)
    }
}

/// Crops `window` out of `v` and resizes it back to `v.len()` frames, or
/// `None` when the crop is shorter than two frames.
pub fn crop_to_partial(v: &MotionSequence, window: &CropWindow) -> Option<MotionSequence> {
    let t = v.len();
    let (a, b) = window.frame_range(t);
    if b < a + 2 {
        return None;
    }
    resize_linear(&v.slice(a, b), t).ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub partial: MotionSequence,
    pub full: MotionSequence,
}

/// Builds one (partial, full) pair per sequence and window. Windows shorter
/// than two frames are skipped with a warning.
pub fn make_pairs(corpus: &Corpus, spec: &PairSpec) -> Result<Vec<TrainingPair>> {
    spec.validate()?;
    corpus.require_canonical()?;
    let mut pairs = Vec::with_capacity(corpus.len() * spec.windows.len());
    for v in &corpus.sequences {
        for w in &spec.windows {
            match crop_to_partial(v, w) {
                Some(u) => pairs.push(TrainingPair {
                    partial: u,
                    full: v.clone(),
                }),
                None => log::warn!(
                    "skipping window ({}, {}) for {:?}: fewer than 2 frames",
                    w.start,
                    w.end,
                    v.meta.id
                ),
            }
        }
    }
    Ok(pairs)
}

fn frame_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Row-softmax of `-|v_i - u_j| / lambda_t` over `j`. The row minimum distance
/// is subtracted before exponentiating, so tiny `lambda_t` cannot overflow.
pub fn similarity_matrix(
    v: &MotionSequence,
    u: &MotionSequence,
    lambda_t: f64,
) -> Result<SimilarityMatrix> {
    if !lambda_t.is_finite() || lambda_t <= 0.0 {
        return Err(Error::invalid(format!(
            "lambda_T must be positive, got {lambda_t}"
        )));
    }
    if v.len() != u.len() || v.num_joints() != u.num_joints() {
        return Err(Error::invalid(format!(
            "pair shapes differ: {}x{} vs {}x{}",
            v.len(),
            v.num_joints(),
            u.len(),
            u.num_joints()
        )));
    }
    let t = v.len();
    if t == 0 {
        return Err(Error::invalid("empty sequences"));
    }
    let mut values = Vec::with_capacity(t * t);
    let mut dist = vec![0.0f64; t];
    for vi in v.frames() {
        for (d, uj) in dist.iter_mut().zip(u.frames()) {
            *d = frame_dist(vi, uj);
        }
        let min = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let start = values.len();
        values.extend(dist.iter().map(|&d| (-(d - min) / lambda_t).exp()));
        let sum: f64 = values[start..].iter().sum();
        values[start..].iter_mut().for_each(|s| *s /= sum);
    }
    Ok(SimilarityMatrix { t, values })
}

/// Converts one row of (unnormalized, non-negative) similarities to a source
/// index: normalize, take the expected index, round, clamp.
fn row_index(row: &[f64]) -> usize {
    let t = row.len();
    let sum: f64 = row.iter().sum();
    let k = if sum > 0.0 && sum.is_finite() {
        row.iter()
            .enumerate()
            .map(|(j, &s)| j as f64 * s)
            .sum::<f64>()
            / sum
    } else {
        // a zero row is treated as uniform
        (t - 1) as f64 / 2.0
    };
    (k.round().max(0.0) as usize).min(t - 1)
}

pub fn transform_from_similarity(m: &SimilarityMatrix) -> LinearTransform {
    LinearTransform {
        indices: (0..m.t).map(|i| row_index(m.row(i))).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct TransformFit {
    pub transforms: Vec<LinearTransform>,
    /// Number of training pairs in each transform's cluster.
    pub cluster_sizes: Vec<usize>,
    pub inertia: f64,
    pub n_pairs: usize,
}

/// Learns `n_tr` transforms from the pairs of `corpus` under `spec`.
pub fn learn_transforms(
    corpus: &Corpus,
    spec: &PairSpec,
    lambda_t: f64,
    n_tr: usize,
    seed: u64,
) -> Result<TransformFit> {
    spec.validate()?;
    let (t, _) = corpus.require_canonical()?;
    if lambda_t.is_nan() || lambda_t <= 0.0 {
        return Err(Error::invalid(format!(
            "lambda_T must be positive, got {lambda_t}"
        )));
    }
    // One similarity matrix per (sequence, window); pairs are never held in memory.
    let jobs: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|s| (0..spec.windows.len()).map(move |w| (s, w)))
        .collect();
    let mats: Vec<Option<Vec<f32>>> = jobs
        .par_iter()
        .map(|&(s, w)| -> Result<Option<Vec<f32>>> {
            let v = &corpus.sequences[s];
            let Some(u) = crop_to_partial(v, &spec.windows[w]) else {
                return Ok(None);
            };
            let m = similarity_matrix(v, &u, lambda_t)?;
            Ok(Some(m.values.iter().map(|&x| x as f32).collect()))
        })
        .collect::<Result<_>>()?;
    let skipped = mats.iter().filter(|m| m.is_none()).count();
    if skipped > 0 {
        log::warn!("skipped {skipped} windows shorter than 2 frames");
    }
    let features: Vec<f32> = mats.into_iter().flatten().flatten().collect();
    let n_pairs = features.len() / (t * t);
    if n_pairs < n_tr {
        return Err(Error::invalid(format!(
            "need at least N_tr={n_tr} pairs, got {n_pairs}"
        )));
    }
    let fit = kmeans_fit(&features, t * t, &KMeansConfig::new(n_tr, seed))?;
    let transforms = fit
        .centers
        .chunks_exact(t * t)
        .map(|c| LinearTransform {
            indices: c.chunks_exact(t).map(row_index).collect(),
        })
        .collect();
    Ok(TransformFit {
        transforms,
        cluster_sizes: fit.cluster_sizes(),
        inertia: fit.inertia,
        n_pairs,
    })
}

/// `out[i] = x[indices[i]]`, the product of the one-hot matrix with `x`.
pub fn apply_transform(x: &MotionSequence, w: &LinearTransform) -> Result<MotionSequence> {
    if x.len() != w.len() {
        return Err(Error::invalid(format!(
            "transform has {} rows, sequence has {} frames",
            w.len(),
            x.len()
        )));
    }
    let mut data = Vec::with_capacity(x.data().len());
    for &src in &w.indices {
        data.extend_from_slice(x.frame(src));
    }
    Ok(x.with_data(data))
}
