//! Recover-and-resample augmentation.
//!
//! [`learn_priors`] fits boundary poses and linear transforms on a corpus and
//! bundles them into a [`PriorSet`]. [`recover_and_resample`] then augments a
//! single sample in four steps, in this order:
//!
//! 1. assign the boundary pose nearest to the first frame,
//! 2. draw an infill length and extrapolate from that pose,
//! 3. draw a transform and apply it,
//! 4. crop a random segment and resize it back to `T` frames.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{
    assign_boundary_index, extrapolate, learn_boundary_poses, sample_tp, BoundaryPoseSet,
    ExtrapolationParams, DEFAULT_ALPHA, DEFAULT_N_BKG,
};
use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::rng::{derive_seed, sample_stream, seeded};
use crate::skeleton::{resize_temporal, MotionSequence, ResizeMode, DEFAULT_LEN};
use crate::transforms::{
    apply_transform, learn_transforms, LinearTransform, PairSpec, DEFAULT_LAMBDA_T, DEFAULT_N_TR,
};

pub const PRIOR_FORMAT_VERSION: u32 = 1;
pub const AUG_SUFFIX: &str = "#aug";

/// Every knob of prior learning and augmentation. All fields have defaults,
/// so a JSON config file may set any subset of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub t: usize,
    pub alpha: f64,
    pub lambda_t: f64,
    pub n_bkg: usize,
    pub n_tr: usize,
    pub m_aug: f64,
    /// Bounds of the uniform crop-length ratio used when resampling.
    pub resample_range: [f64; 2],
    pub resize_mode: ResizeMode,
    pub pair_spec: PairSpec,
    /// Sample transforms proportionally to their cluster sizes instead of
    /// uniformly.
    pub weight_by_cluster_size: bool,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            t: DEFAULT_LEN,
            alpha: DEFAULT_ALPHA,
            lambda_t: DEFAULT_LAMBDA_T,
            n_bkg: DEFAULT_N_BKG,
            n_tr: DEFAULT_N_TR,
            m_aug: 0.75,
            resample_range: [0.7, 1.0],
            resize_mode: ResizeMode::Linear,
            pair_spec: PairSpec::default(),
            weight_by_cluster_size: false,
            seed: 0,
        }
    }
}

fn check_range(range: [f64; 2]) -> Result<()> {
    let [lo, hi] = range;
    if !(0.0 < lo && lo <= hi && hi <= 1.0) {
        return Err(Error::invalid(format!(
            "resample range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1"
        )));
    }
    Ok(())
}

fn check_m_aug(m_aug: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&m_aug) {
        return Err(Error::invalid(format!("m_aug={m_aug} must lie in [0, 1]")));
    }
    Ok(())
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::invalid("T must be at least 2"));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !self.lambda_t.is_finite() || self.lambda_t <= 0.0 {
            return Err(Error::invalid("lambda_T must be positive"));
        }
        if self.n_bkg == 0 || self.n_tr == 0 {
            return Err(Error::invalid("N_bkg and N_tr must be positive"));
        }
        check_m_aug(self.m_aug)?;
        check_range(self.resample_range)?;
        self.pair_spec.validate()
    }

    pub fn extrapolation(&self) -> ExtrapolationParams {
        ExtrapolationParams {
            alpha: self.alpha,
            t: self.t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_id: String,
    /// Creation time; left out unless the caller stamps it, so that learning
    /// twice with one seed produces identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
    pub library_version: String,
}

/// Learned priors plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSet {
    pub version: u32,
    pub config: AugmentConfig,
    pub poses: BoundaryPoseSet,
    pub transforms: Vec<LinearTransform>,
    /// Training pairs per transform cluster.
    pub transform_weights: Vec<usize>,
    pub provenance: Provenance,
}

impl PriorSet {
    pub fn validate(&self) -> Result<()> {
        if self.version != PRIOR_FORMAT_VERSION {
            return Err(Error::format(format!(
                "unsupported prior set version {}",
                self.version
            )));
        }
        self.config.validate()?;
        if self.poses.is_empty() || self.transforms.is_empty() {
            return Err(Error::invalid("prior set needs poses and transforms"));
        }
        let j = self.poses.poses[0].num_joints();
        if self.poses.poses.iter().any(|p| p.num_joints() != j) {
            return Err(Error::invalid("boundary poses disagree on joint count"));
        }
        for w in &self.transforms {
            if w.len() != self.config.t {
                return Err(Error::invalid(format!(
                    "transform of length {} does not match T={}",
                    w.len(),
                    self.config.t
                )));
            }
            if w.indices.iter().any(|&k| k >= self.config.t) {
                return Err(Error::invalid("transform index out of range"));
            }
        }
        if self.transform_weights.len() != self.transforms.len() {
            return Err(Error::invalid("one weight per transform expected"));
        }
        if self.config.weight_by_cluster_size && self.transform_weights.iter().all(|&w| w == 0) {
            return Err(Error::invalid("transform weights are all zero"));
        }
        Ok(())
    }

    pub fn joints(&self) -> usize {
        self.poses.poses[0].num_joints()
    }

    pub fn seq_len(&self) -> usize {
        self.config.t
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("prior sets always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: PriorSet = serde_json::from_str(text).map_err(|e| {
            Error::format(format!(
                "prior set at line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        PriorSet::from_json(&text)
    }

    pub fn check_sample(&self, x: &MotionSequence) -> Result<()> {
        if x.len() != self.seq_len() || x.num_joints() != self.joints() {
            return Err(Error::invalid(format!(
                "sequence {:?} is {}x{}, priors expect {}x{}",
                x.meta.id,
                x.len(),
                x.num_joints(),
                self.seq_len(),
                self.joints()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub pose_inertia: f64,
    pub transform_inertia: f64,
    pub n_pairs: usize,
}

/// Fits boundary poses (seed `cfg.seed`) and transforms (seed `cfg.seed + 1`).
pub fn learn_priors(corpus: &Corpus, cfg: &AugmentConfig) -> Result<(PriorSet, LearnReport)> {
    cfg.validate()?;
    let (t, _) = corpus.require_canonical()?;
    if t != cfg.t {
        return Err(Error::invalid(format!(
            "corpus sequences have {t} frames, config expects T={}",
            cfg.t
        )));
    }
    let poses = learn_boundary_poses(corpus, cfg.n_bkg, cfg.seed)?;
    let transforms = learn_transforms(
        corpus,
        &cfg.pair_spec,
        cfg.lambda_t,
        cfg.n_tr,
        cfg.seed.wrapping_add(1),
    )?;
    let corpus_id = format!(
        "{} sequences, first {:?}",
        corpus.len(),
        corpus.sequences[0].meta.id
    );
    let priors = PriorSet {
        version: PRIOR_FORMAT_VERSION,
        config: cfg.clone(),
        poses: poses.poses,
        transforms: transforms.transforms,
        transform_weights: transforms.cluster_sizes,
        provenance: Provenance {
            corpus_id,
            created: None,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    let report = LearnReport {
        pose_inertia: poses.inertia,
        transform_inertia: transforms.inertia,
        n_pairs: transforms.n_pairs,
    };
    Ok((priors, report))
}

/// Crops a random segment of ratio `r ~ U(lo, hi)` and resizes it back to the
/// input length.
pub fn resample<R: Rng + ?Sized>(
    x: &MotionSequence,
    range: [f64; 2],
    mode: ResizeMode,
    rng: &mut R,
) -> Result<MotionSequence> {
    check_range(range)?;
    let t = x.len();
    if t < 2 {
        return Err(Error::invalid("resampling needs at least two frames"));
    }
    let [lo, hi] = range;
    let r = if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    };
    let seg_len = ((r * t as f64).round() as usize).clamp(2, t);
    let start = rng.random_range(0..=t - seg_len);
    resize_temporal(&x.slice(start, start + seg_len), t, mode, Some(rng))
}

/// The random choices of one recovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoverDraw {
    pub t_p: usize,
    pub transform: usize,
}

pub fn draw_recover<R: Rng + ?Sized>(priors: &PriorSet, rng: &mut R) -> Result<RecoverDraw> {
    let t_p = sample_tp(&priors.config.extrapolation(), rng)?;
    let n = priors.transforms.len();
    let transform = if priors.config.weight_by_cluster_size {
        let total: usize = priors.transform_weights.iter().sum();
        let mut target = rng.random_range(0..total);
        priors
            .transform_weights
            .iter()
            .position(|&w| {
                if target < w {
                    true
                } else {
                    target -= w;
                    false
                }
            })
            .unwrap_or(n - 1)
    } else {
        rng.random_range(0..n)
    };
    Ok(RecoverDraw { t_p, transform })
}

/// Extrapolates `x` from its nearest boundary pose and applies the drawn
/// transform.
pub fn recover(x: &MotionSequence, priors: &PriorSet, draw: RecoverDraw) -> Result<MotionSequence> {
    priors.check_sample(x)?;
    let w = priors
        .transforms
        .get(draw.transform)
        .ok_or_else(|| Error::invalid(format!("no transform {}", draw.transform)))?;
    let p = assign_boundary_index(x.frame(0), &priors.poses)?;
    let extended = extrapolate(x, &priors.poses.poses[p], draw.t_p)?;
    apply_transform(&extended, w)
}

pub fn recover_and_resample<R: Rng + ?Sized>(
    x: &MotionSequence,
    priors: &PriorSet,
    rng: &mut R,
) -> Result<MotionSequence> {
    priors.check_sample(x)?;
    let draw = draw_recover(priors, rng)?;
    let recovered = recover(x, priors, draw)?;
    resample(
        &recovered,
        priors.config.resample_range,
        priors.config.resize_mode,
        rng,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample<'a> {
    pub original: &'a MotionSequence,
    pub augmented: Option<MotionSequence>,
}

/// Number of samples `augment_batch` augments in a batch of `b`.
pub fn augment_count(b: usize, m_aug: f64) -> usize {
    ((m_aug * b as f64).round() as usize).min(b)
}

/// Batch positions chosen for augmentation, in ascending order.
pub fn select_for_augmentation(b: usize, m_aug: f64, master_seed: u64) -> Result<Vec<usize>> {
    check_m_aug(m_aug)?;
    let mut order: Vec<usize> = (0..b).collect();
    order.shuffle(&mut seeded(derive_seed(master_seed, 0x5e1ec7)));
    let mut chosen = order[..augment_count(b, m_aug)].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Augments exactly `round(m_aug * B)` samples of `batch`.
///
/// Each augmented sample draws from its own stream keyed by
/// `(master_seed, id)`, so its result does not depend on the rest of the
/// batch or on how the work is scheduled across threads. Augmented copies
/// keep the original metadata with `#aug` appended to the id.
pub fn augment_batch<'a>(
    batch: &'a [MotionSequence],
    priors: &PriorSet,
    m_aug: f64,
    master_seed: u64,
) -> Result<Vec<AugmentedSample<'a>>> {
    let chosen = select_for_augmentation(batch.len(), m_aug, master_seed)?;
    let mut selected = vec![false; batch.len()];
    chosen.iter().for_each(|&i| selected[i] = true);
    batch
        .par_iter()
        .zip(selected.par_iter())
        .map(|(x, &sel)| {
            let augmented = if sel {
                let mut rng = sample_stream(master_seed, &x.meta.id);
                let mut out = recover_and_resample(x, priors, &mut rng)?;
                out.meta.id.push_str(AUG_SUFFIX);
                Some(out)
            } else {
                None
            };
            Ok(AugmentedSample {
                original: x,
                augmented,
            })
        })
        .collect()
}
