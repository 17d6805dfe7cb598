//! Boundary poses and boundary-conditioned extrapolation.
//!
//! Boundary poses are k-means centers of the (preprocessed) first frames of a
//! corpus. Extrapolation prepends a linear blend from an assigned boundary pose
//! to a temporally squeezed copy of the sample, so that the sample looks like
//! the tail of a longer action that started at rest.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::kmeans::{kmeans_assign, kmeans_fit, KMeansConfig};
use crate::skeleton::{lerp, resize_linear, MotionSequence, Skeleton};

pub const DEFAULT_N_BKG: usize = 10;
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundaryPoseSet {
    pub poses: Vec<Skeleton>,
}

impl BoundaryPoseSet {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Poses as a flat `N x 3J` center matrix.
    fn centers(&self) -> Vec<f64> {
        self.poses
            .iter()
            .flat_map(|p| p.flatten())
            .map(f64::from)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryFit {
    pub poses: BoundaryPoseSet,
    pub inertia: f64,
    pub cluster_sizes: Vec<usize>,
}

/// Clusters the first frames of `corpus` into `n_bkg` boundary poses.
pub fn learn_boundary_poses(corpus: &Corpus, n_bkg: usize, seed: u64) -> Result<BoundaryFit> {
    let joints = corpus
        .joints()
        .ok_or_else(|| Error::invalid("corpus is empty"))?;
    if corpus.len() < n_bkg {
        return Err(Error::invalid(format!(
            "need at least N_bkg={n_bkg} sequences, corpus has {}",
            corpus.len()
        )));
    }
    if let Some(s) = corpus.sequences.iter().find(|s| s.is_empty()) {
        return Err(Error::invalid(format!(
            "sequence {:?} has no frames",
            s.meta.id
        )));
    }
    let dim = 3 * joints;
    let firsts: Vec<f32> = corpus
        .sequences
        .iter()
        .flat_map(|s| s.frame(0).iter().copied())
        .collect();
    let fit = kmeans_fit(&firsts, dim, &KMeansConfig::new(n_bkg, seed))?;
    let poses = fit
        .centers
        .chunks_exact(dim)
        .map(|c| Skeleton::from_flat(&c.iter().map(|&v| v as f32).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryFit {
        cluster_sizes: fit.cluster_sizes(),
        inertia: fit.inertia,
        poses: BoundaryPoseSet { poses },
    })
}

/// Index of the nearest boundary pose to `x0` (L2 on flattened poses, lowest
/// index on ties).
pub fn assign_boundary_index(x0: &[f32], poses: &BoundaryPoseSet) -> Result<usize> {
    if poses.is_empty() {
        return Err(Error::invalid("boundary pose set is empty"));
    }
    let dim = 3 * poses.poses[0].num_joints();
    kmeans_assign(x0, &poses.centers(), dim)
}

pub fn assign_boundary<'a>(x0: &Skeleton, poses: &'a BoundaryPoseSet) -> Result<&'a Skeleton> {
    let i = assign_boundary_index(&x0.flatten(), poses)?;
    Ok(&poses.poses[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationParams {
    /// Shape of the symmetric Beta distribution.
    pub alpha: f64,
    /// Sequence length; infill lengths fall in `[0, t / 2]`.
    pub t: usize,
}

impl Default for ExtrapolationParams {
    fn default() -> Self {
        ExtrapolationParams {
            alpha: DEFAULT_ALPHA,
            t: crate::skeleton::DEFAULT_LEN,
        }
    }
}

/// Draws from `Beta(a, b)` with Johnk's method, evaluated in log space so that
/// small shape parameters do not underflow.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    assert!(a > 0.0 && b > 0.0, "Beta shapes must be positive");
    loop {
        // open interval (0, 1] so the logs stay finite
        let u = 1.0 - rng.random::<f64>();
        let v = 1.0 - rng.random::<f64>();
        let lx = u.ln() / a;
        let ly = v.ln() / b;
        let m = lx.max(ly);
        let (ex, ey) = ((lx - m).exp(), (ly - m).exp());
        let log_sum = m + (ex + ey).ln();
        if log_sum <= 0.0 {
            return ex / (ex + ey);
        }
    }
}

/// Infill length `t_p = round(b * T / 2)` with `b ~ Beta(alpha, alpha)`.
pub fn sample_tp<R: Rng + ?Sized>(params: &ExtrapolationParams, rng: &mut R) -> Result<usize> {
    if !params.alpha.is_finite() || params.alpha <= 0.0 {
        return Err(Error::invalid("alpha must be positive"));
    }
    let b = sample_beta(params.alpha, params.alpha, rng);
    let half = (params.t / 2) as f64;
    Ok(((b * half).round() as usize).min(params.t / 2))
}

/// Boundary-conditioned extrapolation with the linear infiller.
///
/// Frame 0 becomes `p_prime`, the whole of `x` is squeezed into frames
/// `t_p..T` and frames `1..t_p` blend linearly from `p_prime` to the first
/// squeezed frame. `t_p = 0` returns `x` unchanged.
pub fn extrapolate(x: &MotionSequence, p_prime: &Skeleton, t_p: usize) -> Result<MotionSequence> {
    let t_len = x.len();
    if t_len < 2 {
        return Err(Error::invalid("extrapolation needs at least two frames"));
    }
    if t_p > t_len / 2 {
        return Err(Error::invalid(format!(
            "t_p={t_p} out of range [0, {}]",
            t_len / 2
        )));
    }
    if p_prime.num_joints() != x.num_joints() {
        return Err(Error::invalid(format!(
            "boundary pose has {} joints, sequence has {}",
            p_prime.num_joints(),
            x.num_joints()
        )));
    }
    if t_p == 0 {
        return Ok(x.clone());
    }
    let squeezed = resize_linear(x, t_len - t_p)?;
    let start = p_prime.flatten();
    let target = squeezed.frame(0);
    let mut data = Vec::with_capacity(x.data().len());
    data.extend_from_slice(&start);
    for k in 1..t_p {
        let f = k as f64 / t_p as f64;
        data.extend(start.iter().zip(target).map(|(&a, &b)| lerp(a, b, f)));
    }
    data.extend_from_slice(squeezed.data());
    Ok(x.with_data(data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic, CoordinateSpace, SyntheticSpec};
    use crate::rng::seeded;
    use crate::skeleton::SequenceMeta;

    fn scalar_seq(vals: &[f32]) -> MotionSequence {
        let data = vals.iter().flat_map(|&v| [v, v, v]).collect();
        MotionSequence::new(SequenceMeta::new("s"), 1, data).unwrap()
    }

    fn pose(v: f32) -> Skeleton {
        Skeleton::new(vec![[v, v, v]]).unwrap()
    }

    #[test]
    fn single_start_pose() {
        let spec = SyntheticSpec {
            n_sequences: 12,
            ..Default::default()
        };
        let mut c = generate_synthetic(&spec).unwrap();
        let first = c.sequences[0].frame(0).to_vec();
        for s in &mut c.sequences {
            let mut d = s.data().to_vec();
            d[..first.len()].copy_from_slice(&first);
            *s = s.with_data(d);
        }
        let fit = learn_boundary_poses(&c, 1, 0).unwrap();
        assert_eq!(fit.poses.poses[0].flatten(), first);
    }

    #[test]
    fn two_rest_poses_are_recovered() {
        let spec = SyntheticSpec {
            n_sequences: 80,
            n_rest_poses: 2,
            noise_std: 0.01,
            ..Default::default()
        };
        let c = generate_synthetic(&spec).unwrap();
        let fit = learn_boundary_poses(&c, 2, 3).unwrap();
        // sample means of the first frames per rest pose
        for (r, rest) in spec.rest_poses().iter().enumerate() {
            let members: Vec<&MotionSequence> = c
                .sequences
                .iter()
                .enumerate()
                .filter(|(i, _)| (i / spec.n_classes) % 2 == r)
                .map(|(_, s)| s)
                .collect();
            let mean: Vec<f64> = (0..rest.len())
                .map(|k| {
                    members.iter().map(|s| s.frame(0)[k] as f64).sum::<f64>() / members.len() as f64
                })
                .collect();
            let close = fit.poses.poses.iter().any(|p| {
                p.flatten()
                    .iter()
                    .zip(rest)
                    .zip(&mean)
                    .all(|((&c, &r), &m)| (c - r).abs() < 0.05 && (c as f64 - m).abs() < 1e-4)
            });
            assert!(close, "rest pose {r} not recovered");
        }
    }

    #[test]
    fn too_few_sequences() {
        let c = generate_synthetic(&SyntheticSpec {
            n_sequences: 3,
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(
            learn_boundary_poses(&c, 10, 0),
            Err(Error::InvalidInput(_))
        ));
        let empty = Corpus::new(vec![], CoordinateSpace::Camera).unwrap();
        assert!(learn_boundary_poses(&empty, 1, 0).is_err());
    }

    #[test]
    fn assignment() {
        let set = BoundaryPoseSet {
            poses: vec![pose(0.0), pose(1.0), pose(2.0)],
        };
        assert_eq!(assign_boundary(&pose(2.0), &set).unwrap(), &pose(2.0));
        let single = BoundaryPoseSet {
            poses: vec![pose(5.0)],
        };
        assert_eq!(assign_boundary(&pose(-9.0), &single).unwrap(), &pose(5.0));
        let empty = BoundaryPoseSet { poses: vec![] };
        assert!(assign_boundary(&pose(0.0), &empty).is_err());

        let mut rng = seeded(4);
        for _ in 0..100 {
            let x = pose(rng.random_range(-1.0..3.0));
            let brute = set
                .poses
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let d: f64 = p
                        .flatten()
                        .iter()
                        .zip(x.flatten())
                        .map(|(a, b)| ((a - b) as f64).powi(2))
                        .sum();
                    (d, i)
                })
                .fold(
                    (f64::INFINITY, 0),
                    |acc, v| if v.0 < acc.0 { v } else { acc },
                );
            assert_eq!(assign_boundary(&x, &set).unwrap(), &set.poses[brute.1]);
        }
    }

    #[test]
    fn tp_is_seeded_and_bounded() {
        let p = ExtrapolationParams::default();
        let a = sample_tp(&p, &mut seeded(1)).unwrap();
        assert_eq!(a, sample_tp(&p, &mut seeded(1)).unwrap());
        let mut rng = seeded(2);
        assert!((0..1000).all(|_| sample_tp(&p, &mut rng).unwrap() <= 32));
        let bad = ExtrapolationParams { alpha: 0.0, t: 64 };
        assert!(sample_tp(&bad, &mut rng).is_err());
    }

    #[test]
    fn beta_mean_for_asymmetric_shapes() {
        let mut rng = seeded(3);
        let n = 50_000;
        let mean = (0..n).map(|_| sample_beta(2.0, 5.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.0 / 7.0).abs() < 0.005, "{mean}");
    }

    #[test]
    fn zero_tp_is_identity() {
        let x = scalar_seq(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(extrapolate(&x, &pose(9.0), 0).unwrap(), x);
    }

    #[test]
    fn half_length_infill_of_constant_motion() {
        let q = 2.0f32;
        let x = scalar_seq(&[q; 64]);
        let out = extrapolate(&x, &pose(-2.0), 32).unwrap();
        for t in 0..=32 {
            let expected = -2.0 + 4.0 * t as f32 / 32.0;
            assert!((out.frame(t)[0] - expected).abs() < 1e-6, "frame {t}");
        }
        assert!((32..64).all(|t| out.frame(t)[0] == q));
    }

    #[test]
    fn endpoint_contract() {
        let x = scalar_seq(&(0..10).map(|v| v as f32 * 0.5).collect::<Vec<_>>());
        let p = pose(-3.0);
        for t_p in 1..=5 {
            let out = extrapolate(&x, &p, t_p).unwrap();
            let squeezed = resize_linear(&x, 10 - t_p).unwrap();
            assert_eq!(out.len(), 10);
            assert_eq!(out.frame(0), &p.flatten()[..]);
            assert_eq!(out.frame(t_p), squeezed.frame(0));
            // infilled values stay between the endpoints
            for t in 0..t_p {
                let v = out.frame(t)[0];
                assert!((-3.0..=0.0).contains(&v));
            }
        }
        assert!(extrapolate(&x, &p, 6).is_err());
        let wide = Skeleton::new(vec![[0.0; 3]; 2]).unwrap();
        assert!(extrapolate(&x, &wide, 2).is_err());
    }

    proptest::proptest! {
        #[test]
        fn extrapolate_shape_and_ends(
            raw in proptest::collection::vec(-2.0f32..2.0, 20 * 2 * 3),
            pose in proptest::collection::vec(-2.0f32..2.0, 2 * 3),
            t_p in 0usize..=10,
        ) {
            let x = MotionSequence::new(SequenceMeta::new("p"), 2, raw).unwrap();
            let p = Skeleton::from_flat(&pose).unwrap();
            let y = extrapolate(&x, &p, t_p).unwrap();
            proptest::prop_assert_eq!(y.len(), 20);
            if t_p > 0 {
                proptest::prop_assert_eq!(y.frame(0), &pose[..]);
                let tail = resize_linear(&x, 20 - t_p).unwrap();
                proptest::prop_assert_eq!(&y.data()[t_p * 6..], tail.data());
            } else {
                proptest::prop_assert_eq!(&y, &x);
            }
            proptest::prop_assert!(extrapolate(&x, &p, 11).is_err());
        }
    }
}
