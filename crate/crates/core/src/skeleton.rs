//! Skeleton and motion sequence types, temporal resizing and geometric
//! preprocessing.
//!
//! A [`MotionSequence`] stores its coordinates in one flat buffer laid out as
//! `T x J x 3` (frame-major, then joint, then x/y/z). A single frame is a
//! contiguous slice of `3 * J` values, which is also the flattened form of a
//! [`Skeleton`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_JOINTS: usize = 25;
pub const DEFAULT_LEN: usize = 64;

/// A single pose: `J` joints with finite `(x, y, z)` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f32; 3]>", into = "Vec<[f32; 3]>")]
pub struct Skeleton {
    joints: Vec<[f32; 3]>,
}

impl Skeleton {
    pub fn new(joints: Vec<[f32; 3]>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::invalid("skeleton needs at least one joint"));
        }
        if joints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("skeleton has non-finite coordinates"));
        }
        Ok(Skeleton { joints })
    }

    /// Rebuilds a skeleton from its flattened `3 * J` form.
    pub fn from_flat(flat: &[f32]) -> Result<Self> {
        if flat.is_empty() || !flat.len().is_multiple_of(3) {
            return Err(Error::invalid(format!(
                "flat skeleton length {} is not a positive multiple of 3",
                flat.len()
            )));
        }
        Skeleton::new(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[[f32; 3]] {
        &self.joints
    }

    /// Joint-major flattening: `[x0, y0, z0, x1, y1, z1, ...]`.
    pub fn flatten(&self) -> Vec<f32> {
        self.joints.iter().flatten().copied().collect()
    }
}

impl TryFrom<Vec<[f32; 3]>> for Skeleton {
    type Error = Error;

    fn try_from(joints: Vec<[f32; 3]>) -> Result<Self> {
        Skeleton::new(joints)
    }
}

impl From<Skeleton> for Vec<[f32; 3]> {
    fn from(s: Skeleton) -> Self {
        s.joints
    }
}

pub fn flatten(skel: &Skeleton) -> Vec<f32> {
    skel.flatten()
}

pub fn unflatten(flat: &[f32]) -> Result<Skeleton> {
    Skeleton::from_flat(flat)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub id: String,
    pub label: Option<i32>,
    pub subject: Option<String>,
}

impl SequenceMeta {
    pub fn new(id: impl Into<String>) -> Self {
        SequenceMeta {
            id: id.into(),
            label: None,
            subject: None,
        }
    }

    pub fn with_label(mut self, label: i32) -> Self {
        self.label = Some(label);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub meta: SequenceMeta,
    joints: usize,
    data: Vec<f32>,
}

impl MotionSequence {
    /// Wraps a flat `T x J x 3` buffer. Zero frames are allowed here; the
    /// operations that need frames reject empty sequences themselves.
    pub fn new(meta: SequenceMeta, joints: usize, data: Vec<f32>) -> Result<Self> {
        if joints == 0 {
            return Err(Error::invalid("sequence needs at least one joint"));
        }
        if !data.len().is_multiple_of(3 * joints) {
            return Err(Error::invalid(format!(
                "buffer of {} values is not a whole number of {}-joint frames",
                data.len(),
                joints
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sequence {:?} has non-finite coordinates",
                meta.id
            )));
        }
        Ok(MotionSequence { meta, joints, data })
    }

    pub fn from_frames(meta: SequenceMeta, frames: &[Skeleton]) -> Result<Self> {
        let joints = frames
            .first()
            .map(Skeleton::num_joints)
            .ok_or_else(|| Error::invalid("no frames"))?;
        if frames.iter().any(|f| f.num_joints() != joints) {
            return Err(Error::invalid("frames disagree on joint count"));
        }
        let data = frames.iter().flat_map(|f| f.flatten()).collect();
        Ok(MotionSequence { meta, joints, data })
    }

    /// Internal constructor for buffers already known to be well formed.
    pub(crate) fn from_parts(meta: SequenceMeta, joints: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len() % (3 * joints), 0);
        MotionSequence { meta, joints, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.frame_width()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_joints(&self) -> usize {
        self.joints
    }

    /// Number of values in one flattened frame (`3 * J`).
    pub fn frame_width(&self) -> usize {
        3 * self.joints
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let w = self.frame_width();
        &self.data[t * w..(t + 1) * w]
    }

    pub fn frames(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.frame_width())
    }

    pub fn skeleton(&self, t: usize) -> Skeleton {
        Skeleton {
            joints: self
                .frame(t)
                .chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect(),
        }
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Copy of frames `start..end` with the same metadata.
    pub fn slice(&self, start: usize, end: usize) -> MotionSequence {
        let w = self.frame_width();
        MotionSequence::from_parts(
            self.meta.clone(),
            self.joints,
            self.data[start * w..end * w].to_vec(),
        )
    }

    pub(crate) fn with_data(&self, data: Vec<f32>) -> MotionSequence {
        MotionSequence::from_parts(self.meta.clone(), self.joints, data)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResizeMode {
    /// Per-coordinate linear interpolation over normalized time.
    #[default]
    Linear,
    /// One frame drawn uniformly from each of `T_out` equal bins.
    RandomFrame,
}

/// Linear interpolation of `a` and `b` at fraction `f`, the exact rule used by
/// every linear resize in the crate.
#[inline]
pub(crate) fn lerp(a: f32, b: f32, f: f64) -> f32 {
    (a as f64 + (b as f64 - a as f64) * f) as f32
}

/// Resizes a sequence to `t_out` frames.
///
/// Linear mode maps output frame `i` to source position
/// `i * (T - 1) / (t_out - 1)`. Integer positions copy the source frame
/// unchanged, so the first and last frames are pinned and a same-length
/// resize is the identity. Random-frame mode needs `rng`.
pub fn resize_temporal<R: Rng + ?Sized>(
    seq: &MotionSequence,
    t_out: usize,
    mode: ResizeMode,
    rng: Option<&mut R>,
) -> Result<MotionSequence> {
    match mode {
        ResizeMode::Linear => resize_linear(seq, t_out),
        ResizeMode::RandomFrame => {
            let rng = rng.ok_or_else(|| Error::invalid("random-frame resize needs an RNG"))?;
            resize_random_frame(seq, t_out, rng)
        }
    }
}

pub fn resize_linear(seq: &MotionSequence, t_out: usize) -> Result<MotionSequence> {
    let n = seq.len();
    if n == 0 {
        return Err(Error::invalid("cannot resize an empty sequence"));
    }
    if t_out == 0 {
        return Err(Error::invalid("target length must be positive"));
    }
    let w = seq.frame_width();
    let mut out = Vec::with_capacity(t_out * w);
    for i in 0..t_out {
        let pos = if t_out == 1 {
            0.0
        } else {
            i as f64 * (n - 1) as f64 / (t_out - 1) as f64
        };
        let lo = (pos.floor() as usize).min(n - 1);
        let frac = pos - lo as f64;
        if frac == 0.0 || lo + 1 >= n {
            out.extend_from_slice(seq.frame(lo));
        } else {
            let (a, b) = (seq.frame(lo), seq.frame(lo + 1));
            out.extend(a.iter().zip(b).map(|(&a, &b)| lerp(a, b, frac)));
        }
    }
    Ok(seq.with_data(out))
}

fn resize_random_frame<R: Rng + ?Sized>(
    seq: &MotionSequence,
    t_out: usize,
    rng: &mut R,
) -> Result<MotionSequence> {
    let n = seq.len();
    if n == 0 {
        return Err(Error::invalid("cannot resize an empty sequence"));
    }
    if t_out == 0 {
        return Err(Error::invalid("target length must be positive"));
    }
    let bin = n as f64 / t_out as f64;
    let mut out = Vec::with_capacity(t_out * seq.frame_width());
    for k in 0..t_out {
        let u: f64 = rng.random();
        let idx = (((k as f64 + u) * bin).floor() as usize).min(n - 1);
        out.extend_from_slice(seq.frame(idx));
    }
    Ok(seq.with_data(out))
}

/// Joint indices used to remove trajectory and camera rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub root_joint: usize,
    pub align_axes: bool,
    pub spine_joint: usize,
    pub shoulder_left: usize,
    pub shoulder_right: usize,
}

impl Default for PreprocessSpec {
    /// NTU RGB+D 25-joint layout: spine base, spine-shoulder, left and right
    /// shoulders.
    fn default() -> Self {
        PreprocessSpec {
            root_joint: 0,
            align_axes: true,
            spine_joint: 20,
            shoulder_left: 4,
            shoulder_right: 8,
        }
    }
}

impl PreprocessSpec {
    pub fn validate(&self, joints: usize) -> Result<()> {
        let mut idx = vec![("root", self.root_joint)];
        if self.align_axes {
            idx.extend([
                ("spine", self.spine_joint),
                ("shoulder_left", self.shoulder_left),
                ("shoulder_right", self.shoulder_right),
            ]);
        }
        for (name, j) in idx {
            if j >= joints {
                return Err(Error::invalid(format!(
                    "{name} joint {j} out of range for {joints} joints"
                )));
            }
        }
        Ok(())
    }
}

type Mat3 = [[f64; 3]; 3];

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn joint(frame: &[f32], j: usize) -> [f64; 3] {
    [
        frame[3 * j] as f64,
        frame[3 * j + 1] as f64,
        frame[3 * j + 2] as f64,
    ]
}

/// Rigidly transforms every joint: `p -> rot * (p - origin)`.
fn transform_rigid(seq: &MotionSequence, origin: [f64; 3], rot: &Mat3) -> MotionSequence {
    let data = seq
        .data()
        .chunks_exact(3)
        .flat_map(|c| {
            let p = sub([c[0] as f64, c[1] as f64, c[2] as f64], origin);
            rot.map(|row| dot(row, p) as f32)
        })
        .collect();
    seq.with_data(data)
}

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
const DEGENERATE_EPS: f64 = 1e-9;

/// Removes trajectory (first-frame root to origin) and, with `align_axes`,
/// camera rotation: one rotation from the first frame sends the spine
/// direction (root to spine joint) to `+z` and the shoulder line (left to
/// right shoulder, orthogonalized against the spine) to `+x`.
pub fn preprocess(seq: &MotionSequence, spec: &PreprocessSpec) -> Result<MotionSequence> {
    if seq.is_empty() {
        return Err(Error::invalid("cannot preprocess an empty sequence"));
    }
    spec.validate(seq.num_joints())?;
    let first = seq.frame(0);
    let origin = joint(first, spec.root_joint);
    if !spec.align_axes {
        return Ok(transform_rigid(seq, origin, &IDENTITY));
    }

    let spine = sub(joint(first, spec.spine_joint), origin);
    let spine_len = norm(spine);
    if spine_len < DEGENERATE_EPS {
        return Err(Error::AlignmentDegenerate(format!(
            "zero-length spine vector in {:?}",
            seq.meta.id
        )));
    }
    let z = spine.map(|v| v / spine_len);
    let shoulders = sub(
        joint(first, spec.shoulder_right),
        joint(first, spec.shoulder_left),
    );
    let along = dot(shoulders, z);
    let x_raw = sub(shoulders, z.map(|v| v * along));
    let x_len = norm(x_raw);
    if x_len < DEGENERATE_EPS {
        return Err(Error::AlignmentDegenerate(format!(
            "shoulder line is zero or parallel to the spine in {:?}",
            seq.meta.id
        )));
    }
    let x = x_raw.map(|v| v / x_len);
    let y = cross(z, x);
    Ok(transform_rigid(seq, origin, &[x, y, z]))
}

fn euler_xyz(ax: f64, ay: f64, az: f64) -> Mat3 {
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let (sz, cz) = az.sin_cos();
    // Rz * Ry * Rx
    [
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ]
}

/// Applies one random rotation about the origin to every frame. Angles about
/// x, y and z are drawn uniformly from `[-max, max]` degrees per axis.
pub fn random_rotation<R: Rng + ?Sized>(
    seq: &MotionSequence,
    max_angle_deg: [f64; 3],
    rng: &mut R,
) -> Result<MotionSequence> {
    if max_angle_deg.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(Error::invalid(
            "rotation bounds must be finite and non-negative",
        ));
    }
    let angles = max_angle_deg.map(|b| {
        if b == 0.0 {
            0.0
        } else {
            rng.random_range(-b..=b).to_radians()
        }
    });
    let rot = euler_xyz(angles[0], angles[1], angles[2]);
    Ok(transform_rigid(seq, [0.0; 3], &rot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq_from(frames: Vec<Vec<f32>>, joints: usize) -> MotionSequence {
        MotionSequence::new(SequenceMeta::new("t"), joints, frames.concat()).unwrap()
    }

    fn random_seq(rng: &mut ChaCha8Rng, t: usize, joints: usize) -> MotionSequence {
        let data = (0..t * joints * 3)
            .map(|_| rng.random_range(-1.0f32..1.0))
            .collect();
        MotionSequence::new(SequenceMeta::new("r"), joints, data).unwrap()
    }

    #[test]
    fn flatten_layout_and_inverse() {
        let s = Skeleton::new(vec![[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(flatten(&s), vec![1.0, 2.0, 3.0]);
        let s25 = Skeleton::new((0..25).map(|j| [j as f32, 0.5, -1.0]).collect()).unwrap();
        let flat = flatten(&s25);
        assert_eq!(flat.len(), 75);
        assert_eq!(unflatten(&flat).unwrap(), s25);
    }

    #[test]
    fn skeleton_rejects_nan() {
        assert!(Skeleton::new(vec![[f32::NAN, 0.0, 0.0]]).is_err());
        assert!(Skeleton::from_flat(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn linear_resize_midpoint() {
        let seq = seq_from(vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]], 1);
        let out = resize_linear(&seq, 3).unwrap();
        let xs: Vec<f32> = out.frames().map(|f| f[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_sequence_resizes_to_constant() {
        for n in [1, 5, 100] {
            let seq = seq_from(vec![vec![0.3, -0.2, 1.7]; n], 1);
            let out = resize_linear(&seq, 64).unwrap();
            assert_eq!(out.len(), 64);
            assert!(out.frames().all(|f| f == [0.3, -0.2, 1.7]));
        }
    }

    #[test]
    fn same_length_resize_is_bitwise_identity() {
        let frames = (0..64)
            .map(|t| vec![t as f32 * 0.37, -(t as f32), 0.1])
            .collect();
        let seq = seq_from(frames, 1);
        assert_eq!(resize_linear(&seq, 64).unwrap().data(), seq.data());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let seq = random_seq(&mut rng, 17, 4);
        assert_eq!(resize_linear(&seq, 17).unwrap().data(), seq.data());
    }

    #[test]
    fn linear_resize_pins_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = random_seq(&mut rng, 23, 3);
        for t_out in [2, 7, 64, 200] {
            let out = resize_linear(&seq, t_out).unwrap();
            assert_eq!(out.frame(0), seq.frame(0));
            assert_eq!(out.frame(t_out - 1), seq.frame(22));
        }
    }

    #[test]
    fn empty_sequence_is_rejected() {
        let seq = MotionSequence::new(SequenceMeta::new("e"), 2, vec![]).unwrap();
        assert!(matches!(
            resize_linear(&seq, 4),
            Err(Error::InvalidInput(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = resize_temporal(&seq, 4, ResizeMode::RandomFrame, Some(&mut rng));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn random_frame_picks_one_frame_per_bin() {
        let frames = (0..40).map(|t| vec![t as f32, 0.0, 0.0]).collect();
        let seq = seq_from(frames, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = resize_temporal(&seq, 10, ResizeMode::RandomFrame, Some(&mut rng)).unwrap();
        for (k, f) in out.frames().enumerate() {
            let src = f[0] as usize;
            assert!((4 * k..4 * k + 4).contains(&src), "bin {k} got frame {src}");
        }
        // upsampling still yields valid frames in order
        let out = resize_temporal(&seq, 100, ResizeMode::RandomFrame, Some(&mut rng)).unwrap();
        let idx: Vec<f32> = out.frames().map(|f| f[0]).collect();
        assert!(idx.windows(2).all(|w| w[0] <= w[1]));
    }

    fn upright_sequence() -> MotionSequence {
        // 25-joint rig already centred with spine on +z and shoulders on x.
        let mut frame = vec![0.0f32; 75];
        let set = |f: &mut Vec<f32>, j: usize, p: [f32; 3]| f[3 * j..3 * j + 3].copy_from_slice(&p);
        set(&mut frame, 20, [0.0, 0.0, 0.5]);
        set(&mut frame, 4, [-0.2, 0.0, 0.5]);
        set(&mut frame, 8, [0.2, 0.0, 0.5]);
        set(&mut frame, 3, [0.0, 0.05, 0.7]);
        let mut second = frame.clone();
        second[3 * 3] += 0.1;
        seq_from(vec![frame, second], 25)
    }

    fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f32::max)
    }

    #[test]
    fn aligned_sequence_is_a_fixed_point() {
        let seq = upright_sequence();
        let out = preprocess(&seq, &PreprocessSpec::default()).unwrap();
        assert!(max_abs_diff(out.data(), seq.data()) < 1e-6);
    }

    #[test]
    fn preprocess_removes_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seq = random_seq(&mut rng, 8, 25);
        let moved = seq.with_data(
            seq.data()
                .chunks_exact(3)
                .flat_map(|c| [c[0] + 1.0, c[1] + 2.0, c[2] + 3.0])
                .collect(),
        );
        let spec = PreprocessSpec::default();
        let a = preprocess(&seq, &spec).unwrap();
        let b = preprocess(&moved, &spec).unwrap();
        assert!(max_abs_diff(a.data(), b.data()) < 1e-5);
    }

    #[test]
    fn preprocess_removes_rotation_about_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = random_seq(&mut rng, 8, 25);
        let rotated = seq.with_data(
            seq.data()
                .chunks_exact(3)
                .flat_map(|c| [-c[1], c[0], c[2]])
                .collect(),
        );
        let spec = PreprocessSpec::default();
        let a = preprocess(&seq, &spec).unwrap();
        let b = preprocess(&rotated, &spec).unwrap();
        assert!(max_abs_diff(a.data(), b.data()) < 1e-5);
    }

    #[test]
    fn preprocess_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seq = random_seq(&mut rng, 6, 25);
        let spec = PreprocessSpec::default();
        let once = preprocess(&seq, &spec).unwrap();
        let twice = preprocess(&once, &spec).unwrap();
        assert!(max_abs_diff(once.data(), twice.data()) < 1e-6);
    }

    #[test]
    fn degenerate_first_frame() {
        let seq = seq_from(vec![vec![0.0; 75]], 25);
        let err = preprocess(&seq, &PreprocessSpec::default()).unwrap_err();
        assert!(matches!(err, Error::AlignmentDegenerate(_)));
        let spec = PreprocessSpec {
            align_axes: false,
            ..Default::default()
        };
        assert!(preprocess(&seq, &spec).is_ok());
    }

    #[test]
    fn preprocess_checks_joint_indices() {
        let seq = seq_from(vec![vec![0.0; 9]], 3);
        assert!(matches!(
            preprocess(&seq, &PreprocessSpec::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn zero_rotation_is_identity_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let seq = random_seq(&mut rng, 5, 4);
        let out = random_rotation(&seq, [0.0; 3], &mut rng).unwrap();
        assert_eq!(out.data(), seq.data());

        let a = random_rotation(&seq, [30.0; 3], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = random_rotation(&seq, [30.0; 3], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(random_rotation(&seq, [-1.0, 0.0, 0.0], &mut rng).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist(f: &[f32], i: usize, j: usize) -> f64 {
            (0..3)
                .map(|c| (f[3 * i + c] as f64 - f[3 * j + c] as f64).powi(2))
                .sum::<f64>()
                .sqrt()
        }

        proptest! {
            #[test]
            fn rotation_is_an_isometry(seed in any::<u64>(), bx in 0.0f64..180.0, by in 0.0f64..180.0, bz in 0.0f64..180.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let seq = random_seq(&mut rng, 4, 6);
                let out = random_rotation(&seq, [bx, by, bz], &mut rng).unwrap();
                for t in 0..seq.len() {
                    for i in 0..6 {
                        for j in i + 1..6 {
                            let d0 = dist(seq.frame(t), i, j);
                            let d1 = dist(out.frame(t), i, j);
                            prop_assert!((d0 - d1).abs() < 1e-6, "{d0} vs {d1}");
                        }
                    }
                }
            }

            #[test]
            fn linear_resize_length_and_bounds(seed in any::<u64>(), n in 1usize..40, t_out in 1usize..100) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let seq = random_seq(&mut rng, n, 2);
                let out = resize_linear(&seq, t_out).unwrap();
                prop_assert_eq!(out.len(), t_out);
                prop_assert!(out.data().iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }
}
