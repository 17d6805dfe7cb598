//! Synthetic complete actions with a known structure.
//!
//! Every sequence starts at one of a few shared rest poses, moves every
//! non-root joint toward a per-class peak pose and, for the rise-peak-return
//! profile, comes back to rest. Trimmed windows of these sequences are genuine
//! partial observations of a known complete action.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CoordinateSpace, Corpus};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::skeleton::{MotionSequence, SequenceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionProfile {
    /// Cosine-eased rise to the peak, hold, cosine-eased return. The three
    /// phase fractions must sum to 1.
    RisePeakReturn { rise: f64, hold: f64, ret: f64 },
    /// Linear, monotone progress from rest to peak.
    Ramp,
}

impl Default for MotionProfile {
    fn default() -> Self {
        MotionProfile::RisePeakReturn {
            rise: 0.35,
            hold: 0.3,
            ret: 0.35,
        }
    }
}

impl MotionProfile {
    /// Blend weight between rest (0) and peak (1) at normalized time `s`.
    fn weight(&self, s: f64) -> f64 {
        match *self {
            MotionProfile::Ramp => s,
            MotionProfile::RisePeakReturn { rise, hold, ret } => {
                if s < rise {
                    0.5 * (1.0 - (PI * s / rise).cos())
                } else if s <= rise + hold {
                    1.0
                } else {
                    0.5 * (1.0 + (PI * ((s - rise - hold) / ret).min(1.0)).cos())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_sequences: usize,
    pub n_classes: usize,
    pub t_full: usize,
    pub joints: usize,
    /// Number of distinct rest poses; sequence `i` uses rest pose
    /// `(i / n_classes) % n_rest_poses`.
    pub n_rest_poses: usize,
    /// Displacement of each non-root joint at the peak, in meters.
    pub amplitude: f64,
    pub profile: MotionProfile,
    /// Per-coordinate Gaussian jitter added to every frame.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_sequences: 100,
            n_classes: 4,
            t_full: 64,
            joints: 25,
            n_rest_poses: 1,
            amplitude: 0.5,
            profile: MotionProfile::default(),
            noise_std: 0.01,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_full < 4 {
            return Err(Error::invalid("t_full must be at least 4"));
        }
        if self.joints == 0 || self.n_classes == 0 || self.n_rest_poses == 0 {
            return Err(Error::invalid(
                "joints, classes and rest poses must be positive",
            ));
        }
        if !self.amplitude.is_finite() || self.amplitude <= 0.0 {
            return Err(Error::invalid("amplitude must be positive"));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::invalid("noise_std must be non-negative"));
        }
        if let MotionProfile::RisePeakReturn { rise, hold, ret } = self.profile {
            let ok =
                rise > 0.0 && hold >= 0.0 && ret > 0.0 && (rise + hold + ret - 1.0).abs() < 1e-9;
            if !ok {
                return Err(Error::invalid(
                    "profile phases must be positive and sum to 1",
                ));
            }
        }
        Ok(())
    }

    /// The rest poses the generator uses, flattened.
    pub fn rest_poses(&self) -> Vec<Vec<f32>> {
        (0..self.n_rest_poses)
            .map(|r| {
                let mut rng = seeded(derive_seed(self.seed, 0x5e57 + r as u64));
                (0..self.joints)
                    .flat_map(|j| {
                        if j == 0 {
                            [0.0; 3]
                        } else {
                            [
                                rng.random_range(-0.3..0.3),
                                rng.random_range(-0.3..0.3),
                                rng.random_range(0.0..1.6),
                            ]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Unit displacement directions per class, flattened; the root never moves.
    fn class_directions(&self, class: usize) -> Vec<f64> {
        let mut rng = seeded(derive_seed(self.seed, 0xc1a55 + class as u64));
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (0..self.joints)
            .flat_map(|j| {
                let v: [f64; 3] = std::array::from_fn(|_| normal.sample(&mut rng));
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-12);
                if j == 0 {
                    [0.0; 3]
                } else {
                    v.map(|c| c / n)
                }
            })
            .collect()
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let rests = spec.rest_poses();
    let dirs: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|c| spec.class_directions(c))
        .collect();
    let noise = Normal::new(0.0, spec.noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = seeded(derive_seed(spec.seed, 0x0015e));
    let t_len = spec.t_full;

    let sequences = (0..spec.n_sequences)
        .map(|i| {
            let class = i % spec.n_classes;
            let rest = &rests[(i / spec.n_classes) % spec.n_rest_poses];
            let dir = &dirs[class];
            let mut data = Vec::with_capacity(t_len * spec.joints * 3);
            for t in 0..t_len {
                let w = spec.profile.weight(t as f64 / (t_len - 1) as f64) * spec.amplitude;
                for (&r, &d) in rest.iter().zip(dir) {
                    let jitter = if spec.noise_std > 0.0 {
                        noise.sample(&mut rng)
                    } else {
                        0.0
                    };
                    data.push((r as f64 + w * d + jitter) as f32);
                }
            }
            let meta = SequenceMeta::new(format!("synth-{i:05}")).with_label(class as i32);
            MotionSequence::from_parts(meta, spec.joints, data)
        })
        .collect();
    Corpus::new(sequences, CoordinateSpace::Normalized)
}
