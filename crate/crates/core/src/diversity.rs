//! Per-frame feature diversity across a corpus.
//!
//! For each frame index `t` the statistic is the root of the mean squared
//! deviation of the frame features from their corpus mean, averaged over
//! samples and feature dimensions (a population standard deviation).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoEncoder;
use crate::error::{Error, Result};
use crate::ingest::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpace {
    Latent,
    RawJoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityCurve {
    pub values: Vec<f64>,
    pub space: FeatureSpace,
}

impl DiversityCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `t,diversity` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,diversity\n");
        for (t, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// Diversity of `features`, laid out as `[sample][t][channel]`.
pub fn diversity_of_features(
    features: &[f64],
    samples: usize,
    t_len: usize,
    channels: usize,
) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::invalid("diversity needs at least two sequences"));
    }
    if features.len() != samples * t_len * channels || channels == 0 {
        return Err(Error::invalid("feature array does not match its shape"));
    }
    let stride = t_len * channels;
    Ok((0..t_len)
        .map(|t| {
            let at = |s: usize, c: usize| features[s * stride + t * channels + c];
            let mut sq = 0.0;
            for c in 0..channels {
                let mean = (0..samples).map(|s| at(s, c)).sum::<f64>() / samples as f64;
                sq += (0..samples).map(|s| (at(s, c) - mean).powi(2)).sum::<f64>();
            }
            (sq / (samples * channels) as f64).sqrt()
        })
        .collect())
}

/// Diversity curve of `corpus`, in the autoencoder's latent space when a model
/// is given and in raw flattened joint coordinates otherwise.
pub fn diversity_curve(corpus: &Corpus, model: Option<&AutoEncoder>) -> Result<DiversityCurve> {
    if corpus.len() < 2 {
        return Err(Error::invalid("diversity needs at least two sequences"));
    }
    let (t_len, joints) = corpus.require_canonical()?;
    match model {
        None => {
            let features: Vec<f64> = corpus
                .sequences
                .iter()
                .flat_map(|s| s.data().iter().map(|&v| v as f64))
                .collect();
            Ok(DiversityCurve {
                values: diversity_of_features(&features, corpus.len(), t_len, 3 * joints)?,
                space: FeatureSpace::RawJoint,
            })
        }
        Some(ae) => {
            if ae.input_dim() != 3 * joints {
                return Err(Error::invalid(format!(
                    "model expects {} inputs, corpus frames have {}",
                    ae.input_dim(),
                    3 * joints
                )));
            }
            let frames: Vec<&[f32]> = corpus.sequences.iter().flat_map(|s| s.frames()).collect();
            let latent: Vec<Vec<f64>> = frames
                .par_iter()
                .map(|f| ae.encode(&f.iter().map(|&v| v as f64).collect::<Vec<_>>()))
                .collect::<Result<_>>()?;
            let features: Vec<f64> = latent.into_iter().flatten().collect();
            Ok(DiversityCurve {
                values: diversity_of_features(&features, corpus.len(), t_len, ae.latent_dim())?,
                space: FeatureSpace::Latent,
            })
        }
    }
}
