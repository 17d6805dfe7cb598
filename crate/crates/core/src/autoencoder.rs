//! Small fully-connected pose autoencoder with hand-written backpropagation.
//!
//! The default network maps a flattened `3J` pose through layers of width
//! 128, 64, 32, 64, 128 and back to `3J`, with a rectifier after every layer
//! but the last. The 32-wide output of the third layer is the latent code.
//! Training minimizes the squared L2 reconstruction error, averaged over the
//! mini-batch, with momentum SGD.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::rng::seeded;

pub const DEFAULT_WIDTHS: [usize; 5] = [128, 64, 32, 64, 128];
pub const DEFAULT_LATENT_LAYER: usize = 2;

/// Affine layer `y = W x + b` with `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn he_uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| rng.random_range(-bound..bound))
                .collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()),
        );
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoEncoder {
    layers: Vec<Dense>,
    latent_layer: usize,
}

impl AutoEncoder {
    /// The default 6-layer network for `input_dim`-dimensional poses.
    pub fn new(input_dim: usize, seed: u64) -> Result<Self> {
        let mut widths = DEFAULT_WIDTHS.to_vec();
        widths.push(input_dim);
        AutoEncoder::with_widths(input_dim, &widths, DEFAULT_LATENT_LAYER, seed)
    }

    /// A network whose layer `i` outputs `widths[i]` values. The last width
    /// must equal `input_dim`.
    pub fn with_widths(
        input_dim: usize,
        widths: &[usize],
        latent_layer: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::check_shape(input_dim, widths, latent_layer)?;
        let mut rng = seeded(seed);
        let mut prev = input_dim;
        let layers = widths
            .iter()
            .map(|&w| {
                let l = Dense::he_uniform(prev, w, &mut rng);
                prev = w;
                l
            })
            .collect();
        Ok(AutoEncoder {
            layers,
            latent_layer,
        })
    }

    /// All weights and biases zero.
    pub fn zeros(input_dim: usize) -> Self {
        let mut prev = input_dim;
        let layers = DEFAULT_WIDTHS
            .iter()
            .chain(std::iter::once(&input_dim))
            .map(|&w| {
                let l = Dense::zeros(prev, w);
                prev = w;
                l
            })
            .collect();
        AutoEncoder {
            layers,
            latent_layer: DEFAULT_LATENT_LAYER,
        }
    }

    fn check_shape(input_dim: usize, widths: &[usize], latent_layer: usize) -> Result<()> {
        if input_dim == 0 || widths.is_empty() || widths.contains(&0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if *widths.last().unwrap() != input_dim {
            return Err(Error::invalid(
                "last layer must reconstruct the input dimension",
            ));
        }
        if latent_layer >= widths.len() {
            return Err(Error::invalid("latent layer index out of range"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[self.latent_layer].outputs
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    fn is_last(&self, i: usize) -> bool {
        i + 1 == self.layers.len()
    }

    /// Post-activation outputs of every layer.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &acts[i - 1] };
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(input, &mut out);
            if !self.is_last(i) {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Returns `(reconstruction, latent)`.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        let mut acts = self.activations(x);
        let latent = acts[self.latent_layer].clone();
        Ok((acts.pop().expect("at least one layer"), latent))
    }

    /// Latent code only; skips the decoder.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers[..=self.latent_layer].iter().enumerate() {
            layer.forward(&cur, &mut next);
            if !self.is_last(i) {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::invalid("parameter vector has the wrong length"));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|p| *p = *it.next().unwrap());
        }
        Ok(())
    }

    /// Mean over the batch (`B x D`, row-major) of the squared reconstruction
    /// error.
    pub fn loss(&self, batch: &[f64]) -> Result<f64> {
        let d = self.input_dim();
        let n = self.check_batch(batch)?;
        let mut total = 0.0;
        for x in batch.chunks_exact(d) {
            let recon = self.activations(x).pop().unwrap();
            total += recon
                .iter()
                .zip(x)
                .map(|(r, v)| (r - v) * (r - v))
                .sum::<f64>();
        }
        Ok(total / n as f64)
    }

    fn check_batch(&self, batch: &[f64]) -> Result<usize> {
        let d = self.input_dim();
        if batch.is_empty() || !batch.len().is_multiple_of(d) {
            return Err(Error::invalid("batch is not a non-empty B x D matrix"));
        }
        Ok(batch.len() / d)
    }

    /// Loss and its gradient with respect to [`AutoEncoder::params`].
    pub fn loss_and_gradient(&self, batch: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = self.input_dim();
        let n = self.check_batch(batch)?;
        let scale = 1.0 / n as f64;
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let mut total = 0.0;

        for x in batch.chunks_exact(d) {
            let acts = self.activations(x);
            let recon = acts.last().unwrap();
            // dL/d(output of the last layer)
            let mut delta: Vec<f64> = recon
                .iter()
                .zip(x)
                .map(|(r, v)| {
                    total += (r - v) * (r - v);
                    2.0 * (r - v) * scale
                })
                .collect();
            for i in (0..self.layers.len()).rev() {
                let layer = &self.layers[i];
                if !self.is_last(i) {
                    // rectifier: pass gradient only where the unit was active
                    for (g, &a) in delta.iter_mut().zip(&acts[i]) {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
                let input = if i == 0 { x } else { &acts[i - 1] };
                let g = &mut grads[i];
                for (o, &dv) in delta.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    g.bias[o] += dv;
                    for (gw, &inp) in g.weights[o * layer.inputs..(o + 1) * layer.inputs]
                        .iter_mut()
                        .zip(input)
                    {
                        *gw += dv * inp;
                    }
                }
                if i > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for (o, &dv) in delta.iter().enumerate() {
                        if dv == 0.0 {
                            continue;
                        }
                        for (p, &w) in prev
                            .iter_mut()
                            .zip(&layer.weights[o * layer.inputs..(o + 1) * layer.inputs])
                        {
                            *p += dv * w;
                        }
                    }
                    delta = prev;
                }
            }
        }
        let flat = grads
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect();
        Ok((total * scale, flat))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            lr: 0.01,
            momentum: 0.9,
            batch_size: 256,
            seed: 0,
        }
    }
}

/// Every frame of every sequence as a row of a `N x 3J` matrix.
pub fn corpus_frames(corpus: &Corpus) -> Vec<f64> {
    corpus
        .sequences
        .iter()
        .flat_map(|s| s.data().iter().map(|&v| v as f64))
        .collect()
}

/// Trains a default-shaped autoencoder on all frames of `corpus`. Returns the
/// model and the mean training loss of each epoch.
pub fn ae_train(corpus: &Corpus, cfg: &TrainConfig) -> Result<(AutoEncoder, Vec<f64>)> {
    let joints = corpus
        .joints()
        .ok_or_else(|| Error::invalid("cannot train on an empty corpus"))?;
    let model = AutoEncoder::new(3 * joints, cfg.seed)?;
    train_model(model, &corpus_frames(corpus), cfg)
}

/// Momentum SGD on the rows of `frames`, shuffled each epoch.
pub fn train_model(
    mut model: AutoEncoder,
    frames: &[f64],
    cfg: &TrainConfig,
) -> Result<(AutoEncoder, Vec<f64>)> {
    let d = model.input_dim();
    let n = model.check_batch(frames)?;
    if cfg.batch_size == 0
        || cfg.lr.is_nan()
        || cfg.lr <= 0.0
        || !(0.0..1.0).contains(&cfg.momentum)
    {
        return Err(Error::invalid(
            "batch size and lr must be positive, momentum in [0, 1)",
        ));
    }
    let mut rng = seeded(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut params = model.params();
    let mut velocity = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::with_capacity(cfg.batch_size * d);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            for &i in chunk {
                batch.extend_from_slice(&frames[i * d..(i + 1) * d]);
            }
            let (loss, grad) = model.loss_and_gradient(&batch)?;
            epoch_loss += loss * chunk.len() as f64;
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - cfg.lr * g;
                *p += *v;
            }
            model.set_params(&params)?;
        }
        history.push(epoch_loss / n as f64);
    }
    Ok((model, history))
}

/// Mean squared reconstruction error per coordinate over the rows of `frames`.
pub fn reconstruction_mse(model: &AutoEncoder, frames: &[f64]) -> Result<f64> {
    Ok(model.loss(frames)? / model.input_dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CoordinateSpace, Corpus};
    use crate::skeleton::{MotionSequence, SequenceMeta};

    #[test]
    fn default_shape() {
        let m = AutoEncoder::new(75, 0).unwrap();
        let outs: Vec<usize> = m.layers().iter().map(|l| l.outputs).collect();
        assert_eq!(outs, vec![128, 64, 32, 64, 128, 75]);
        assert_eq!(m.latent_dim(), 32);
        let (r, z) = m.forward(&[0.3; 75]).unwrap();
        assert_eq!((r.len(), z.len()), (75, 32));
        assert!(r.iter().chain(&z).all(|v| v.is_finite()));
        assert_eq!(m.encode(&[0.3; 75]).unwrap(), z);
        assert!(m.forward(&[0.0; 74]).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let m = AutoEncoder::zeros(6);
        let (r, z) = m.forward(&[1.0, -2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!(r.iter().chain(&z).all(|&v| v == 0.0));
    }

    #[test]
    fn hand_set_two_layer_net() {
        // 3 -> 2 (relu) -> 3
        let mut m = AutoEncoder::with_widths(3, &[2, 3], 0, 0).unwrap();
        let l = m.layers_mut();
        l[0].weights = vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0];
        l[0].bias = vec![0.5, 0.0];
        l[1].weights = vec![2.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        l[1].bias = vec![0.0, 0.0, -1.0];
        // hidden = relu([1 + 0.5, -2]) = [1.5, 0]
        let (r, z) = m.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(z, vec![1.5, 0.0]);
        assert_eq!(r, vec![3.0, 0.0, 0.5]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(21);
        let mut m = AutoEncoder::with_widths(4, &[5, 3, 5, 4], 1, 7).unwrap();
        // random biases too, so no unit sits exactly on the rectifier kink
        let p: Vec<f64> = (0..m.num_params())
            .map(|_| rng.random_range(-0.8..0.8))
            .collect();
        m.set_params(&p).unwrap();
        let batch: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = m.loss_and_gradient(&batch).unwrap();
        let p0 = m.params();
        let h = 1e-5;
        let mut probe = m.clone();
        for k in 0..p0.len() {
            let mut p = p0.clone();
            p[k] += h;
            probe.set_params(&p).unwrap();
            let up = probe.loss(&batch).unwrap();
            p[k] -= 2.0 * h;
            probe.set_params(&p).unwrap();
            let down = probe.loss(&batch).unwrap();
            let numeric = (up - down) / (2.0 * h);
            let denom = (grad[k].abs() + numeric.abs()).max(1e-8);
            assert!(
                (grad[k] - numeric).abs() / denom < 1e-4,
                "param {k}: {} vs {numeric}",
                grad[k]
            );
        }
    }

    #[test]
    fn learns_a_repeated_pose() {
        let pose: Vec<f32> = (0..75).map(|i| ((i * 7) % 11) as f32 * 0.1 - 0.5).collect();
        let seqs = (0..20)
            .map(|k| {
                let data = pose.iter().copied().cycle().take(75 * 64).collect();
                MotionSequence::new(SequenceMeta::new(format!("p{k}")), 25, data).unwrap()
            })
            .collect();
        let corpus = Corpus::new(seqs, CoordinateSpace::Normalized).unwrap();
        let (model, history) = ae_train(&corpus, &TrainConfig::default()).unwrap();
        let mse = reconstruction_mse(&model, &corpus_frames(&corpus)).unwrap();
        assert!(mse < 1e-3, "mse {mse}, history {history:?}");
        assert!(history.last().unwrap() < history.first().unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let frames: Vec<f64> = (0..40 * 6).map(|i| ((i % 13) as f64 - 6.0) * 0.1).collect();
        let make = || AutoEncoder::with_widths(6, &[8, 4, 8, 6], 1, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            ..Default::default()
        };
        let (a, ha) = train_model(make(), &frames, &cfg).unwrap();
        let (b, hb) = train_model(make(), &frames, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(ae_train(&Corpus::empty(), &TrainConfig::default()).is_err());
    }
}
