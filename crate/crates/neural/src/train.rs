use std::sync::mpsc::sync_channel;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::{NetworkConfig, NetworkParams, OUTPUTS};
use crate::optim::Sgd;
use crate::real::Real;
use crate::tensor::{NeuralError, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub seed: u64,
    pub conv2_activation: bool,
    /// Multiplier from 8-bit pixel values to network input.
    pub pixel_scale: f64,
    /// Start the output bias at the mean training target.
    pub output_bias_from_targets: bool,
    /// Batches assembled ahead of the optimizer.
    pub prefetch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 100,
            epochs: 20,
            hidden: 128,
            seed: 0,
            conv2_activation: false,
            pixel_scale: 0.25 / 255.0,
            output_bias_from_targets: true,
            prefetch: 2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.hidden == 0 {
            return bad("hidden width must be positive".into());
        }
        if !(self.pixel_scale > 0.0 && self.pixel_scale.is_finite()) {
            return bad(format!("pixel scale {} must be positive", self.pixel_scale));
        }
        if self.prefetch == 0 {
            return bad("prefetch depth must be at least 1".into());
        }
        Ok(())
    }

    pub fn network(&self, input: usize) -> NetworkConfig {
        NetworkConfig {
            input,
            hidden: self.hidden,
            conv2_activation: self.conv2_activation,
        }
    }
}

/// Square 8-bit images with eight regression targets each.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub side: usize,
    pub images: &'a [Vec<u8>],
    pub targets: &'a [[f64; OUTPUTS]],
}

impl TrainData<'_> {
    fn check(&self, indices: &[usize]) -> Result<(), NeuralError> {
        if self.images.len() != self.targets.len() {
            return Err(NeuralError::Config("image and target counts differ".into()));
        }
        if indices.is_empty() {
            return Err(NeuralError::Config("no training samples".into()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= self.images.len()) {
            return Err(NeuralError::Config(format!("sample index {i} out of range")));
        }
        Ok(())
    }

    /// Input and target tensors for the given samples.
    pub fn batch<T: Real>(&self, indices: &[usize], pixel_scale: f64) -> Result<(Tensor<T>, Tensor<T>), NeuralError> {
        let s = self.side;
        let mut x = Vec::with_capacity(indices.len() * s * s);
        let mut y = Vec::with_capacity(indices.len() * OUTPUTS);
        for &i in indices {
            let img = &self.images[i];
            if img.len() != s * s {
                return Err(NeuralError::Config(format!("image {i} has {} pixels, expected {}", img.len(), s * s)));
            }
            x.extend(img.iter().map(|&p| T::from_f64(p as f64 * pixel_scale)));
            y.extend(self.targets[i].iter().map(|&t| T::from_f64(t)));
        }
        Ok((
            Tensor::new(vec![indices.len(), 1, s, s], x)?,
            Tensor::new(vec![indices.len(), OUTPUTS], y)?,
        ))
    }
}

/// Runs `consume` over the items of `producer`, which a helper thread
/// computes ahead of time. At most `depth` finished items wait in the
/// queue, and they arrive in production order.
pub fn with_prefetch<I, R>(producer: I, depth: usize, consume: impl FnOnce(&mut dyn Iterator<Item = I::Item>) -> R) -> R
where
    I: Iterator + Send,
    I::Item: Send,
{
    let (tx, rx) = sync_channel(depth);
    std::thread::scope(|scope| {
        scope.spawn(move || {
            for item in producer {
                // the consumer hung up early; stop producing
                if tx.send(item).is_err() {
                    break;
                }
            }
        });
        let result = consume(&mut rx.iter());
        drop(rx);
        result
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sample-weighted mean of the mini-batch losses over the epoch.
    pub mean_loss: f64,
    pub seconds: f64,
}

/// Sample order for one epoch: a seeded shuffle, one stream per epoch.
pub fn epoch_order(indices: &[usize], seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    let mut order = indices.to_vec();
    order.shuffle(&mut rng);
    order
}

/// Trains a fresh network on `indices` with momentum SGD on the MSE loss.
pub fn train<T: Real>(
    cfg: &TrainConfig,
    data: TrainData<'_>,
    indices: &[usize],
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(NetworkParams<T>, Vec<EpochStats>), NeuralError> {
    cfg.validate()?;
    data.check(indices)?;
    let mut params = NetworkParams::<T>::init(cfg.network(data.side), cfg.seed)?;
    if cfg.output_bias_from_targets {
        let n = indices.len() as f64;
        for (j, b) in params.fc2.bias.data_mut().iter_mut().enumerate() {
            *b = T::from_f64(indices.iter().map(|&i| data.targets[i][j]).sum::<f64>() / n);
        }
    }
    let mut sgd = Sgd::new(cfg.learning_rate, cfg.momentum);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let order = epoch_order(indices, cfg.seed, epoch);
        let batches = order.chunks(cfg.batch_size).map(|chunk| (chunk.len(), data.batch::<T>(chunk, cfg.pixel_scale)));
        let total = with_prefetch(batches, cfg.prefetch, |batches| -> Result<f64, NeuralError> {
            let mut total = 0.0;
            for (count, batch) in batches {
                let (x, y) = batch?;
                let (loss, grads) = params.loss_and_gradients(&x, &y)?;
                sgd.step(&mut params, &grads)?;
                total += loss * count as f64;
            }
            Ok(total)
        })?;
        let stats = EpochStats {
            epoch: epoch + 1,
            mean_loss: total / indices.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&stats);
        history.push(stats);
    }
    for (name, t) in params.trainable() {
        if !t.is_finite() {
            return Err(NeuralError::Config(format!("parameter {name} diverged")));
        }
    }
    Ok((params, history))
}

/// Eval-mode predictions for `indices`, in order.
pub fn predict<T: Real>(
    params: &NetworkParams<T>,
    data: TrainData<'_>,
    indices: &[usize],
    batch_size: usize,
    pixel_scale: f64,
) -> Result<Vec<[f64; OUTPUTS]>, NeuralError> {
    data.check(indices)?;
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(batch_size.max(1)) {
        let (x, _) = data.batch::<T>(chunk, pixel_scale)?;
        let y = params.forward_eval(&x)?;
        for row in y.data().chunks(OUTPUTS) {
            let mut r = [0.0; OUTPUTS];
            for (d, s) in r.iter_mut().zip(row) {
                *d = s.as_f64();
            }
            out.push(r);
        }
    }
    Ok(out)
}
