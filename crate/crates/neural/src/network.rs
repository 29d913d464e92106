//! The regressor: conv 5×5 (8) → ReLU → batch norm → pool → conv 5×5 (16)
//! → pool → flatten → dense (hidden) → ReLU → dense (8).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ops::{
    batchnorm_backward, batchnorm_eval, batchnorm_train, conv2d, conv2d_backward, linear, linear_backward, maxpool2,
    maxpool2_backward, mse_loss, relu, relu_backward, BatchNorm, BatchNormCache,
};
use crate::real::Real;
use crate::tensor::{shape_err, NeuralError, Tensor};

pub const KERNEL: usize = 5;
pub const CONV1_CHANNELS: usize = 8;
pub const CONV2_CHANNELS: usize = 16;
pub const OUTPUTS: usize = 8;
/// Flatten width for 200×200 inputs: 16·47·47.
pub const FLATTEN_200: usize = 35344;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Side of the square single-channel input.
    pub input: usize,
    pub hidden: usize,
    /// Insert ReLU and batch norm after the second convolution too.
    pub conv2_activation: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            input: 200,
            hidden: 128,
            conv2_activation: false,
        }
    }
}

/// Spatial side after each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeChain {
    pub input: usize,
    pub conv1: usize,
    pub pool1: usize,
    pub conv2: usize,
    pub pool2: usize,
    pub flatten: usize,
}

impl ShapeChain {
    pub fn new(input: usize) -> Result<Self, NeuralError> {
        let conv = |s: usize, stage: &str| {
            s.checked_sub(KERNEL - 1)
                .filter(|&v| v > 0)
                .ok_or_else(|| NeuralError::Config(format!("input {input} too small for {stage}")))
        };
        let conv1 = conv(input, "conv1")?;
        let pool1 = conv1 / 2;
        let conv2 = conv(pool1, "conv2")?;
        let pool2 = conv2 / 2;
        if pool2 == 0 {
            return Err(NeuralError::Config(format!("input {input} pools away to nothing")));
        }
        let chain = ShapeChain {
            input,
            conv1,
            pool1,
            conv2,
            pool2,
            flatten: CONV2_CHANNELS * pool2 * pool2,
        };
        if input == 200 {
            assert_eq!(
                [chain.conv1, chain.pool1, chain.conv2, chain.pool2, chain.flatten],
                [196, 98, 94, 47, FLATTEN_200],
                "shape chain for 200×200 input"
            );
        }
        Ok(chain)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> Layer<T> {
    /// Weights and biases uniform in ±1/√fan_in.
    fn uniform(shape: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let fan_in: usize = shape[1..].iter().product();
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut draw = |n: usize| -> Vec<T> { (0..n).map(|_| T::from_f64(rng.gen_range(-bound..bound))).collect() };
        let weight = Tensor::new(shape.to_vec(), draw(shape.iter().product())).expect("shape");
        let bias = Tensor::new(vec![shape[0]], draw(shape[0])).expect("shape");
        Layer { weight, bias }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub config: NetworkConfig,
    pub chain: ShapeChain,
    pub conv1: Layer<T>,
    pub bn1: BatchNorm<T>,
    pub conv2: Layer<T>,
    pub bn2: Option<BatchNorm<T>>,
    pub fc1: Layer<T>,
    pub fc2: Layer<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Activations kept from a train-mode forward pass.
pub struct ForwardCache<T> {
    input: Tensor<T>,
    conv1: Tensor<T>,
    bn1: BatchNormCache<T>,
    pool1_shape: Vec<usize>,
    pool1_arg: Vec<u32>,
    pool1: Tensor<T>,
    conv2: Option<Tensor<T>>,
    bn2: Option<BatchNormCache<T>>,
    pool2_shape: Vec<usize>,
    pool2_arg: Vec<u32>,
    flat: Tensor<T>,
    hidden_pre: Tensor<T>,
    hidden: Tensor<T>,
}

/// Parameter gradients, in [`NetworkParams::trainable`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub named: Vec<(&'static str, Tensor<T>)>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.named.iter().find(|(n, _)| *n == name).map(|(_, t)| t)
    }

    pub fn is_finite(&self) -> bool {
        self.named.iter().all(|(_, t)| t.is_finite())
    }
}

impl<T: Real> NetworkParams<T> {
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self, NeuralError> {
        if config.hidden == 0 {
            return Err(NeuralError::Config("hidden width must be positive".into()));
        }
        let chain = ShapeChain::new(config.input)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv1 = Layer::uniform(&[CONV1_CHANNELS, 1, KERNEL, KERNEL], &mut rng);
        let conv2 = Layer::uniform(&[CONV2_CHANNELS, CONV1_CHANNELS, KERNEL, KERNEL], &mut rng);
        let fc1 = Layer::uniform(&[config.hidden, chain.flatten], &mut rng);
        let fc2 = Layer::uniform(&[OUTPUTS, config.hidden], &mut rng);
        Ok(NetworkParams {
            bn2: config.conv2_activation.then(|| BatchNorm::new(CONV2_CHANNELS)),
            config,
            chain,
            conv1,
            bn1: BatchNorm::new(CONV1_CHANNELS),
            conv2,
            fc1,
            fc2,
        })
    }

    pub fn trainable(&self) -> Vec<(&'static str, &Tensor<T>)> {
        let mut v = vec![
            ("conv1.weight", &self.conv1.weight),
            ("conv1.bias", &self.conv1.bias),
            ("bn1.gamma", &self.bn1.gamma),
            ("bn1.beta", &self.bn1.beta),
            ("conv2.weight", &self.conv2.weight),
            ("conv2.bias", &self.conv2.bias),
        ];
        if let Some(bn2) = &self.bn2 {
            v.push(("bn2.gamma", &bn2.gamma));
            v.push(("bn2.beta", &bn2.beta));
        }
        v.extend([
            ("fc1.weight", &self.fc1.weight),
            ("fc1.bias", &self.fc1.bias),
            ("fc2.weight", &self.fc2.weight),
            ("fc2.bias", &self.fc2.bias),
        ]);
        v
    }

    pub fn trainable_mut(&mut self) -> Vec<(&'static str, &mut Tensor<T>)> {
        let mut v = vec![
            ("conv1.weight", &mut self.conv1.weight),
            ("conv1.bias", &mut self.conv1.bias),
            ("bn1.gamma", &mut self.bn1.gamma),
            ("bn1.beta", &mut self.bn1.beta),
            ("conv2.weight", &mut self.conv2.weight),
            ("conv2.bias", &mut self.conv2.bias),
        ];
        if let Some(bn2) = &mut self.bn2 {
            v.push(("bn2.gamma", &mut bn2.gamma));
            v.push(("bn2.beta", &mut bn2.beta));
        }
        v.extend([
            ("fc1.weight", &mut self.fc1.weight),
            ("fc1.bias", &mut self.fc1.bias),
            ("fc2.weight", &mut self.fc2.weight),
            ("fc2.bias", &mut self.fc2.bias),
        ]);
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.trainable().iter().map(|(_, t)| t.len()).sum()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<usize, NeuralError> {
        let [b, c, h, w] = x.dims4("forward")?;
        let s = self.config.input;
        if c != 1 || h != s || w != s || b == 0 {
            return Err(shape_err("forward", format!("input {:?}, expected [B, 1, {s}, {s}]", x.shape())));
        }
        Ok(b)
    }

    /// Inference with running batch-norm statistics.
    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>, NeuralError> {
        let b = self.check_input(x)?;
        let a = conv2d(x, &self.conv1.weight, &self.conv1.bias)?;
        let a = batchnorm_eval(&relu(&a), &self.bn1)?;
        let (a, _) = maxpool2(&a)?;
        let mut a = conv2d(&a, &self.conv2.weight, &self.conv2.bias)?;
        if let Some(bn2) = &self.bn2 {
            a = batchnorm_eval(&relu(&a), bn2)?;
        }
        let (a, _) = maxpool2(&a)?;
        let flat = a.reshape(&[b, self.chain.flatten])?;
        let h = relu(&linear(&flat, &self.fc1.weight, &self.fc1.bias)?);
        let out = linear(&h, &self.fc2.weight, &self.fc2.bias)?;
        out.check_finite("forward")?;
        Ok(out)
    }

    /// Training pass: batch statistics, running-stat update, cached activations.
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, ForwardCache<T>), NeuralError> {
        let b = self.check_input(x)?;
        let conv1 = conv2d(x, &self.conv1.weight, &self.conv1.bias)?;
        let (a, bn1) = batchnorm_train(&relu(&conv1), &mut self.bn1)?;
        let pool1_shape = a.shape().to_vec();
        let (pool1, pool1_arg) = maxpool2(&a)?;
        drop(a);
        let mut a = conv2d(&pool1, &self.conv2.weight, &self.conv2.bias)?;
        let (mut conv2, mut bn2_cache) = (None, None);
        if let Some(bn2) = &mut self.bn2 {
            let (y, cache) = batchnorm_train(&relu(&a), bn2)?;
            conv2 = Some(a);
            bn2_cache = Some(cache);
            a = y;
        }
        let pool2_shape = a.shape().to_vec();
        let (a, pool2_arg) = maxpool2(&a)?;
        let flat = a.reshape(&[b, self.chain.flatten])?;
        let hidden_pre = linear(&flat, &self.fc1.weight, &self.fc1.bias)?;
        let hidden = relu(&hidden_pre);
        let out = linear(&hidden, &self.fc2.weight, &self.fc2.bias)?;
        out.check_finite("forward")?;
        let cache = ForwardCache {
            input: x.clone(),
            conv1,
            bn1,
            pool1_shape,
            pool1_arg,
            pool1,
            conv2,
            bn2: bn2_cache,
            pool2_shape,
            pool2_arg,
            flat,
            hidden_pre,
            hidden,
        };
        Ok((out, cache))
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NeuralError> {
        match mode {
            Mode::Train => Ok(self.forward_train(x)?.0),
            Mode::Eval => self.forward_eval(x),
        }
    }

    /// Backpropagates `d_out` (gradient of the loss w.r.t. the output).
    pub fn backward(&self, cache: &ForwardCache<T>, d_out: &Tensor<T>) -> Result<Gradients<T>, NeuralError> {
        let fc2 = linear_backward(&cache.hidden, &self.fc2.weight, d_out)?;
        let dh = relu_backward(&cache.hidden_pre, &fc2.input)?;
        let fc1 = linear_backward(&cache.flat, &self.fc1.weight, &dh)?;
        let d = maxpool2_backward(&cache.pool2_shape, &cache.pool2_arg, &fc1.input)?;
        let mut bn2_grads = None;
        let d = match (&self.bn2, &cache.bn2, &cache.conv2) {
            (Some(bn2), Some(bc), Some(pre)) => {
                let g = batchnorm_backward(bc, &bn2.gamma, &d)?;
                let d = relu_backward(pre, &g.input)?;
                bn2_grads = Some((g.gamma, g.beta));
                d
            }
            _ => d,
        };
        let conv2 = conv2d_backward(&cache.pool1, &self.conv2.weight, &d, true)?;
        let d = maxpool2_backward(&cache.pool1_shape, &cache.pool1_arg, &conv2.input.expect("requested"))?;
        let bn1 = batchnorm_backward(&cache.bn1, &self.bn1.gamma, &d)?;
        let d = relu_backward(&cache.conv1, &bn1.input)?;
        let conv1 = conv2d_backward(&cache.input, &self.conv1.weight, &d, false)?;

        let mut named = vec![
            ("conv1.weight", conv1.kernels),
            ("conv1.bias", conv1.bias),
            ("bn1.gamma", bn1.gamma),
            ("bn1.beta", bn1.beta),
            ("conv2.weight", conv2.kernels),
            ("conv2.bias", conv2.bias),
        ];
        if let Some((g, b)) = bn2_grads {
            named.push(("bn2.gamma", g));
            named.push(("bn2.beta", b));
        }
        named.extend([
            ("fc1.weight", fc1.weight),
            ("fc1.bias", fc1.bias),
            ("fc2.weight", fc2.weight),
            ("fc2.bias", fc2.bias),
        ]);
        let grads = Gradients { named };
        if !grads.is_finite() {
            return Err(NeuralError::NonFinite { stage: "backward" });
        }
        Ok(grads)
    }

    /// Train-mode forward, MSE loss and backward in one call.
    pub fn loss_and_gradients(&mut self, x: &Tensor<T>, targets: &Tensor<T>) -> Result<(f64, Gradients<T>), NeuralError> {
        let (out, cache) = self.forward_train(x)?;
        let (loss, d_out) = mse_loss(&out, targets)?;
        if !loss.is_finite() {
            return Err(NeuralError::NonFinite { stage: "loss" });
        }
        Ok((loss, self.backward(&cache, &d_out)?))
    }

    /// Converts 8-bit pixels to a `[B, 1, S, S]` input tensor.
    pub fn input_from_pixels(&self, images: &[&[u8]], scale: f64) -> Result<Tensor<T>, NeuralError> {
        let s = self.config.input;
        let mut data = Vec::with_capacity(images.len() * s * s);
        for img in images {
            if img.len() != s * s {
                return Err(shape_err("input_from_pixels", format!("image has {} pixels, expected {}", img.len(), s * s)));
            }
            data.extend(img.iter().map(|&p| T::from_f64(p as f64 * scale)));
        }
        Tensor::new(vec![images.len(), 1, s, s], data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_for_full_input() {
        let c = ShapeChain::new(200).unwrap();
        assert_eq!((c.conv1, c.pool1, c.conv2, c.pool2, c.flatten), (196, 98, 94, 47, 35344));
        let p = NetworkParams::<f32>::init(NetworkConfig::default(), 0).unwrap();
        assert_eq!(p.fc1.weight.shape(), &[128, 35344]);
    }

    #[test]
    fn chain_for_reduced_inputs() {
        let c = ShapeChain::new(16).unwrap();
        assert_eq!((c.conv1, c.pool1, c.conv2, c.pool2, c.flatten), (12, 6, 2, 1, 16));
        // 12 → 8 → 4, too small for the second 5×5 kernel
        assert!(ShapeChain::new(12).is_err());
        assert!(ShapeChain::new(4).is_err());
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let p = NetworkParams::<f64>::init(NetworkConfig { input: 16, hidden: 6, conv2_activation: false }, 3).unwrap();
        for (name, t) in p.trainable() {
            if name.starts_with("bn") {
                continue;
            }
            let fan_in = match name {
                "conv1.weight" | "conv1.bias" => 25,
                "conv2.weight" | "conv2.bias" => 200,
                "fc1.weight" | "fc1.bias" => 16,
                _ => 6,
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            assert!(t.data().iter().all(|v| v.abs() <= bound), "{name}");
        }
    }

    #[test]
    fn output_has_eight_columns() {
        let mut p = NetworkParams::<f32>::init(NetworkConfig { input: 24, hidden: 5, conv2_activation: true }, 1).unwrap();
        let x = Tensor::filled(&[3, 1, 24, 24], 0.5);
        assert_eq!(p.forward(&x, Mode::Train).unwrap().shape(), &[3, 8]);
        assert_eq!(p.forward(&x, Mode::Eval).unwrap().shape(), &[3, 8]);
        let wrong = Tensor::filled(&[3, 1, 20, 24], 0.5);
        assert!(matches!(p.forward_eval(&wrong), Err(NeuralError::Shape { .. })));
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let mut p = NetworkParams::<f64>::init(NetworkConfig { input: 16, hidden: 4, conv2_activation: false }, 1).unwrap();
        for (_, t) in p.trainable_mut() {
            t.data_mut().fill(0.0);
        }
        let x = Tensor::filled(&[2, 1, 16, 16], 0.7);
        assert!(p.forward(&x, Mode::Train).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eval_needs_a_training_pass_first() {
        let p = NetworkParams::<f32>::init(NetworkConfig { input: 16, hidden: 4, conv2_activation: false }, 1).unwrap();
        let x = Tensor::filled(&[1, 1, 16, 16], 0.1);
        assert_eq!(p.forward_eval(&x), Err(NeuralError::BatchNormUninitialized));
    }

    #[test]
    fn fixed_seed_forward_is_bit_identical() {
        let cfg = NetworkConfig { input: 32, hidden: 8, conv2_activation: false };
        let x = Tensor::<f32>::from_f64(&[2, 1, 32, 32], &(0..2048).map(|i| ((i * 37) % 255) as f64 / 255.0).collect::<Vec<_>>()).unwrap();
        let run = || {
            let mut p = NetworkParams::<f32>::init(cfg.clone(), 9).unwrap();
            p.forward(&x, Mode::Train).unwrap().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients() {
        let mut p = NetworkParams::<f64>::init(NetworkConfig { input: 16, hidden: 4, conv2_activation: true }, 2).unwrap();
        let x = Tensor::from_f64(&[2, 1, 16, 16], &(0..512).map(|i| (i % 7) as f64 / 7.0).collect::<Vec<_>>()).unwrap();
        let (out, cache) = p.forward_train(&x).unwrap();
        let g = p.backward(&cache, &Tensor::zeros(out.shape())).unwrap();
        assert!(g.named.iter().all(|(_, t)| t.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn output_bias_gradient_is_batch_mean_of_loss_gradient() {
        let mut p = NetworkParams::<f64>::init(NetworkConfig { input: 16, hidden: 4, conv2_activation: false }, 5).unwrap();
        let x = Tensor::from_f64(&[3, 1, 16, 16], &(0..768).map(|i| (i % 11) as f64 / 11.0).collect::<Vec<_>>()).unwrap();
        let targets = Tensor::from_f64(&[3, 8], &(0..24).map(|i| 0.5 + i as f64 / 24.0).collect::<Vec<_>>()).unwrap();
        let (out, cache) = p.forward_train(&x).unwrap();
        let (_, d_out) = mse_loss(&out, &targets).unwrap();
        let g = p.backward(&cache, &d_out).unwrap();
        // per-sample loss is the mean over 8 entries; its gradient is 2(p − t)/8
        let (o, t) = (out.data(), targets.data());
        for j in 0..8 {
            let mean: f64 = (0..3).map(|b| 2.0 * (o[b * 8 + j] - t[b * 8 + j]) / 8.0).sum::<f64>() / 3.0;
            assert!((g.get("fc2.bias").unwrap().data()[j] - mean).abs() < 1e-12);
        }
    }
}
