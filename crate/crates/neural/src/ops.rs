//! Layer kernels and their gradients. Activations are `[B, C, H, W]`
//! row-major; dense layers take `[B, features]`.

use crate::real::{gemm, Real};
use crate::tensor::{shape_err, NeuralError, Tensor};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPSILON: f64 = 1e-5;

/// Unrolls one `C×H×W` image into `(C·kh·kw) × (ho·wo)` patch columns.
fn im2col<T: Real>(img: &[T], c: usize, h: usize, w: usize, kh: usize, kw: usize, cols: &mut [T]) {
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    let p = ho * wo;
    let mut row = 0;
    for ch in 0..c {
        let plane = &img[ch * h * w..(ch + 1) * h * w];
        for i in 0..kh {
            for j in 0..kw {
                let dst = &mut cols[row * p..(row + 1) * p];
                for y in 0..ho {
                    let src = &plane[(y + i) * w + j..(y + i) * w + j + wo];
                    dst[y * wo..(y + 1) * wo].copy_from_slice(src);
                }
                row += 1;
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the image.
fn col2im<T: Real>(cols: &[T], c: usize, h: usize, w: usize, kh: usize, kw: usize, img: &mut [T]) {
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    let p = ho * wo;
    let mut row = 0;
    for ch in 0..c {
        let plane = &mut img[ch * h * w..(ch + 1) * h * w];
        for i in 0..kh {
            for j in 0..kw {
                let src = &cols[row * p..(row + 1) * p];
                for y in 0..ho {
                    let dst = &mut plane[(y + i) * w + j..(y + i) * w + j + wo];
                    for (d, &s) in dst.iter_mut().zip(&src[y * wo..(y + 1) * wo]) {
                        *d = *d + s;
                    }
                }
                row += 1;
            }
        }
    }
}

fn conv_dims<T: Real>(x: &Tensor<T>, kernels: &Tensor<T>, bias: &Tensor<T>) -> Result<[usize; 7], NeuralError> {
    let [b, c, h, w] = x.dims4("conv2d")?;
    let [k, kc, kh, kw] = kernels.dims4("conv2d")?;
    if kc != c {
        return Err(shape_err("conv2d", format!("input has {c} channels, kernels expect {kc}")));
    }
    if bias.shape() != [k] {
        return Err(shape_err("conv2d", format!("bias shape {:?}, expected [{k}]", bias.shape())));
    }
    if h < kh || w < kw {
        return Err(shape_err("conv2d", format!("input {h}×{w} smaller than kernel {kh}×{kw}")));
    }
    Ok([b, c, h, w, k, kh, kw])
}

/// Valid cross-correlation, stride 1, no padding.
pub fn conv2d<T: Real>(x: &Tensor<T>, kernels: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>, NeuralError> {
    let [b, c, h, w, k, kh, kw] = conv_dims(x, kernels, bias)?;
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    let (p, ckk) = (ho * wo, c * kh * kw);
    let mut out = vec![T::zero(); b * k * p];
    let mut cols = vec![T::zero(); ckk * p];
    for n in 0..b {
        im2col(&x.data()[n * c * h * w..(n + 1) * c * h * w], c, h, w, kh, kw, &mut cols);
        let y = &mut out[n * k * p..(n + 1) * k * p];
        for (kk, row) in y.chunks_mut(p).enumerate() {
            row.fill(bias.data()[kk]);
        }
        gemm(false, false, k, ckk, p, kernels.data(), &cols, T::one(), y);
    }
    Tensor::new(vec![b, k, ho, wo], out)
}

pub struct ConvGrads<T> {
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
    pub input: Option<Tensor<T>>,
}

/// Gradients of [`conv2d`]. The input gradient is skipped unless asked for.
pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    kernels: &Tensor<T>,
    dy: &Tensor<T>,
    need_input: bool,
) -> Result<ConvGrads<T>, NeuralError> {
    let [b, c, h, w] = x.dims4("conv2d_backward")?;
    let [k, _, kh, kw] = kernels.dims4("conv2d_backward")?;
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    if dy.shape() != [b, k, ho, wo] {
        return Err(shape_err(
            "conv2d_backward",
            format!("output gradient {:?}, expected {:?}", dy.shape(), [b, k, ho, wo]),
        ));
    }
    let (p, ckk) = (ho * wo, c * kh * kw);
    let mut dk = vec![T::zero(); k * ckk];
    let mut db = vec![T::zero(); k];
    let mut dx = if need_input { vec![T::zero(); x.len()] } else { Vec::new() };
    let mut cols = vec![T::zero(); ckk * p];
    let mut dcols = if need_input { vec![T::zero(); ckk * p] } else { Vec::new() };
    for n in 0..b {
        let g = &dy.data()[n * k * p..(n + 1) * k * p];
        for (kk, row) in g.chunks(p).enumerate() {
            db[kk] = row.iter().fold(db[kk], |s, &v| s + v);
        }
        let img = &x.data()[n * c * h * w..(n + 1) * c * h * w];
        im2col(img, c, h, w, kh, kw, &mut cols);
        gemm(false, true, k, p, ckk, g, &cols, T::one(), &mut dk);
        if need_input {
            gemm(true, false, ckk, k, p, kernels.data(), g, T::zero(), &mut dcols);
            col2im(&dcols, c, h, w, kh, kw, &mut dx[n * c * h * w..(n + 1) * c * h * w]);
        }
    }
    Ok(ConvGrads {
        kernels: Tensor::new(kernels.shape().to_vec(), dk)?,
        bias: Tensor::new(vec![k], db)?,
        input: if need_input {
            Some(Tensor::new(x.shape().to_vec(), dx)?)
        } else {
            None
        },
    })
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes the gradient where the forward input was positive.
pub fn relu_backward<T: Real>(x: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>, NeuralError> {
    if x.shape() != dy.shape() {
        return Err(shape_err("relu_backward", format!("{:?} vs {:?}", x.shape(), dy.shape())));
    }
    let data = x
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// 2×2 max pooling with stride 2; an odd trailing row or column is dropped.
/// Also returns, per output, the flat input index of the winning value
/// (first of equal maxima in row-major window order).
pub fn maxpool2<T: Real>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<u32>), NeuralError> {
    let [b, c, h, w] = x.dims4("maxpool2")?;
    let (ho, wo) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(b * c * ho * wo);
    let mut arg = Vec::with_capacity(b * c * ho * wo);
    let d = x.data();
    for plane in 0..b * c {
        let base = plane * h * w;
        for y in 0..ho {
            for xx in 0..wo {
                let mut best = base + 2 * y * w + 2 * xx;
                for idx in [best + 1, best + w, best + w + 1] {
                    if d[idx] > d[best] {
                        best = idx;
                    }
                }
                out.push(d[best]);
                arg.push(best as u32);
            }
        }
    }
    Ok((Tensor::new(vec![b, c, ho, wo], out)?, arg))
}

pub fn maxpool2_backward<T: Real>(input_shape: &[usize], argmax: &[u32], dy: &Tensor<T>) -> Result<Tensor<T>, NeuralError> {
    if argmax.len() != dy.len() {
        return Err(shape_err("maxpool2_backward", "argmax and gradient lengths differ"));
    }
    let mut dx = Tensor::zeros(input_shape);
    let data = dx.data_mut();
    for (&i, &g) in argmax.iter().zip(dy.data()) {
        data[i as usize] = data[i as usize] + g;
    }
    Ok(dx)
}

/// Per-channel affine batch normalization with running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    /// Number of train-mode passes folded into the running statistics.
    pub updates: u64,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            gamma: Tensor::filled(&[channels], T::one()),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::filled(&[channels], T::one()),
            updates: 0,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor<T>, op: &'static str) -> Result<[usize; 4], NeuralError> {
        let dims = x.dims4(op)?;
        if dims[1] != self.channels() {
            return Err(shape_err(op, format!("{} channels, layer has {}", dims[1], self.channels())));
        }
        Ok(dims)
    }
}

pub struct BatchNormCache<T> {
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<f64>,
}

/// Normalizes by batch statistics and folds them into the running ones.
/// The running variance uses the unbiased estimate.
pub fn batchnorm_train<T: Real>(x: &Tensor<T>, bn: &mut BatchNorm<T>) -> Result<(Tensor<T>, BatchNormCache<T>), NeuralError> {
    let [b, c, h, w] = bn.check(x, "batchnorm")?;
    let m = b * h * w;
    if m < 2 {
        return Err(NeuralError::BatchTooSmall(m));
    }
    let hw = h * w;
    let d = x.data();
    let mut x_hat = vec![T::zero(); d.len()];
    let mut out = vec![T::zero(); d.len()];
    let mut inv_std = Vec::with_capacity(c);
    for ch in 0..c {
        let planes = || (0..b).map(move |n| (n * c + ch) * hw);
        let mut sum = 0.0;
        for s in planes() {
            sum += d[s..s + hw].iter().map(|v| v.as_f64()).sum::<f64>();
        }
        let mean = sum / m as f64;
        let mut sq = 0.0;
        for s in planes() {
            sq += d[s..s + hw].iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>();
        }
        let var = sq / m as f64;
        let is = 1.0 / (var + BN_EPSILON).sqrt();
        inv_std.push(is);
        let (g, be) = (bn.gamma.data()[ch], bn.beta.data()[ch]);
        let (mean_t, is_t) = (T::from_f64(mean), T::from_f64(is));
        for s in planes() {
            for i in s..s + hw {
                let xh = (d[i] - mean_t) * is_t;
                x_hat[i] = xh;
                out[i] = g * xh + be;
            }
        }
        let mom = T::from_f64(BN_MOMENTUM);
        let rm = &mut bn.running_mean.data_mut()[ch];
        *rm = (T::one() - mom) * *rm + mom * mean_t;
        let rv = &mut bn.running_var.data_mut()[ch];
        *rv = (T::one() - mom) * *rv + mom * T::from_f64(sq / (m - 1) as f64);
    }
    bn.updates += 1;
    Ok((
        Tensor::new(x.shape().to_vec(), out)?,
        BatchNormCache {
            x_hat: Tensor::new(x.shape().to_vec(), x_hat)?,
            inv_std,
        },
    ))
}

pub fn batchnorm_eval<T: Real>(x: &Tensor<T>, bn: &BatchNorm<T>) -> Result<Tensor<T>, NeuralError> {
    let [_, c, h, w] = bn.check(x, "batchnorm")?;
    if bn.updates == 0 {
        return Err(NeuralError::BatchNormUninitialized);
    }
    let hw = h * w;
    let eps = T::from_f64(BN_EPSILON);
    let scale: Vec<T> = (0..c)
        .map(|ch| bn.gamma.data()[ch] / (bn.running_var.data()[ch] + eps).sqrt())
        .collect();
    let mut out = x.data().to_vec();
    for (i, plane) in out.chunks_mut(hw).enumerate() {
        let ch = i % c;
        let (mu, s, be) = (bn.running_mean.data()[ch], scale[ch], bn.beta.data()[ch]);
        for v in plane {
            *v = (*v - mu) * s + be;
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

pub struct BatchNormGrads<T> {
    pub input: Tensor<T>,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

/// Train-mode gradient, batch statistics included.
pub fn batchnorm_backward<T: Real>(
    cache: &BatchNormCache<T>,
    gamma: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<BatchNormGrads<T>, NeuralError> {
    if dy.shape() != cache.x_hat.shape() {
        return Err(shape_err("batchnorm_backward", format!("{:?} vs {:?}", dy.shape(), cache.x_hat.shape())));
    }
    let [b, c, h, w] = dy.dims4("batchnorm_backward")?;
    let hw = h * w;
    let m = (b * hw) as f64;
    let (g, xh) = (dy.data(), cache.x_hat.data());
    let mut dx = vec![T::zero(); g.len()];
    let mut dgamma = Vec::with_capacity(c);
    let mut dbeta = Vec::with_capacity(c);
    for ch in 0..c {
        let planes = || (0..b).map(move |n| (n * c + ch) * hw);
        let (mut sg, mut sgx) = (0.0, 0.0);
        for s in planes() {
            for i in s..s + hw {
                sg += g[i].as_f64();
                sgx += g[i].as_f64() * xh[i].as_f64();
            }
        }
        dgamma.push(T::from_f64(sgx));
        dbeta.push(T::from_f64(sg));
        let k = gamma.data()[ch].as_f64() * cache.inv_std[ch];
        let (mg, mgx) = (sg / m, sgx / m);
        for s in planes() {
            for i in s..s + hw {
                dx[i] = T::from_f64(k * (g[i].as_f64() - mg - xh[i].as_f64() * mgx));
            }
        }
    }
    Ok(BatchNormGrads {
        input: Tensor::new(dy.shape().to_vec(), dx)?,
        gamma: Tensor::new(vec![c], dgamma)?,
        beta: Tensor::new(vec![c], dbeta)?,
    })
}

/// `y = x·wᵀ + b` with `w` stored `[out, in]`.
pub fn linear<T: Real>(x: &Tensor<T>, w: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>, NeuralError> {
    let [b, fin] = x.dims2("linear")?;
    let [fout, win] = w.dims2("linear")?;
    if win != fin || bias.shape() != [fout] {
        return Err(shape_err(
            "linear",
            format!("input {:?}, weights {:?}, bias {:?}", x.shape(), w.shape(), bias.shape()),
        ));
    }
    let mut out: Vec<T> = (0..b).flat_map(|_| bias.data().iter().copied()).collect();
    gemm(false, true, b, fin, fout, x.data(), w.data(), T::one(), &mut out);
    Tensor::new(vec![b, fout], out)
}

pub struct LinearGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn linear_backward<T: Real>(x: &Tensor<T>, w: &Tensor<T>, dy: &Tensor<T>) -> Result<LinearGrads<T>, NeuralError> {
    let [b, fin] = x.dims2("linear_backward")?;
    let [fout, _] = w.dims2("linear_backward")?;
    if dy.shape() != [b, fout] {
        return Err(shape_err("linear_backward", format!("gradient {:?}, expected [{b}, {fout}]", dy.shape())));
    }
    let mut dw = vec![T::zero(); fout * fin];
    gemm(true, false, fout, b, fin, dy.data(), x.data(), T::zero(), &mut dw);
    let mut dx = vec![T::zero(); b * fin];
    gemm(false, false, b, fout, fin, dy.data(), w.data(), T::zero(), &mut dx);
    let mut db = vec![T::zero(); fout];
    for row in dy.data().chunks(fout) {
        for (d, &g) in db.iter_mut().zip(row) {
            *d = *d + g;
        }
    }
    Ok(LinearGrads {
        input: Tensor::new(vec![b, fin], dx)?,
        weight: Tensor::new(vec![fout, fin], dw)?,
        bias: Tensor::new(vec![fout], db)?,
    })
}

/// Mean squared error over every entry, and its gradient w.r.t. `pred`.
pub fn mse_loss<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>), NeuralError> {
    if pred.shape() != target.shape() {
        return Err(shape_err("mse_loss", format!("{:?} vs {:?}", pred.shape(), target.shape())));
    }
    let n = pred.len() as f64;
    let mut sum = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p.as_f64() - t.as_f64();
            sum += d * d;
            T::from_f64(2.0 * d / n)
        })
        .collect();
    Ok((sum / n, Tensor::new(pred.shape().to_vec(), grad)?))
}
