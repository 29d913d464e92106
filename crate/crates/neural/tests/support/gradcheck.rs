//! Analytic gradients of every parameter against finite differences.

use anthropometer_neural::network::{NetworkConfig, NetworkParams};
use anthropometer_neural::ops::{batchnorm_train, conv2d, linear, maxpool2, mse_loss, relu};
use anthropometer_neural::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIDE: usize = 16;
const H: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-3;
/// Denominator floor so that gradients that are zero up to rounding compare
/// in absolute terms.
const FLOOR: f64 = 1e-6;

fn loss(p: &NetworkParams<f64>, x: &Tensor<f64>, t: &Tensor<f64>) -> f64 {
    let mut p = p.clone();
    let (out, _) = p.forward_train(x).unwrap();
    mse_loss(&out, t).unwrap().0
}

/// Which ReLUs are active and which pool inputs win. The loss is smooth in
/// the parameters as long as this pattern stays fixed.
fn pattern(p: &NetworkParams<f64>, x: &Tensor<f64>) -> (Vec<bool>, Vec<u32>) {
    let mut p = p.clone();
    let mut mask = Vec::new();
    let mut args = Vec::new();
    let act = |t: &Tensor<f64>, mask: &mut Vec<bool>| {
        mask.extend(t.data().iter().map(|v| *v > 0.0));
        relu(t)
    };
    let a = act(&conv2d(x, &p.conv1.weight, &p.conv1.bias).unwrap(), &mut mask);
    let (a, _) = batchnorm_train(&a, &mut p.bn1).unwrap();
    let (a, arg) = maxpool2(&a).unwrap();
    args.extend(arg);
    let mut a = conv2d(&a, &p.conv2.weight, &p.conv2.bias).unwrap();
    if let Some(bn2) = p.bn2.as_mut() {
        a = batchnorm_train(&act(&a, &mut mask), bn2).unwrap().0;
    }
    let (a, arg) = maxpool2(&a).unwrap();
    args.extend(arg);
    let b = x.shape()[0];
    act(&linear(&a.reshape(&[b, 16]).unwrap(), &p.fc1.weight, &p.fc1.bias).unwrap(), &mut mask);
    (mask, args)
}

pub struct GradientReport {
    pub checked: usize,
    /// Parameters whose stencil had to avoid a kink on one side.
    pub one_sided: usize,
    pub worst_relative_error: f64,
    pub worst: String,
}

/// Compares every parameter gradient of a 16×16-input network.
pub fn check(conv2_activation: bool) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = NetworkConfig {
        input: SIDE,
        hidden: 6,
        conv2_activation,
    };
    assert_eq!(NetworkParams::<f64>::init(cfg.clone(), 0).unwrap().chain.flatten, 16);
    let mut params = NetworkParams::<f64>::init(cfg, 7).unwrap();
    let b = 4;
    let x: Vec<f64> = (0..b * SIDE * SIDE).map(|_| rng.gen_range(0.0..1.0)).collect();
    let x = Tensor::from_f64(&[b, 1, SIDE, SIDE], &x).unwrap();
    let t: Vec<f64> = (0..b * 8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let t = Tensor::from_f64(&[b, 8], &t).unwrap();

    let (_, grads) = params.clone().loss_and_gradients(&x, &t).unwrap();
    let names: Vec<&str> = params.trainable().iter().map(|(n, _)| *n).collect();
    let base = pattern(&params, &x);
    let centre = loss(&params, &x, &t);
    let mut checked = 0;
    let mut one_sided = 0;
    let mut worst = (0.0, String::new());
    for name in names {
        let analytic = grads.get(name).unwrap().data().to_vec();
        for (i, &a) in analytic.iter().enumerate() {
            let nudge = |p: &mut NetworkParams<f64>, d: f64| {
                let mut list = p.trainable_mut();
                let (_, t) = list.iter_mut().find(|(n, _)| *n == name).unwrap();
                t.data_mut()[i] += d;
            };
            let mut probe = |k: f64| {
                nudge(&mut params, k * H);
                let r = (loss(&params, &x, &t), pattern(&params, &x) == base);
                nudge(&mut params, -k * H);
                r
            };
            let (up, up_smooth) = probe(1.0);
            let (down, down_smooth) = probe(-1.0);
            // A kink inside one half of the stencil: use the second-order
            // one-sided stencil on the other half, on [0, 2h] or, if that
            // reaches the kink too, on [0, h].
            let numeric = match (up_smooth, down_smooth) {
                (true, true) => (up - down) / (2.0 * H),
                (false, false) => panic!("{name}[{i}]: kinks on both sides of the stencil"),
                (true, false) | (false, true) => {
                    let dir = if up_smooth { 1.0 } else { -1.0 };
                    let near = if up_smooth { up } else { down };
                    let (far, smooth) = probe(2.0 * dir);
                    if smooth {
                        dir * (-3.0 * centre + 4.0 * near - far) / (2.0 * H)
                    } else {
                        let (half, smooth) = probe(0.5 * dir);
                        assert!(smooth);
                        dir * (-3.0 * centre + 4.0 * half - near) / H
                    }
                }
            };
            one_sided += usize::from(up_smooth != down_smooth);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}]: analytic {a:e}, numeric {numeric:e}"));
            }
            checked += 1;
        }
    }
    assert_eq!(checked, params.parameter_count());
    GradientReport {
        checked,
        one_sided,
        worst_relative_error: worst.0,
        worst: worst.1,
    }
}

