use crate::network::{Gradients, NetworkParams};
use crate::real::Real;
use crate::tensor::{shape_err, NeuralError, Tensor};

/// One velocity-form momentum update: `v ← μ·v + g`, `p ← p − lr·v`.
pub fn sgd_momentum_step<T: Real>(
    param: &mut Tensor<T>,
    grad: &Tensor<T>,
    velocity: &mut Tensor<T>,
    learning_rate: f64,
    momentum: f64,
) -> Result<(), NeuralError> {
    if param.shape() != grad.shape() || param.shape() != velocity.shape() {
        return Err(shape_err(
            "sgd_momentum_step",
            format!("param {:?}, grad {:?}, velocity {:?}", param.shape(), grad.shape(), velocity.shape()),
        ));
    }
    let (lr, mu) = (T::from_f64(learning_rate), T::from_f64(momentum));
    for ((p, &g), v) in param.data_mut().iter_mut().zip(grad.data()).zip(velocity.data_mut()) {
        *v = mu * *v + g;
        *p = *p - lr * *v;
    }
    Ok(())
}

/// Momentum SGD over every trainable tensor; velocities start at zero.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Tensor<T>>,
}

impl<T: Real> Sgd<T> {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Sgd {
            learning_rate,
            momentum,
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut NetworkParams<T>, grads: &Gradients<T>) -> Result<(), NeuralError> {
        let mut targets = params.trainable_mut();
        if targets.len() != grads.named.len() {
            return Err(shape_err("sgd", "gradient list does not match parameters"));
        }
        if self.velocity.is_empty() {
            self.velocity = targets.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        }
        for (((name, p), (gname, g)), v) in targets.iter_mut().zip(&grads.named).zip(&mut self.velocity) {
            if name != gname {
                return Err(shape_err("sgd", format!("parameter {name} paired with gradient {gname}")));
            }
            sgd_momentum_step(p, g, v, self.learning_rate, self.momentum)?;
        }
        Ok(())
    }
}
