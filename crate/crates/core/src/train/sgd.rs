use crate::block::ConvLayer;
use crate::conv::ConvWeights;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Shape5;

/// Classic momentum on flat buffers: `v ← μ·v + g + λ·w`, then `w ← w − lr·v`.
pub fn sgd_step<T: Scalar>(
    weights: &mut [T],
    grads: &[T],
    velocity: &mut [T],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    let flat = |n: usize| Shape5::new(1, 1, 1, 1, n);
    for other in [grads.len(), velocity.len()] {
        if other != weights.len() {
            return Err(Error::ShapeMismatch {
                op: "sgd_step",
                left: flat(weights.len()),
                right: flat(other),
            });
        }
    }
    let (lr, mu, wd) = (T::of(lr), T::of(momentum), T::of(weight_decay));
    for ((w, &g), v) in weights.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        let g = if weight_decay != 0.0 { g + wd * *w } else { g };
        *v = mu * *v + g;
        *w -= lr * *v;
    }
    Ok(())
}

/// Momentum buffers for a list of convolution layers.
#[derive(Clone, Debug)]
pub struct SgdState<T> {
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<ConvWeights<T>>,
}

impl<T: Scalar> SgdState<T> {
    pub fn new(momentum: f64, weight_decay: f64) -> Self {
        SgdState {
            momentum,
            weight_decay,
            velocity: Vec::new(),
        }
    }

    pub fn velocity(&self) -> &[ConvWeights<T>] {
        &self.velocity
    }

    /// Updates every layer with its gradient. Buffers are created on the
    /// first call and must line up with the layers from then on.
    pub fn step<'a>(
        &mut self,
        layers: impl IntoIterator<Item = &'a mut ConvLayer<T>>,
        grads: &[ConvWeights<T>],
        lr: f64,
    ) -> Result<()> {
        let layers: Vec<&mut ConvLayer<T>> = layers.into_iter().collect();
        if layers.len() != grads.len() {
            return Err(Error::CountMismatch {
                what: "gradients",
                expected: layers.len(),
                got: grads.len(),
            });
        }
        if self.velocity.is_empty() {
            self.velocity = layers
                .iter()
                .map(|l| ConvWeights::zeros(&l.spec))
                .collect::<Result<_>>()?;
        }
        if self.velocity.len() != layers.len() {
            return Err(Error::CountMismatch {
                what: "velocity buffers",
                expected: layers.len(),
                got: self.velocity.len(),
            });
        }
        for ((layer, g), v) in layers.into_iter().zip(grads).zip(&mut self.velocity) {
            for other in [g.kernels.shape(), v.kernels.shape()] {
                if other != layer.weights.kernels.shape() {
                    return Err(Error::ShapeMismatch {
                        op: "sgd_step",
                        left: layer.weights.kernels.shape(),
                        right: other,
                    });
                }
            }
            let (mu, wd) = (self.momentum, self.weight_decay);
            sgd_step(
                layer.weights.kernels.as_mut_slice(),
                g.kernels.as_slice(),
                v.kernels.as_mut_slice(),
                lr,
                mu,
                wd,
            )?;
            if layer.spec.bias {
                sgd_step(&mut layer.weights.bias, &g.bias, &mut v.bias, lr, mu, wd)?;
            }
        }
        Ok(())
    }
}
