use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::{Block, ConvLayer, Tape};
use crate::conv::{
    conv3d_backward, conv3d_backward_weights, conv3d_forward, ConvSpec, ConvWeights,
};
use crate::error::{Error, Result};
use crate::network::{accounting, AccountingReport, NetConfig};
use crate::scalar::Scalar;
use crate::tensor::{Shape5, Tensor5};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Debug)]
pub struct Unit<T> {
    pub block: Block<T>,
    pub tail: Option<ConvLayer<T>>,
    pub projection: Option<ConvLayer<T>>,
    pub residual: bool,
}

#[derive(Debug)]
pub struct Network<T> {
    config: NetConfig,
    seed: u64,
    stem: ConvLayer<T>,
    units: Vec<Unit<T>>,
    head: ConvLayer<T>,
    id: u64,
    generation: u64,
}

impl<T: Clone> Clone for Network<T> {
    fn clone(&self) -> Self {
        Network {
            config: self.config.clone(),
            seed: self.seed,
            stem: self.stem.clone(),
            units: self.units.clone(),
            head: self.head.clone(),
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            generation: 0,
        }
    }
}

#[derive(Clone, Debug)]
struct UnitTape<T> {
    input: Tensor5<T>,
    block: Tape<T>,
    block_out: Tensor5<T>,
    tail_out: Option<Tensor5<T>>,
}

/// Activations recorded by [`Network::forward`].
#[derive(Clone, Debug)]
pub struct NetTape<T> {
    net_id: u64,
    generation: u64,
    input: Tensor5<T>,
    stem_out: Tensor5<T>,
    units: Vec<UnitTape<T>>,
    features: Tensor5<T>,
    pooled: Tensor5<T>,
}

/// Gradients in [`Network::layers`] order, plus the input gradient when requested.
#[derive(Clone, Debug)]
pub struct NetGrads<T> {
    pub input: Option<Tensor5<T>>,
    pub layers: Vec<ConvWeights<T>>,
}

fn layer<T: Scalar>(name: String, spec: ConvSpec, rng: &mut ChaCha8Rng) -> Result<ConvLayer<T>> {
    Ok(ConvLayer {
        name,
        weights: ConvWeights::init_uniform(&spec, rng)?,
        spec,
    })
}

fn conv_bwd<T: Scalar>(
    l: &ConvLayer<T>,
    x: &Tensor5<T>,
    g: &Tensor5<T>,
) -> Result<(Tensor5<T>, ConvWeights<T>)> {
    let mut cg = conv3d_backward(x, &l.spec, &l.weights, g)?;
    if !l.spec.bias {
        cg.weights.bias.iter_mut().for_each(|b| *b = T::zero());
    }
    Ok((cg.input, cg.weights))
}

impl<T: Scalar> Network<T> {
    /// Builds and initializes every layer from `seed`. Each layer draws its
    /// own sub-seed from one ChaCha stream, in [`Network::layers`] order.
    pub fn build(config: &NetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut seeds = ChaCha8Rng::seed_from_u64(seed);
        let mut sub = || ChaCha8Rng::seed_from_u64(seeds.random());
        let stem = layer("stem".into(), config.stem, &mut sub())?;
        let mut units = Vec::new();
        for (i, plan) in config.units()?.into_iter().enumerate() {
            let block = Block::new(
                config.block_kind,
                plan.c_in,
                plan.c_out,
                config.kernel,
                plan.stride,
                sub().random(),
                config.block_options(),
            )?;
            let tail = plan
                .tail
                .map(|s| layer(format!("u{i}.tail"), s, &mut sub()))
                .transpose()?;
            let projection = plan
                .projection
                .map(|s| layer(format!("u{i}.skip"), s, &mut sub()))
                .transpose()?;
            units.push(Unit {
                block,
                tail,
                projection,
                residual: plan.residual,
            });
        }
        let head = layer("fc".into(), config.head_spec(), &mut sub())?;
        Ok(Network {
            config: config.clone(),
            seed,
            stem,
            units,
            head,
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            generation: 0,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let cast_layer = |l: &ConvLayer<T>| ConvLayer {
            name: l.name.clone(),
            spec: l.spec,
            weights: l.weights.cast(),
        };
        Network {
            config: self.config.clone(),
            seed: self.seed,
            stem: cast_layer(&self.stem),
            units: self
                .units
                .iter()
                .map(|u| Unit {
                    block: u.block.cast(),
                    tail: u.tail.as_ref().map(cast_layer),
                    projection: u.projection.as_ref().map(cast_layer),
                    residual: u.residual,
                })
                .collect(),
            head: cast_layer(&self.head),
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            generation: 0,
        }
    }

    pub fn forward(&self, x: &Tensor5<T>) -> Result<(Tensor5<T>, NetTape<T>)> {
        let want = Shape5 {
            n: x.shape().n,
            ..self.config.input_shape
        };
        if x.shape() != want {
            return Err(Error::ShapeMismatch {
                op: "network input",
                left: want,
                right: x.shape(),
            });
        }
        let stem_out = conv3d_forward(x, &self.stem.spec, &self.stem.weights)?.relu();
        let mut units = Vec::with_capacity(self.units.len());
        let mut h = stem_out.clone();
        for u in &self.units {
            let (block_out, tape) = u.block.forward(&h)?;
            let (mut y, tail_out) = match &u.tail {
                Some(t) => {
                    let o = conv3d_forward(&block_out, &t.spec, &t.weights)?.relu();
                    (o.clone(), Some(o))
                }
                None => (block_out.clone(), None),
            };
            if u.residual {
                match &u.projection {
                    Some(p) => y.add_assign(&conv3d_forward(&h, &p.spec, &p.weights)?)?,
                    None => y.add_assign(&h)?,
                }
            }
            units.push(UnitTape {
                input: h,
                block: tape,
                block_out,
                tail_out,
            });
            h = y;
        }
        let pooled = global_average_pool(&h)?;
        let logits = conv3d_forward(&pooled, &self.head.spec, &self.head.weights)?;
        let tape = NetTape {
            net_id: self.id,
            generation: self.generation,
            input: x.clone(),
            stem_out,
            units,
            features: h,
            pooled,
        };
        Ok((logits, tape))
    }

    /// Sign pattern (`> 0`) of every ReLU output recorded on `tape`.
    pub fn relu_pattern(&self, tape: &NetTape<T>) -> Vec<bool> {
        let positive = |t: &Tensor5<T>| {
            t.as_slice()
                .iter()
                .map(|&v| v > T::zero())
                .collect::<Vec<_>>()
        };
        let mut out = positive(&tape.stem_out);
        for (u, ut) in self.units.iter().zip(&tape.units) {
            out.extend(u.block.relu_pattern(&ut.block));
            if let Some(t) = &ut.tail_out {
                out.extend(positive(t));
            }
        }
        out
    }

    /// Logits `(n, classes, 1, 1, 1)` without keeping a tape.
    pub fn infer(&self, x: &Tensor5<T>) -> Result<Tensor5<T>> {
        Ok(self.forward(x)?.0)
    }

    /// Backward pass from `d loss / d logits`. The input gradient is only
    /// computed when `want_input` is set.
    pub fn backward(
        &self,
        tape: &NetTape<T>,
        grad_logits: &Tensor5<T>,
        want_input: bool,
    ) -> Result<NetGrads<T>> {
        if tape.net_id != self.id || tape.generation != self.generation {
            return Err(Error::StaleTape(
                "recorded by another network or before a weight change",
            ));
        }
        let (g_pooled, g_head) = conv_bwd(&self.head, &tape.pooled, grad_logits)?;
        let mut g = unpool(&g_pooled, tape.features.shape())?;
        let mut unit_grads = Vec::with_capacity(self.units.len());
        for (u, ut) in self.units.iter().zip(&tape.units).rev() {
            let mut grads = Vec::new();
            let g_unit = g;
            let (g_block_out, g_tail) = match (&u.tail, &ut.tail_out) {
                (Some(t), Some(out)) => {
                    let (gi, gw) = conv_bwd(t, &ut.block_out, &g_unit.relu_backward(out)?)?;
                    (gi, Some(gw))
                }
                _ => (g_unit.clone(), None),
            };
            let bg = u.block.backward(&ut.block, &g_block_out)?;
            let mut g_in = bg.input;
            grads.extend(bg.layers);
            grads.extend(g_tail);
            if u.residual {
                match &u.projection {
                    Some(p) => {
                        let (gi, gw) = conv_bwd(p, &ut.input, &g_unit)?;
                        g_in.add_assign(&gi)?;
                        grads.push(gw);
                    }
                    None => g_in.add_assign(&g_unit)?,
                }
            }
            unit_grads.push(grads);
            g = g_in;
        }
        let g_stem_pre = g.relu_backward(&tape.stem_out)?;
        let (input, mut g_stem) = if want_input {
            let (gi, gw) = conv_bwd(&self.stem, &tape.input, &g_stem_pre)?;
            (Some(gi), gw)
        } else {
            (
                None,
                conv3d_backward_weights(
                    &tape.input,
                    &self.stem.spec,
                    &self.stem.weights,
                    &g_stem_pre,
                )?,
            )
        };
        if !self.stem.spec.bias {
            g_stem.bias.iter_mut().for_each(|b| *b = T::zero());
        }
        let mut layers = vec![g_stem];
        layers.extend(unit_grads.into_iter().rev().flatten());
        layers.push(g_head);
        Ok(NetGrads { input, layers })
    }
}

impl<T> Network<T> {
    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn units(&self) -> &[Unit<T>] {
        &self.units
    }

    /// Every convolution: stem, then per unit its block layers, tail and
    /// projection, then the head.
    pub fn layers(&self) -> Vec<&ConvLayer<T>> {
        let mut out = vec![&self.stem];
        for u in &self.units {
            out.extend(u.block.layers());
            out.extend(&u.tail);
            out.extend(&u.projection);
        }
        out.push(&self.head);
        out
    }

    /// Mutable [`Network::layers`]. Tapes recorded before this call become stale.
    pub fn layers_mut(&mut self) -> Vec<&mut ConvLayer<T>> {
        self.generation += 1;
        let mut out = vec![&mut self.stem];
        for u in &mut self.units {
            out.extend(u.block.layers_mut());
            out.extend(&mut u.tail);
            out.extend(&mut u.projection);
        }
        out.push(&mut self.head);
        out
    }

    /// Layer names as used in weight files, unit blocks prefixed with `u{i}.`.
    pub fn layer_names(&self) -> Vec<String> {
        let mut out = vec![self.stem.name.clone()];
        for (i, u) in self.units.iter().enumerate() {
            out.extend(u.block.layers().iter().map(|l| format!("u{i}.{}", l.name)));
            out.extend(u.tail.iter().map(|l| l.name.clone()));
            out.extend(u.projection.iter().map(|l| l.name.clone()));
        }
        out.push(self.head.name.clone());
        out
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.spec.param_count()).sum()
    }

    pub fn depth(&self) -> usize {
        self.layers().len()
    }

    pub fn accounting(&self) -> Result<AccountingReport> {
        accounting(&self.config)
    }
}

/// Mean over `(t, h, w)`, giving `(n, c, 1, 1, 1)`.
pub fn global_average_pool<T: Scalar>(x: &Tensor5<T>) -> Result<Tensor5<T>> {
    let s = x.shape();
    let inv = T::of(1.0 / s.volume() as f64);
    let data = (0..s.n * s.c)
        .map(|i| {
            x.volume(i / s.c, i % s.c)
                .iter()
                .fold(T::zero(), |a, &v| a + v)
                * inv
        })
        .collect();
    Tensor5::from_vec(Shape5::new(s.n, s.c, 1, 1, 1), data)
}

fn unpool<T: Scalar>(g: &Tensor5<T>, shape: Shape5) -> Result<Tensor5<T>> {
    let inv = T::of(1.0 / shape.volume() as f64);
    Tensor5::from_fn(shape, |[n, c, ..]| g.at(n, c, 0, 0, 0) * inv)
}
