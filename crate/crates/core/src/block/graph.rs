use crate::block::{Block, Step};
use crate::conv::{conv3d_backward, conv3d_forward, ConvWeights};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

/// Activations recorded by [`Block::forward`] for the matching backward pass.
#[derive(Clone, Debug)]
pub struct Tape<T> {
    block_id: u64,
    generation: u64,
    nodes: Vec<Tensor5<T>>,
    relu_count: usize,
}

impl<T> Tape<T> {
    pub fn output(&self) -> &Tensor5<T> {
        self.nodes.last().expect("tape holds at least the input")
    }

    pub fn nodes(&self) -> &[Tensor5<T>] {
        &self.nodes
    }

    /// ReLUs actually applied while recording.
    pub fn relu_count(&self) -> usize {
        self.relu_count
    }
}

#[derive(Clone, Debug)]
pub struct BlockGrads<T> {
    pub input: Tensor5<T>,
    /// One entry per layer, in [`Block::layers`] order.
    pub layers: Vec<ConvWeights<T>>,
}

fn accumulate<T: Scalar>(slot: &mut Option<Tensor5<T>>, g: Tensor5<T>) -> Result<()> {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

impl<T: Scalar> Block<T> {
    pub fn forward(&self, x: &Tensor5<T>) -> Result<(Tensor5<T>, Tape<T>)> {
        if x.shape().c != self.c_in {
            return Err(Error::ChannelMismatch {
                expected: self.c_in,
                got: x.shape().c,
            });
        }
        let mut nodes = Vec::with_capacity(self.steps.len() + 1);
        nodes.push(x.clone());
        let mut relu_count = 0;
        for step in &self.steps {
            let next = match *step {
                Step::Conv { layer, input, relu } => {
                    let l = &self.layers[layer];
                    let y = conv3d_forward(&nodes[input], &l.spec, &l.weights)?;
                    if relu {
                        relu_count += 1;
                        y.relu()
                    } else {
                        y
                    }
                }
                Step::Add { lhs, rhs } => nodes[lhs].add(&nodes[rhs])?,
            };
            nodes.push(next);
        }
        let tape = Tape {
            block_id: self.id,
            generation: self.generation,
            nodes,
            relu_count,
        };
        Ok((tape.output().clone(), tape))
    }

    /// Sign pattern (`> 0`) of every ReLU output recorded on `tape`.
    pub fn relu_pattern(&self, tape: &Tape<T>) -> Vec<bool> {
        let mut out = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            if let Step::Conv { relu: true, .. } = step {
                out.extend(tape.nodes[i + 1].as_slice().iter().map(|&v| v > T::zero()));
            }
        }
        out
    }

    /// Forward pass without keeping a tape.
    pub fn infer(&self, x: &Tensor5<T>) -> Result<Tensor5<T>> {
        let (_, mut tape) = self.forward(x)?;
        Ok(tape.nodes.pop().expect("tape holds the output"))
    }

    /// Chain rule through the block graph in reverse step order. Fan-out
    /// nodes sum the gradients of all their consumers.
    pub fn backward(&self, tape: &Tape<T>, grad_out: &Tensor5<T>) -> Result<BlockGrads<T>> {
        if tape.block_id != self.id
            || tape.generation != self.generation
            || tape.nodes.len() != self.steps.len() + 1
        {
            return Err(Error::StaleTape(
                "recorded by another block or before a weight change",
            ));
        }
        if grad_out.shape() != tape.output().shape() {
            return Err(Error::ShapeMismatch {
                op: "block backward",
                left: tape.output().shape(),
                right: grad_out.shape(),
            });
        }
        let mut grads: Vec<Option<Tensor5<T>>> = vec![None; tape.nodes.len()];
        grads[self.steps.len()] = Some(grad_out.clone());
        let mut layer_grads: Vec<Option<ConvWeights<T>>> = vec![None; self.layers.len()];
        for (i, step) in self.steps.iter().enumerate().rev() {
            let node = i + 1;
            let g = match grads[node].take() {
                Some(g) => g,
                None => Tensor5::zeros(tape.nodes[node].shape())?,
            };
            match *step {
                Step::Conv { layer, input, relu } => {
                    let l = &self.layers[layer];
                    let g = if relu {
                        g.relu_backward(&tape.nodes[node])?
                    } else {
                        g
                    };
                    let mut cg = conv3d_backward(&tape.nodes[input], &l.spec, &l.weights, &g)?;
                    if !l.spec.bias {
                        cg.weights.bias.iter_mut().for_each(|b| *b = T::zero());
                    }
                    layer_grads[layer] = Some(cg.weights);
                    accumulate(&mut grads[input], cg.input)?;
                }
                Step::Add { lhs, rhs } => {
                    accumulate(&mut grads[lhs], g.clone())?;
                    accumulate(&mut grads[rhs], g)?;
                }
            }
        }
        let input = match grads[0].take() {
            Some(g) => g,
            None => Tensor5::zeros(tape.nodes[0].shape())?,
        };
        let layers = layer_grads
            .into_iter()
            .zip(&self.layers)
            .map(|(g, l)| g.map_or_else(|| ConvWeights::zeros(&l.spec), Ok))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockGrads { input, layers })
    }
}
