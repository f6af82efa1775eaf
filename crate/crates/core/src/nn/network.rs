use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{Layer, LayerCache, Mode, NnError, NnRng, Scalar, Tensor};

/// Architecture-level description of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv3x3 { filters: usize },
    MaxPool2x2,
    BatchNorm { epsilon: f64, momentum: f64 },
    Dropout { rate: f64 },
    Flatten,
    Dense { units: usize },
    Relu,
    Softmax,
}

impl LayerSpec {
    /// Keras defaults.
    pub fn batch_norm() -> Self {
        LayerSpec::BatchNorm {
            epsilon: 1e-3,
            momentum: 0.99,
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let bad = || {
            NnError::InvalidSpec(format!("{self:?} cannot follow a layer with output {input:?}"))
        };
        match (self, input) {
            (LayerSpec::Conv3x3 { filters }, &[h, w, _]) if h >= 3 && w >= 3 && *filters > 0 => {
                Ok(vec![h - 2, w - 2, *filters])
            }
            (LayerSpec::MaxPool2x2, &[h, w, c]) if h >= 2 && w >= 2 => Ok(vec![h / 2, w / 2, c]),
            (LayerSpec::BatchNorm { epsilon, momentum }, _)
                if !input.is_empty() && *epsilon > 0.0 && (0.0..1.0).contains(momentum) =>
            {
                Ok(input.to_vec())
            }
            (LayerSpec::Dropout { rate }, _) if (0.0..1.0).contains(rate) => Ok(input.to_vec()),
            (LayerSpec::Flatten, _) if !input.is_empty() => Ok(vec![input.iter().product()]),
            (LayerSpec::Dense { units }, &[_]) if *units > 0 => Ok(vec![*units]),
            (LayerSpec::Relu, _) => Ok(input.to_vec()),
            (LayerSpec::Softmax, &[_]) => Ok(input.to_vec()),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_shape: Vec<usize>,
    pub class_count: usize,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Output shape after every layer. Fails unless shapes compose and the
    /// network ends in a softmax over `class_count` units.
    pub fn output_shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        let mut shape = self.input_shape.clone();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = layer.output_shape(&shape)?;
            shapes.push(shape.clone());
        }
        if self.layers.last() != Some(&LayerSpec::Softmax) || shape != [self.class_count] {
            return Err(NnError::InvalidSpec(format!(
                "network must end in a softmax over {} classes, got {shape:?}",
                self.class_count
            )));
        }
        Ok(shapes)
    }

    /// Count of trainable parameters.
    pub fn trainable_params(&self) -> Result<usize, NnError> {
        let shapes = self.output_shapes()?;
        let mut input = self.input_shape.clone();
        let mut total = 0;
        for (layer, out) in self.layers.iter().zip(&shapes) {
            total += match layer {
                LayerSpec::Conv3x3 { filters } => 9 * input[2] * filters + filters,
                LayerSpec::Dense { units } => input[0] * units + units,
                LayerSpec::BatchNorm { .. } => 2 * input.last().unwrap(),
                _ => 0,
            };
            input = out.clone();
        }
        Ok(total)
    }
}

/// The three-block CNN for 32x32x1 inputs: three conv(64)/ReLU, max-pool,
/// batch-norm blocks, then 512 and 128 unit dense layers with 0.1 dropout
/// and a 10-way softmax. The dense hidden layers are linear.
pub fn build_table1_cnn() -> ModelSpec {
    use LayerSpec::*;
    let block = || [Conv3x3 { filters: 64 }, Relu, MaxPool2x2, LayerSpec::batch_norm()];
    let mut layers = Vec::new();
    for _ in 0..3 {
        layers.extend(block());
    }
    layers.extend([
        Dropout { rate: 0.1 },
        Flatten,
        Dense { units: 512 },
        Dropout { rate: 0.1 },
        Dense { units: 128 },
        Dropout { rate: 0.1 },
        Dense { units: 10 },
        Softmax,
    ]);
    ModelSpec {
        input_shape: vec![32, 32, 1],
        class_count: 10,
        layers,
    }
}

/// Per-layer parameter gradients, parallel to [`Layer::params`].
pub type Grads<T> = Vec<Vec<Tensor<T>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    spec: ModelSpec,
    layers: Vec<Layer<T>>,
}

fn he_uniform<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut NnRng) -> Tensor<T> {
    let limit = (6.0 / fan_in as f64).sqrt();
    let data = (0..shape.iter().product::<usize>())
        .map(|_| T::from_f64_lossy(rng.random_range(-limit..limit)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape matches data")
}

impl<T: Scalar> Network<T> {
    /// Builds the network with fan-in scaled uniform weights, zero biases,
    /// unit scales and identity running statistics.
    pub fn new(spec: &ModelSpec, seed: u64) -> Result<Self, NnError> {
        spec.output_shapes()?;
        let mut rng = NnRng::seed_from_u64(seed);
        let mut input = spec.input_shape.clone();
        let mut layers = Vec::with_capacity(spec.layers.len());
        for ls in &spec.layers {
            let layer = match ls {
                LayerSpec::Conv3x3 { filters } => {
                    let cin = input[2];
                    Layer::Conv3x3 {
                        kernel: he_uniform(&[3, 3, cin, *filters], 9 * cin, &mut rng),
                        bias: Tensor::zeros(&[*filters]),
                    }
                }
                LayerSpec::MaxPool2x2 => Layer::MaxPool2x2,
                LayerSpec::BatchNorm { epsilon, momentum } => {
                    let c = *input.last().unwrap();
                    Layer::BatchNorm {
                        gamma: Tensor::from_vec(&[c], vec![T::one(); c])?,
                        beta: Tensor::zeros(&[c]),
                        moving_mean: Tensor::zeros(&[c]),
                        moving_var: Tensor::from_vec(&[c], vec![T::one(); c])?,
                        epsilon: *epsilon,
                        momentum: *momentum,
                    }
                }
                LayerSpec::Dropout { rate } => Layer::Dropout { rate: *rate },
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::Dense { units } => Layer::Dense {
                    kernel: he_uniform(&[input[0], *units], input[0], &mut rng),
                    bias: Tensor::zeros(&[*units]),
                },
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Softmax => Layer::Softmax,
            };
            input = ls.output_shape(&input)?;
            layers.push(layer);
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(), NnError> {
        if x.shape().len() != self.spec.input_shape.len() + 1 || x.shape()[1..] != self.spec.input_shape[..] {
            return Err(NnError::ShapeMismatch(format!(
                "network expects (batch, {:?}), got {:?}",
                self.spec.input_shape,
                x.shape()
            )));
        }
        Ok(())
    }

    /// Forward pass keeping every layer's cache for [`Network::backward`].
    pub fn forward_cached(
        &self,
        x: Tensor<T>,
        mode: Mode,
        rng: &mut NnRng,
    ) -> Result<(Tensor<T>, Vec<LayerCache<T>>), NnError> {
        self.check_input(&x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut act = x;
        for layer in &self.layers {
            let (next, cache) = layer.forward(act, mode, rng)?;
            caches.push(cache);
            act = next;
        }
        Ok((act, caches))
    }

    /// Forward pass returning class probabilities of shape `(batch, classes)`.
    pub fn forward(&self, x: Tensor<T>, mode: Mode, rng: &mut NnRng) -> Result<Tensor<T>, NnError> {
        self.check_input(&x)?;
        let mut act = x;
        for layer in &self.layers {
            act = layer.forward(act, mode, rng)?.0;
        }
        Ok(act)
    }

    /// Eval-mode forward pass.
    pub fn predict(&self, x: Tensor<T>) -> Result<Tensor<T>, NnError> {
        // eval mode never draws from the generator
        let mut rng = NnRng::seed_from_u64(0);
        self.forward(x, Mode::Eval, &mut rng)
    }

    /// Backpropagates `grad` (gradient of the loss with respect to the output
    /// of layer `from`) down to the first layer.
    pub fn backward_from(
        &self,
        mut caches: Vec<LayerCache<T>>,
        from: usize,
        grad: Tensor<T>,
    ) -> Result<Grads<T>, NnError> {
        caches.truncate(from + 1);
        let mut grads: Grads<T> = vec![Vec::new(); self.layers.len()];
        let mut g = grad;
        for (i, cache) in caches.into_iter().enumerate().rev() {
            let (dx, dparams) = self.layers[i].backward(cache, g, i > 0)?;
            for (p, name) in dparams.iter().zip(self.layers[i].param_names()) {
                if !p.is_finite() {
                    return Err(NnError::NonFiniteGradient { layer: i, param: name });
                }
            }
            grads[i] = dparams;
            match dx {
                Some(dx) => g = dx,
                None => break,
            }
        }
        Ok(grads)
    }

    /// Mean categorical cross-entropy over the batch and its parameter
    /// gradients. A trailing softmax is differentiated jointly with the loss
    /// (`(p - y) / batch`).
    pub fn loss_and_grads(
        &self,
        x: Tensor<T>,
        labels: &[usize],
        mode: Mode,
        rng: &mut NnRng,
    ) -> Result<(f64, Grads<T>, Vec<LayerCache<T>>), NnError> {
        let n = x.shape()[0];
        if labels.len() != n {
            return Err(NnError::ShapeMismatch(format!(
                "{} labels for a batch of {n}",
                labels.len()
            )));
        }
        let (probs, caches) = self.forward_cached(x, mode, rng)?;
        let classes = probs.shape()[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(NnError::ShapeMismatch(format!("label {bad} >= {classes} classes")));
        }
        let loss = super::batch_cross_entropy(&probs, labels);
        if !loss.is_finite() {
            return Err(NnError::NonFiniteLoss(loss));
        }
        let inv_n = T::one() / T::from_usize(n).unwrap();
        let last = self.layers.len() - 1;
        let fused = matches!(self.layers[last], Layer::Softmax);
        let mut g = probs;
        for (row, &label) in g.data_mut().chunks_exact_mut(classes).zip(labels) {
            if fused {
                row[label] -= T::one();
                row.iter_mut().for_each(|v| *v = *v * inv_n);
            } else {
                let clipped = row[label].max(T::from_f64_lossy(1e-12));
                row.iter_mut().for_each(|v| *v = T::zero());
                row[label] = -inv_n / clipped;
            }
        }
        let from = if fused { last - 1 } else { last };
        // keep batchnorm statistics for the caller before handing caches to backward
        let stats = caches
            .iter()
            .map(|c| match c {
                LayerCache::Norm {
                    batch: true,
                    batch_mean,
                    batch_var,
                    ..
                } => LayerCache::Norm {
                    x_hat: Vec::new(),
                    inv_std: Vec::new(),
                    batch: true,
                    batch_mean: batch_mean.clone(),
                    batch_var: batch_var.clone(),
                },
                _ => LayerCache::None,
            })
            .collect();
        let grads = self.backward_from(caches, from, g)?;
        Ok((loss, grads, stats))
    }

    /// Folds batch statistics into the running averages:
    /// `running = momentum * running + (1 - momentum) * batch`.
    pub fn update_running_stats(&mut self, stats: &[LayerCache<T>]) {
        for (layer, cache) in self.layers.iter_mut().zip(stats) {
            if let (
                Layer::BatchNorm {
                    moving_mean,
                    moving_var,
                    momentum,
                    ..
                },
                LayerCache::Norm {
                    batch: true,
                    batch_mean,
                    batch_var,
                    ..
                },
            ) = (layer, cache)
            {
                let m = T::from_f64_lossy(*momentum);
                let one_m = T::one() - m;
                for (r, b) in moving_mean.data_mut().iter_mut().zip(batch_mean) {
                    *r = m * *r + one_m * *b;
                }
                for (r, b) in moving_var.data_mut().iter_mut().zip(batch_var) {
                    *r = m * *r + one_m * *b;
                }
            }
        }
    }

    /// All persisted tensors named `<index>_<kind>/<tensor>`.
    pub fn named_state(&self) -> Vec<(String, &Tensor<T>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, layer)| {
                layer
                    .state()
                    .into_iter()
                    .map(move |(name, t)| (format!("{i:02}_{}/{name}", layer.kind_name()), t))
            })
            .collect()
    }

    /// Replaces every persisted tensor from `lookup`; shapes must match.
    pub fn load_state(
        &mut self,
        mut lookup: impl FnMut(&str) -> Option<Tensor<T>>,
    ) -> Result<(), NnError> {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let kind = layer.kind_name();
            for (name, slot) in layer.state_mut() {
                let key = format!("{i:02}_{kind}/{name}");
                let t = lookup(&key)
                    .ok_or_else(|| NnError::CorruptCheckpoint(format!("missing tensor {key}")))?;
                if t.shape() != slot.shape() {
                    return Err(NnError::CorruptCheckpoint(format!(
                        "tensor {key} has shape {:?}, expected {:?}",
                        t.shape(),
                        slot.shape()
                    )));
                }
                *slot = t;
            }
        }
        Ok(())
    }

    /// Same weights in another precision.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv3x3 { kernel, bias } => Layer::Conv3x3 {
                    kernel: kernel.cast(),
                    bias: bias.cast(),
                },
                Layer::MaxPool2x2 => Layer::MaxPool2x2,
                Layer::BatchNorm {
                    gamma,
                    beta,
                    moving_mean,
                    moving_var,
                    epsilon,
                    momentum,
                } => Layer::BatchNorm {
                    gamma: gamma.cast(),
                    beta: beta.cast(),
                    moving_mean: moving_mean.cast(),
                    moving_var: moving_var.cast(),
                    epsilon: *epsilon,
                    momentum: *momentum,
                },
                Layer::Dropout { rate } => Layer::Dropout { rate: *rate },
                Layer::Flatten => Layer::Flatten,
                Layer::Dense { kernel, bias } => Layer::Dense {
                    kernel: kernel.cast(),
                    bias: bias.cast(),
                },
                Layer::Relu => Layer::Relu,
                Layer::Softmax => Layer::Softmax,
            })
            .collect();
        Network {
            spec: self.spec.clone(),
            layers,
        }
    }
}
