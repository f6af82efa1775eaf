use rand::Rng;

use super::{matmul, NnError, NnRng, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch normalization, dropout active.
    Train,
    /// Running statistics, dropout disabled.
    Eval,
}

/// A layer together with its parameters. Tensors carry a leading batch axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    /// Valid 3x3 convolution, stride 1. Kernel is `(3, 3, in, out)`.
    Conv3x3 { kernel: Tensor<T>, bias: Tensor<T> },
    /// 2x2 window, stride 2; odd trailing rows/columns are dropped.
    MaxPool2x2,
    /// Per-channel normalization over every axis except the last.
    BatchNorm {
        gamma: Tensor<T>,
        beta: Tensor<T>,
        moving_mean: Tensor<T>,
        moving_var: Tensor<T>,
        epsilon: f64,
        momentum: f64,
    },
    /// Inverted dropout.
    Dropout { rate: f64 },
    Flatten,
    /// Kernel is `(in, out)`.
    Dense { kernel: Tensor<T>, bias: Tensor<T> },
    Relu,
    /// Softmax over the last axis.
    Softmax,
}

/// What a forward pass keeps for the matching backward pass.
#[derive(Debug, Clone)]
pub enum LayerCache<T> {
    None,
    Conv {
        cols: Vec<T>,
        in_shape: Vec<usize>,
    },
    Pool {
        argmax: Vec<usize>,
        in_shape: Vec<usize>,
    },
    Norm {
        x_hat: Vec<T>,
        inv_std: Vec<T>,
        /// Whether batch statistics were used (train mode).
        batch: bool,
        batch_mean: Vec<T>,
        batch_var: Vec<T>,
    },
    /// Elementwise multiplier: ReLU derivative or scaled dropout mask.
    Mask(Vec<T>),
    Reshape(Vec<usize>),
    Dense(Tensor<T>),
    Softmax(Tensor<T>),
}

fn shape_err(layer: &str, shape: &[usize]) -> NnError {
    NnError::ShapeMismatch(format!("{layer} cannot take input of shape {shape:?}"))
}

fn conv_dims(shape: &[usize], kernel: &Tensor<impl Scalar>) -> Result<(usize, usize, usize, usize, usize), NnError> {
    match *shape {
        [n, h, w, c] if h >= 3 && w >= 3 && c == kernel.shape()[2] => Ok((n, h, w, c, kernel.shape()[3])),
        _ => Err(shape_err("Conv3x3", shape)),
    }
}

impl<T: Scalar> Layer<T> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv3x3 { .. } => "conv",
            Layer::MaxPool2x2 => "maxpool",
            Layer::BatchNorm { .. } => "batchnorm",
            Layer::Dropout { .. } => "dropout",
            Layer::Flatten => "flatten",
            Layer::Dense { .. } => "dense",
            Layer::Relu => "relu",
            Layer::Softmax => "softmax",
        }
    }

    /// Trainable parameters, in the order gradients are reported.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Conv3x3 { kernel, bias } | Layer::Dense { kernel, bias } => vec![kernel, bias],
            Layer::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Conv3x3 { kernel, bias } | Layer::Dense { kernel, bias } => vec![kernel, bias],
            Layer::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            _ => vec![],
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Layer::Conv3x3 { .. } | Layer::Dense { .. } => &["kernel", "bias"],
            Layer::BatchNorm { .. } => &["gamma", "beta"],
            _ => &[],
        }
    }

    /// Every persisted tensor: trainable parameters plus running statistics.
    pub fn state(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match self {
            Layer::BatchNorm {
                gamma,
                beta,
                moving_mean,
                moving_var,
                ..
            } => vec![
                ("gamma", gamma),
                ("beta", beta),
                ("moving_mean", moving_mean),
                ("moving_variance", moving_var),
            ],
            _ => self.param_names().iter().copied().zip(self.params()).collect(),
        }
    }

    pub fn state_mut(&mut self) -> Vec<(&'static str, &mut Tensor<T>)> {
        match self {
            Layer::BatchNorm {
                gamma,
                beta,
                moving_mean,
                moving_var,
                ..
            } => vec![
                ("gamma", gamma),
                ("beta", beta),
                ("moving_mean", moving_mean),
                ("moving_variance", moving_var),
            ],
            Layer::Conv3x3 { kernel, bias } | Layer::Dense { kernel, bias } => {
                vec![("kernel", kernel), ("bias", bias)]
            }
            _ => vec![],
        }
    }

    pub fn forward(
        &self,
        x: Tensor<T>,
        mode: Mode,
        rng: &mut NnRng,
    ) -> Result<(Tensor<T>, LayerCache<T>), NnError> {
        match self {
            Layer::Conv3x3 { kernel, bias } => conv_forward(kernel, bias, x),
            Layer::MaxPool2x2 => pool_forward(x),
            Layer::BatchNorm {
                gamma,
                beta,
                moving_mean,
                moving_var,
                epsilon,
                ..
            } => norm_forward(x, gamma, beta, moving_mean, moving_var, *epsilon, mode),
            Layer::Dropout { rate } => {
                if mode == Mode::Eval || *rate == 0.0 {
                    return Ok((x, LayerCache::None));
                }
                let keep = 1.0 - rate;
                let scale = T::from_f64_lossy(1.0 / keep);
                let mask: Vec<T> = (0..x.len())
                    .map(|_| if rng.random::<f64>() < keep { scale } else { T::zero() })
                    .collect();
                let mut y = x;
                for (v, m) in y.data_mut().iter_mut().zip(&mask) {
                    *v *= *m;
                }
                Ok((y, LayerCache::Mask(mask)))
            }
            Layer::Flatten => {
                let shape = x.shape().to_vec();
                if shape.len() < 2 {
                    return Err(shape_err("Flatten", &shape));
                }
                let flat = shape[1..].iter().product();
                Ok((x.reshaped(&[shape[0], flat])?, LayerCache::Reshape(shape)))
            }
            Layer::Dense { kernel, bias } => {
                let (n, inputs) = match *x.shape() {
                    [n, i] if i == kernel.shape()[0] => (n, i),
                    _ => return Err(shape_err("Dense", x.shape())),
                };
                let outputs = kernel.shape()[1];
                let mut y = Vec::with_capacity(n * outputs);
                for _ in 0..n {
                    y.extend_from_slice(bias.data());
                }
                matmul(n, inputs, outputs, x.data(), false, kernel.data(), false, &mut y, true);
                Ok((Tensor::from_vec(&[n, outputs], y)?, LayerCache::Dense(x)))
            }
            Layer::Relu => {
                let mut y = x;
                let mask = y
                    .data_mut()
                    .iter_mut()
                    .map(|v| {
                        if *v > T::zero() {
                            T::one()
                        } else {
                            *v = T::zero();
                            T::zero()
                        }
                    })
                    .collect();
                Ok((y, LayerCache::Mask(mask)))
            }
            Layer::Softmax => {
                let width = *x.shape().last().ok_or_else(|| shape_err("Softmax", x.shape()))?;
                let mut y = x;
                for row in y.data_mut().chunks_exact_mut(width) {
                    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                    let mut sum = T::zero();
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    for v in row.iter_mut() {
                        *v = *v / sum;
                    }
                }
                Ok((y.clone(), LayerCache::Softmax(y)))
            }
        }
    }

    /// Returns the input gradient (when `need_input` is set) and one gradient
    /// per trainable parameter.
    pub fn backward(
        &self,
        cache: LayerCache<T>,
        grad: Tensor<T>,
        need_input: bool,
    ) -> Result<(Option<Tensor<T>>, Vec<Tensor<T>>), NnError> {
        match (self, cache) {
            (Layer::Conv3x3 { kernel, .. }, LayerCache::Conv { cols, in_shape }) => {
                conv_backward(kernel, &cols, &in_shape, grad, need_input)
            }
            (Layer::MaxPool2x2, LayerCache::Pool { argmax, in_shape }) => {
                let mut dx = Tensor::zeros(&in_shape);
                let d = dx.data_mut();
                for (&src, &g) in argmax.iter().zip(grad.data()) {
                    d[src] += g;
                }
                Ok((Some(dx), vec![]))
            }
            (
                Layer::BatchNorm { gamma, .. },
                LayerCache::Norm {
                    x_hat,
                    inv_std,
                    batch,
                    ..
                },
            ) => norm_backward(gamma, &x_hat, &inv_std, batch, grad),
            (Layer::Dropout { .. }, LayerCache::None) => Ok((Some(grad), vec![])),
            (Layer::Dropout { .. } | Layer::Relu, LayerCache::Mask(mask)) => {
                let mut dx = grad;
                for (g, m) in dx.data_mut().iter_mut().zip(&mask) {
                    *g *= *m;
                }
                Ok((Some(dx), vec![]))
            }
            (Layer::Flatten, LayerCache::Reshape(shape)) => Ok((Some(grad.reshaped(&shape)?), vec![])),
            (Layer::Dense { kernel, .. }, LayerCache::Dense(input)) => {
                let (n, inputs) = (input.shape()[0], input.shape()[1]);
                let outputs = kernel.shape()[1];
                let mut dk = vec![T::zero(); inputs * outputs];
                matmul(inputs, n, outputs, input.data(), true, grad.data(), false, &mut dk, false);
                let mut db = vec![T::zero(); outputs];
                for row in grad.data().chunks_exact(outputs) {
                    for (b, g) in db.iter_mut().zip(row) {
                        *b += *g;
                    }
                }
                let dx = if need_input {
                    let mut dx = vec![T::zero(); n * inputs];
                    matmul(n, outputs, inputs, grad.data(), false, kernel.data(), true, &mut dx, false);
                    Some(Tensor::from_vec(&[n, inputs], dx)?)
                } else {
                    None
                };
                Ok((
                    dx,
                    vec![
                        Tensor::from_vec(kernel.shape(), dk)?,
                        Tensor::from_vec(&[outputs], db)?,
                    ],
                ))
            }
            (Layer::Softmax, LayerCache::Softmax(y)) => {
                let width = *y.shape().last().unwrap();
                let mut dx = grad;
                for (g, p) in dx
                    .data_mut()
                    .chunks_exact_mut(width)
                    .zip(y.data().chunks_exact(width))
                {
                    let dot: T = g.iter().zip(p).map(|(a, b)| *a * *b).sum();
                    for (gi, pi) in g.iter_mut().zip(p) {
                        *gi = *pi * (*gi - dot);
                    }
                }
                Ok((Some(dx), vec![]))
            }
            (layer, _) => Err(NnError::ShapeMismatch(format!(
                "cache does not belong to a {} layer",
                layer.kind_name()
            ))),
        }
    }
}

fn conv_forward<T: Scalar>(
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    x: Tensor<T>,
) -> Result<(Tensor<T>, LayerCache<T>), NnError> {
    let (n, h, w, c, out_c) = conv_dims(x.shape(), kernel)?;
    let (oh, ow) = (h - 2, w - 2);
    let patch = 9 * c;
    let rows = n * oh * ow;
    let src = x.data();

    // im2col: one row per output pixel, columns ordered (ky, kx, channel)
    let mut cols = vec![T::zero(); rows * patch];
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = ((b * oh + oy) * ow + ox) * patch;
                for ky in 0..3 {
                    let from = ((b * h + oy + ky) * w + ox) * c;
                    let to = row + ky * 3 * c;
                    cols[to..to + 3 * c].copy_from_slice(&src[from..from + 3 * c]);
                }
            }
        }
    }

    let mut y = Vec::with_capacity(rows * out_c);
    for _ in 0..rows {
        y.extend_from_slice(bias.data());
    }
    matmul(rows, patch, out_c, &cols, false, kernel.data(), false, &mut y, true);
    let in_shape = x.shape().to_vec();
    Ok((
        Tensor::from_vec(&[n, oh, ow, out_c], y)?,
        LayerCache::Conv { cols, in_shape },
    ))
}

fn conv_backward<T: Scalar>(
    kernel: &Tensor<T>,
    cols: &[T],
    in_shape: &[usize],
    grad: Tensor<T>,
    need_input: bool,
) -> Result<(Option<Tensor<T>>, Vec<Tensor<T>>), NnError> {
    let (n, h, w, c) = (in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
    let out_c = kernel.shape()[3];
    let (oh, ow) = (h - 2, w - 2);
    let patch = 9 * c;
    let rows = n * oh * ow;
    let g = grad.data();

    let mut dk = vec![T::zero(); patch * out_c];
    matmul(patch, rows, out_c, cols, true, g, false, &mut dk, false);
    let mut db = vec![T::zero(); out_c];
    for row in g.chunks_exact(out_c) {
        for (b, v) in db.iter_mut().zip(row) {
            *b += *v;
        }
    }

    let dx = if need_input {
        let mut dcols = vec![T::zero(); rows * patch];
        matmul(rows, out_c, patch, g, false, kernel.data(), true, &mut dcols, false);
        let mut dx = vec![T::zero(); n * h * w * c];
        for b in 0..n {
            for oy in 0..oh {
                for ox in 0..ow {
                    let row = ((b * oh + oy) * ow + ox) * patch;
                    for ky in 0..3 {
                        let to = ((b * h + oy + ky) * w + ox) * c;
                        let from = row + ky * 3 * c;
                        for (d, s) in dx[to..to + 3 * c].iter_mut().zip(&dcols[from..from + 3 * c]) {
                            *d += *s;
                        }
                    }
                }
            }
        }
        Some(Tensor::from_vec(in_shape, dx)?)
    } else {
        None
    };
    Ok((
        dx,
        vec![
            Tensor::from_vec(kernel.shape(), dk)?,
            Tensor::from_vec(&[out_c], db)?,
        ],
    ))
}

fn pool_forward<T: Scalar>(x: Tensor<T>) -> Result<(Tensor<T>, LayerCache<T>), NnError> {
    let (n, h, w, c) = match *x.shape() {
        [n, h, w, c] if h >= 2 && w >= 2 => (n, h, w, c),
        _ => return Err(shape_err("MaxPool2x2", x.shape())),
    };
    let (oh, ow) = (h / 2, w / 2);
    let src = x.data();
    let mut y = Vec::with_capacity(n * oh * ow * c);
    let mut argmax = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = ((b * h + 2 * oy) * w + 2 * ox) * c + ch;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = ((b * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                        // first maximum wins ties
                        if src[idx] > src[best] {
                            best = idx;
                        }
                    }
                    y.push(src[best]);
                    argmax.push(best);
                }
            }
        }
    }
    Ok((
        Tensor::from_vec(&[n, oh, ow, c], y)?,
        LayerCache::Pool {
            argmax,
            in_shape: x.shape().to_vec(),
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn norm_forward<T: Scalar>(
    x: Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    moving_mean: &Tensor<T>,
    moving_var: &Tensor<T>,
    epsilon: f64,
    mode: Mode,
) -> Result<(Tensor<T>, LayerCache<T>), NnError> {
    let c = gamma.len();
    if x.shape().len() < 2 || *x.shape().last().unwrap() != c {
        return Err(shape_err("BatchNorm", x.shape()));
    }
    let m = x.len() / c;
    let eps = T::from_f64_lossy(epsilon);
    let batch = mode == Mode::Train;

    let (mean, var) = if batch {
        let inv_m = T::one() / T::from_usize(m).unwrap();
        let mut mean = vec![T::zero(); c];
        for row in x.data().chunks_exact(c) {
            for (s, v) in mean.iter_mut().zip(row) {
                *s += *v;
            }
        }
        mean.iter_mut().for_each(|s| *s = *s * inv_m);
        let mut var = vec![T::zero(); c];
        for row in x.data().chunks_exact(c) {
            for ((s, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                let d = *v - *mu;
                *s += d * d;
            }
        }
        var.iter_mut().for_each(|s| *s = *s * inv_m);
        (mean, var)
    } else {
        (moving_mean.data().to_vec(), moving_var.data().to_vec())
    };

    let inv_std: Vec<T> = var.iter().map(|v| T::one() / (*v + eps).sqrt()).collect();
    let shape = x.shape().to_vec();
    let mut x_hat = x.into_data();
    let mut y = Vec::with_capacity(x_hat.len());
    for row in x_hat.chunks_exact_mut(c) {
        for (ch, v) in row.iter_mut().enumerate() {
            *v = (*v - mean[ch]) * inv_std[ch];
            y.push(*v * gamma.data()[ch] + beta.data()[ch]);
        }
    }
    let y = Tensor::from_vec(&shape, y)?;
    Ok((
        y,
        LayerCache::Norm {
            x_hat,
            inv_std,
            batch,
            batch_mean: mean,
            batch_var: var,
        },
    ))
}

fn norm_backward<T: Scalar>(
    gamma: &Tensor<T>,
    x_hat: &[T],
    inv_std: &[T],
    batch: bool,
    grad: Tensor<T>,
) -> Result<(Option<Tensor<T>>, Vec<Tensor<T>>), NnError> {
    let c = gamma.len();
    let shape = grad.shape().to_vec();
    let g = grad.data();
    let m = g.len() / c;

    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for (grow, xrow) in g.chunks_exact(c).zip(x_hat.chunks_exact(c)) {
        for ch in 0..c {
            dgamma[ch] += grow[ch] * xrow[ch];
            dbeta[ch] += grow[ch];
        }
    }

    let mut dx = Vec::with_capacity(g.len());
    if batch {
        let inv_m = T::one() / T::from_usize(m).unwrap();
        // d x = gamma * inv_std / m * (m * dy - sum(dy) - x_hat * sum(dy * x_hat))
        for (grow, xrow) in g.chunks_exact(c).zip(x_hat.chunks_exact(c)) {
            for ch in 0..c {
                let scale = gamma.data()[ch] * inv_std[ch];
                dx.push(scale * (grow[ch] - dbeta[ch] * inv_m - xrow[ch] * dgamma[ch] * inv_m));
            }
        }
    } else {
        for grow in g.chunks_exact(c) {
            for ch in 0..c {
                dx.push(grow[ch] * gamma.data()[ch] * inv_std[ch]);
            }
        }
    }
    Ok((
        Some(Tensor::from_vec(&shape, dx)?),
        vec![
            Tensor::from_vec(&[c], dgamma)?,
            Tensor::from_vec(&[c], dbeta)?,
        ],
    ))
}
