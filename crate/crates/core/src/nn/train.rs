use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{ClassProbabilities, Grads, Mode, ModelCheckpoint, ModelSpec, Network, NnError, NnRng, Scalar, Tensor};
use crate::dsp::{FeatureKind, FeatureMap, MAP_SIDE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    SgdMomentum { momentum: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            learning_rate: 0.01,
            batch_size: 64,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(NnError::InvalidConfig("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if let OptimizerKind::SgdMomentum { momentum } = self.optimizer {
            if !(0.0..1.0).contains(&momentum) {
                return Err(NnError::InvalidConfig(format!("momentum {momentum} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Plain SGD (`w -= lr * g`) or heavy-ball momentum (`v = mu * v - lr * g; w += v`).
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    learning_rate: T,
    velocity: Option<Grads<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            learning_rate: T::from_f64_lossy(learning_rate),
            velocity: None,
        }
    }

    pub fn step(&mut self, net: &mut Network<T>, grads: &Grads<T>) {
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (layer, lg) in net.layers_mut().iter_mut().zip(grads) {
                    for (p, g) in layer.params_mut().into_iter().zip(lg) {
                        for (w, d) in p.data_mut().iter_mut().zip(g.data()) {
                            *w -= lr * *d;
                        }
                    }
                }
            }
            OptimizerKind::SgdMomentum { momentum } => {
                let mu = T::from_f64_lossy(momentum);
                let velocity = self.velocity.get_or_insert_with(|| {
                    grads
                        .iter()
                        .map(|lg| lg.iter().map(|g| Tensor::zeros(g.shape())).collect())
                        .collect()
                });
                for ((layer, lg), lv) in net.layers_mut().iter_mut().zip(grads).zip(velocity.iter_mut()) {
                    for ((p, g), v) in layer.params_mut().into_iter().zip(lg).zip(lv.iter_mut()) {
                        for ((w, d), vel) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                            *vel = mu * *vel - lr * *d;
                            *w += *vel;
                        }
                    }
                }
            }
        }
    }
}

impl<T: Scalar> Network<T> {
    /// One optimizer step on a batch in train mode; returns the mean batch loss.
    /// Batch-norm running statistics are updated with the layer momentum.
    pub fn train_step(
        &mut self,
        x: Tensor<T>,
        labels: &[usize],
        optimizer: &mut Optimizer<T>,
        rng: &mut NnRng,
    ) -> Result<f64, NnError> {
        let (loss, grads, stats) = self.loss_and_grads(x, labels, Mode::Train, rng)?;
        optimizer.step(self, &grads);
        self.update_running_stats(&stats);
        Ok(loss)
    }
}

/// A network input and its class.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub map: FeatureMap,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub steps: usize,
}

/// Stacks maps into a `(n, 32, 32, 1)` tensor.
pub fn batch_tensor<T: Scalar>(maps: &[&FeatureMap]) -> Tensor<T> {
    let data = maps
        .iter()
        .flat_map(|m| m.values().iter().map(|&v| T::from_f64_lossy(v)))
        .collect();
    Tensor::from_vec(&[maps.len(), MAP_SIDE, MAP_SIDE, 1], data).expect("maps are 32x32")
}

const EVAL_CHUNK: usize = 128;

/// Eval-mode probabilities for every map.
pub fn predict_batch<T: Scalar>(
    net: &Network<T>,
    maps: &[&FeatureMap],
) -> Result<Vec<ClassProbabilities>, NnError> {
    let mut out = Vec::with_capacity(maps.len());
    for chunk in maps.chunks(EVAL_CHUNK) {
        out.extend(ClassProbabilities::from_batch(&net.predict(batch_tensor(chunk))?)?);
    }
    Ok(out)
}

/// Fraction of examples whose eval-mode argmax matches the label.
pub fn accuracy_on<T: Scalar>(net: &Network<T>, examples: &[Example]) -> Result<f64, NnError> {
    if examples.is_empty() {
        return Err(NnError::EmptyDataset("accuracy over no examples"));
    }
    let maps: Vec<&FeatureMap> = examples.iter().map(|e| &e.map).collect();
    let correct = predict_batch(net, &maps)?
        .iter()
        .zip(examples)
        .filter(|(p, e)| p.argmax() == e.label)
        .count();
    Ok(correct as f64 / examples.len() as f64)
}

pub fn train(
    spec: &ModelSpec,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    feature_kind: FeatureKind,
) -> Result<ModelCheckpoint, NnError> {
    train_with_progress(spec, train_set, val_set, cfg, feature_kind, |_| {})
}

/// Trains for `cfg.epochs` epochs with a seeded shuffle per epoch and keeps
/// the weights of the epoch with the best validation accuracy (earliest on ties).
pub fn train_with_progress(
    spec: &ModelSpec,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    feature_kind: FeatureKind,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<ModelCheckpoint, NnError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(NnError::EmptyDataset("training set"));
    }
    if val_set.is_empty() {
        return Err(NnError::EmptyDataset("validation set"));
    }
    let mut net: Network<f32> = Network::new(spec, cfg.seed)?;
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mut rng = NnRng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Network<f32>)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut steps = 0;
        for batch in order.chunks(cfg.batch_size) {
            let maps: Vec<&FeatureMap> = batch.iter().map(|&i| &train_set[i].map).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_set[i].label).collect();
            let loss = net.train_step(batch_tensor(&maps), &labels, &mut optimizer, &mut rng)?;
            loss_sum += loss * batch.len() as f64;
            steps += 1;
        }
        let val_accuracy = accuracy_on(&net, val_set)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_accuracy,
            steps,
        };
        on_epoch(&record);
        history.push(record);
        if best.as_ref().is_none_or(|(acc, _)| val_accuracy > *acc) {
            best = Some((val_accuracy, net.clone()));
        }
    }

    let (_, network) = best.expect("at least one epoch");
    Ok(ModelCheckpoint {
        network,
        feature_kind,
        train_config: cfg.clone(),
        history,
    })
}
