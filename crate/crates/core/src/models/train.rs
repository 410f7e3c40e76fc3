use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{embed_padded, Model, ModelSpec, Tap};
use crate::data::{
    extract_same_pairs, pad_segment, sample_different_pairs, sample_triplets, PadConfig, PairSet,
    SegmentArchive, Vocabulary,
};
use crate::eval::{average_precision, score_pairs_cosine};
use crate::losses::{
    coscos2_grad, cross_entropy_loss, hinge_grad, softmax_cross_entropy_grad, LossConfig, LossKind,
};
use crate::net::{Gradients, Matrix, NetworkParams};
use crate::optim::{adadelta_step, AdadeltaConfig, AdadeltaState};
use crate::{Error, Result};

/// Minibatches are reduced over this many fixed chunks so gradient sums do
/// not depend on the number of worker threads.
const REDUCE_CHUNKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without dev-AP improvement before stopping.
    pub patience: usize,
    pub adadelta: AdadeltaConfig,
    pub loss: LossConfig,
    pub pad: PadConfig,
    /// Embedding tap used for dev-set model selection; the model's default
    /// when absent.
    pub tap: Option<Tap>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            batch_size: 100,
            max_epochs: 50,
            patience: 5,
            adadelta: AdadeltaConfig::default(),
            loss: LossConfig::cos_hinge(0.15),
            pad: PadConfig::default(),
            tap: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        self.adadelta.validate()?;
        self.loss.validate()?;
        self.pad.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_ap: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Dev AP of the randomly initialized network.
    pub initial_dev_ap: f64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
    pub best_dev_ap: f64,
}

impl TrainHistory {
    /// `epoch,train_loss,dev_ap` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,dev_ap\n");
        out.push_str(&format!("0,,{}\n", self.initial_dev_ap));
        for r in &self.epochs {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.dev_ap));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: Model,
    pub history: TrainHistory,
}

fn pad_all(archive: &SegmentArchive, pad: &PadConfig) -> Result<Vec<Matrix>> {
    archive
        .segments()
        .par_iter()
        .map(|s| pad_segment(s, pad))
        .collect()
}

fn check_input(spec: &ModelSpec, archive: &SegmentArchive, pad: &PadConfig, what: &str) -> Result<()> {
    if archive.dim() != spec.input_dim || pad.n_pad != spec.n_pad {
        return Err(Error::Config(format!(
            "{what} archive is {}-dimensional padded to {}, model expects {} × {}",
            archive.dim(),
            pad.n_pad,
            spec.input_dim,
            spec.n_pad
        )));
    }
    Ok(())
}

/// Sums per-item losses and gradients over a minibatch, in a fixed order.
fn batch_gradients<T, F>(params: &NetworkParams, items: &[T], per_item: F) -> Result<(f64, Gradients)>
where
    T: Sync,
    F: Fn(&T) -> Result<(f64, Gradients)> + Sync,
{
    let chunk = items.len().div_ceil(REDUCE_CHUNKS).max(1);
    let partials: Vec<(f64, Gradients)> = items
        .par_chunks(chunk)
        .map(|c| {
            let mut loss = 0.0;
            let mut grads = Gradients::zeros_like(params);
            for item in c {
                let (l, g) = per_item(item)?;
                loss += l;
                grads.add_assign(&g);
            }
            Ok((loss, grads))
        })
        .collect::<Result<_>>()?;
    let mut loss = 0.0;
    let mut grads = Gradients::zeros_like(params);
    for (l, g) in partials {
        loss += l;
        grads.add_assign(&g);
    }
    let n = items.len() as f64;
    grads.scale(1.0 / n);
    Ok((loss / n, grads))
}

/// Dev-set AP of embeddings taken at `tap`.
fn dev_ap(model: &Model, dev_inputs: &[Matrix], dev: &SegmentArchive, tap: Tap) -> Result<f64> {
    let embeddings = embed_padded(model, dev_inputs, dev, tap)?;
    Ok(average_precision(&score_pairs_cosine(&embeddings)?)?.ap)
}

/// Early-stopping bookkeeping shared by both trainers.
struct Selection {
    best: NetworkParams,
    history: TrainHistory,
    bad_epochs: usize,
}

impl Selection {
    fn new(params: &NetworkParams, initial_ap: f64) -> Self {
        Self {
            best: params.clone(),
            history: TrainHistory {
                initial_dev_ap: initial_ap,
                epochs: Vec::new(),
                best_epoch: 0,
                best_dev_ap: initial_ap,
            },
            bad_epochs: 0,
        }
    }

    /// Records an epoch; returns `true` when training should stop.
    fn record(&mut self, params: &NetworkParams, record: EpochRecord, patience: usize) -> bool {
        log::info!(
            "epoch {}: train loss {:.6}, dev AP {:.4}",
            record.epoch,
            record.train_loss,
            record.dev_ap
        );
        self.history.epochs.push(record);
        if record.dev_ap > self.history.best_dev_ap {
            self.history.best_dev_ap = record.dev_ap;
            self.history.best_epoch = record.epoch;
            self.best = params.clone();
            self.bad_epochs = 0;
            false
        } else {
            self.bad_epochs += 1;
            self.bad_epochs >= patience
        }
    }
}

/// Trains a word classifier with minibatch ADADELTA on cross-entropy,
/// keeping the parameters of the epoch with the best dev-set AP.
///
/// Every training label must belong to `vocab`, and the model head must
/// match the vocabulary size.
pub fn train_classifier(
    train: &SegmentArchive,
    vocab: &Vocabulary,
    dev: &SegmentArchive,
    spec: &ModelSpec,
    config: &TrainConfig,
) -> Result<Trained> {
    config.validate()?;
    if !spec.kind.is_classifier() {
        return Err(Error::Config(format!("{:?} is not a classifier", spec.kind)));
    }
    if train.is_empty() {
        return Err(Error::Data("training archive is empty".into()));
    }
    if vocab.len() < 2 {
        return Err(Error::Data(format!(
            "classifier needs at least 2 word types, vocabulary has {}",
            vocab.len()
        )));
    }
    if spec.head_dim != vocab.len() {
        return Err(Error::Config(format!(
            "softmax size {} does not match vocabulary size {}",
            spec.head_dim,
            vocab.len()
        )));
    }
    if config.loss.kind != LossKind::CrossEntropy {
        return Err(Error::Config("classifiers train with the cross-entropy loss".into()));
    }
    check_input(spec, train, &config.pad, "training")?;
    check_input(spec, dev, &config.pad, "dev")?;
    let targets: Vec<usize> = train
        .iter()
        .map(|s| {
            vocab.class_of(&s.word_label).ok_or_else(|| {
                Error::Data(format!("training label '{}' not in vocabulary", s.word_label))
            })
        })
        .collect::<Result<_>>()?;
    let tap = config.tap.unwrap_or(spec.default_tap());
    spec.tap_depth(tap)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = NetworkParams::init(spec.input_shape(), &spec.layers, &mut rng)?;
    let mut model = Model {
        spec: spec.clone(),
        params,
        vocabulary: Some(vocab.labels().into_iter().map(String::from).collect()),
    };
    let inputs = pad_all(train, &config.pad)?;
    let dev_inputs = pad_all(dev, &config.pad)?;
    let mut state = AdadeltaState::new(&model.params);
    let mut selection = Selection::new(&model.params, dev_ap(&model, &dev_inputs, dev, tap)?);

    let logits_depth = spec.layers.len() - 1;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let params = &model.params;
            let (loss, grads) = batch_gradients(params, batch, |&i| {
                let trace = params.forward(&inputs[i])?;
                let probs = trace.output().as_slice();
                let loss = cross_entropy_loss(probs, targets[i])?;
                let g = Matrix::column(softmax_cross_entropy_grad(probs, targets[i])?);
                let (grads, _) = params.backward_from(&trace, logits_depth, &g)?;
                Ok((loss, grads))
            })?;
            epoch_loss += loss * batch.len() as f64;
            adadelta_step(&mut model.params, &grads, &mut state, &config.adadelta)?;
        }
        let record = EpochRecord {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            dev_ap: dev_ap(&model, &dev_inputs, dev, tap)?,
        };
        if selection.record(&model.params, record, config.patience) {
            break;
        }
    }
    model.params = selection.best;
    Ok(Trained {
        model,
        history: selection.history,
    })
}

/// Siamese training items for one epoch.
enum SiameseItem {
    Triplet(usize, usize, usize),
    Pair(usize, usize, bool),
}

/// Trains a Siamese network with tied branches: every branch runs the same
/// parameter store, and gradients from all branches are summed into it.
///
/// The cos-hinge loss consumes one triplet per same-type pair per epoch;
/// coscos² consumes each same-type pair plus one sampled different-type
/// pair.
pub fn train_siamese(
    train: &SegmentArchive,
    pairs: &PairSet,
    dev: &SegmentArchive,
    spec: &ModelSpec,
    config: &TrainConfig,
) -> Result<Trained> {
    config.validate()?;
    if spec.kind.is_classifier() {
        return Err(Error::Config(format!("{:?} is not a Siamese model", spec.kind)));
    }
    if pairs.is_empty() {
        return Err(Error::Data("no same-type training pairs".into()));
    }
    pairs.validate(train)?;
    let kind = config.loss.kind;
    if kind == LossKind::CrossEntropy {
        return Err(Error::Config(
            "Siamese models train with the coscos2 or cos-hinge loss".into(),
        ));
    }
    check_input(spec, train, &config.pad, "training")?;
    check_input(spec, dev, &config.pad, "dev")?;
    let tap = config.tap.unwrap_or(spec.default_tap());
    spec.tap_depth(tap)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = NetworkParams::init(spec.input_shape(), &spec.layers, &mut rng)?;
    let mut model = Model {
        spec: spec.clone(),
        params,
        vocabulary: None,
    };
    let inputs = pad_all(train, &config.pad)?;
    let dev_inputs = pad_all(dev, &config.pad)?;
    let mut state = AdadeltaState::new(&model.params);
    let mut selection = Selection::new(&model.params, dev_ap(&model, &dev_inputs, dev, tap)?);

    let margin = config.loss.margin.unwrap_or(0.0);
    let distance = config.loss.distance;
    for epoch in 1..=config.max_epochs {
        let mut items: Vec<SiameseItem> = match kind {
            LossKind::CosHinge => sample_triplets(pairs, train, &mut rng)?
                .triplets
                .into_iter()
                .map(|(a, s, d)| SiameseItem::Triplet(a, s, d))
                .collect(),
            _ => {
                let negatives = sample_different_pairs(pairs, train, &mut rng)?;
                pairs
                    .pairs
                    .iter()
                    .map(|&(a, b)| SiameseItem::Pair(a, b, true))
                    .chain(negatives.into_iter().map(|(a, b)| SiameseItem::Pair(a, b, false)))
                    .collect()
            }
        };
        items.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for batch in items.chunks(config.batch_size) {
            let params = &model.params;
            let branch = |i: usize| -> Result<_> {
                let trace = params.forward(&inputs[i])?;
                let out = trace.output().as_slice().to_vec();
                Ok((trace, out))
            };
            let (loss, grads) = batch_gradients(params, batch, |item| match *item {
                SiameseItem::Triplet(a, s, d) => {
                    let (ta, xa) = branch(a)?;
                    let (ts, xs) = branch(s)?;
                    let (td, xd) = branch(d)?;
                    let g = hinge_grad(distance, &xa, &xs, &xd, margin)?;
                    let mut grads = Gradients::zeros_like(params);
                    if g.loss > 0.0 {
                        for (trace, grad) in [(ta, g.anchor), (ts, g.same), (td, g.different)] {
                            let (gb, _) = params.backward(&trace, &Matrix::column(grad))?;
                            grads.add_assign(&gb);
                        }
                    }
                    Ok((g.loss, grads))
                }
                SiameseItem::Pair(a, b, same) => {
                    let (ta, xa) = branch(a)?;
                    let (tb, xb) = branch(b)?;
                    let (loss, ga, gb) = coscos2_grad(&xa, &xb, same)?;
                    let (mut grads, _) = params.backward(&ta, &Matrix::column(ga))?;
                    let (g2, _) = params.backward(&tb, &Matrix::column(gb))?;
                    grads.add_assign(&g2);
                    Ok((loss, grads))
                }
            })?;
            epoch_loss += loss * batch.len() as f64;
            adadelta_step(&mut model.params, &grads, &mut state, &config.adadelta)?;
        }
        let record = EpochRecord {
            epoch,
            train_loss: epoch_loss / items.len() as f64,
            dev_ap: dev_ap(&model, &dev_inputs, dev, tap)?,
        };
        if selection.record(&model.params, record, config.patience) {
            break;
        }
    }
    model.params = selection.best;
    Ok(Trained {
        model,
        history: selection.history,
    })
}

/// Convenience wrapper: all same-type pairs of `train` as supervision.
pub fn train_siamese_on_labels(
    train: &SegmentArchive,
    dev: &SegmentArchive,
    spec: &ModelSpec,
    config: &TrainConfig,
) -> Result<Trained> {
    let pairs = extract_same_pairs(train);
    train_siamese(train, &pairs, dev, spec, config)
}
