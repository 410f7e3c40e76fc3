//! End-to-end comparison of the embedding models on a synthetic corpus.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{cmvn_normalize, extract_same_pairs, synth_generate, vocab_filter, PadConfig};
use crate::data::{OverflowPolicy, SegmentArchive, SynthConfig, Vocabulary};
use crate::dimred::{lda_fit, lda_transform, DEFAULT_SHRINKAGE};
use crate::embedding::EmbeddingSet;
use crate::eval::{average_precision, score_pairs_cosine, score_pairs_dtw};
use crate::losses::LossConfig;
use crate::models::{
    embed, train_classifier, train_siamese, Architecture, ModelKind, ModelSpec, Tap, TrainConfig,
    Trained,
};
use crate::optim::AdadeltaConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentModel {
    /// DTW on the CMVN-normalized frames.
    Dtw,
    ClassifierDnn,
    ClassifierCnn,
    ClassifierCnnBottleneck,
    SiameseCoscos2,
    SiameseCosHinge,
    /// Cos-hinge embeddings projected with LDA fitted on the training set.
    SiameseCosHingeLda,
}

impl ExperimentModel {
    pub const ALL: [ExperimentModel; 7] = [
        ExperimentModel::Dtw,
        ExperimentModel::ClassifierDnn,
        ExperimentModel::ClassifierCnn,
        ExperimentModel::ClassifierCnnBottleneck,
        ExperimentModel::SiameseCoscos2,
        ExperimentModel::SiameseCosHinge,
        ExperimentModel::SiameseCosHingeLda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentModel::Dtw => "dtw",
            ExperimentModel::ClassifierDnn => "classifier_dnn",
            ExperimentModel::ClassifierCnn => "classifier_cnn",
            ExperimentModel::ClassifierCnnBottleneck => "classifier_cnn_bottleneck",
            ExperimentModel::SiameseCoscos2 => "siamese_coscos2",
            ExperimentModel::SiameseCosHinge => "siamese_cos_hinge",
            ExperimentModel::SiameseCosHingeLda => "siamese_cos_hinge_lda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Narrow layers that train quickly on a CPU.
    #[default]
    Desk,
    /// Full-size layer widths.
    Full,
}

impl Scale {
    pub fn architecture(self, kind: ModelKind) -> Architecture {
        match self {
            Scale::Desk => Architecture::desk(kind),
            Scale::Full => Architecture::full(kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    /// Seed of the synthetic corpus; shared by every model and run.
    pub corpus_seed: u64,
    /// One training run per seed for every trainable model.
    pub seeds: Vec<u64>,
    pub scale: Scale,
    /// Replaces the scale's convolutional layer widths when present.
    pub cnn_architecture: Option<Architecture>,
    pub n_pad: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adadelta: AdadeltaConfig,
    pub margin: f64,
    /// Siamese embedding width.
    pub siamese_dim: usize,
    pub bottleneck_dim: usize,
    /// LDA output width; `min(10, classes − 1)` when absent.
    pub lda_dim: Option<usize>,
    pub min_count: usize,
    pub classifier_tap: Tap,
    pub models: Vec<ExperimentModel>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            corpus_seed: 1,
            seeds: vec![1, 2, 3, 4, 5],
            scale: Scale::Desk,
            cnn_architecture: None,
            n_pad: 120,
            batch_size: 32,
            max_epochs: 30,
            patience: 6,
            adadelta: AdadeltaConfig::default(),
            margin: 0.15,
            siamese_dim: 12,
            bottleneck_dim: 16,
            lda_dim: None,
            min_count: 2,
            classifier_tap: Tap::SoftmaxOutput,
            models: ExperimentModel::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("model list is empty".into()));
        }
        if self.siamese_dim == 0 || self.bottleneck_dim == 0 || self.lda_dim == Some(0) {
            return Err(Error::Config("embedding widths must be >= 1".into()));
        }
        self.train_config(1, LossConfig::cross_entropy()).validate()
    }

    pub fn architecture(&self, kind: ModelKind) -> Architecture {
        match (&self.cnn_architecture, kind) {
            (Some(arch), ModelKind::ClassifierCnn | ModelKind::SiameseCnn) => arch.clone(),
            _ => self.scale.architecture(kind),
        }
    }

    pub fn pad(&self) -> PadConfig {
        PadConfig {
            n_pad: self.n_pad,
            overflow: OverflowPolicy::Error,
        }
    }

    pub fn train_config(&self, seed: u64, loss: LossConfig) -> TrainConfig {
        TrainConfig {
            seed,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            adadelta: self.adadelta,
            loss,
            pad: self.pad(),
            tap: None,
        }
    }
}

/// CMVN-normalized splits with the training vocabulary.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub train: SegmentArchive,
    pub vocab: Vocabulary,
    pub dev: SegmentArchive,
    pub test: SegmentArchive,
}

impl PreparedCorpus {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let corpus = synth_generate(&config.synth, config.corpus_seed)?;
        let (train, vocab) = vocab_filter(&cmvn_normalize(&corpus.train), config.min_count)?;
        Ok(Self {
            train,
            vocab,
            dev: cmvn_normalize(&corpus.dev),
            test: cmvn_normalize(&corpus.test),
        })
    }

    /// Uses archives that are already normalized.
    pub fn from_archives(
        train: &SegmentArchive,
        dev: SegmentArchive,
        test: SegmentArchive,
        min_count: usize,
    ) -> Result<Self> {
        let (train, vocab) = vocab_filter(train, min_count)?;
        Ok(Self {
            train,
            vocab,
            dev,
            test,
        })
    }
}

fn test_ap(embeddings: &EmbeddingSet) -> Result<f64> {
    Ok(average_precision(&score_pairs_cosine(embeddings)?)?.ap)
}

/// Trains one classifier of the given kind.
pub fn fit_classifier(
    config: &ExperimentConfig,
    corpus: &PreparedCorpus,
    kind: ModelKind,
    bottleneck: Option<usize>,
    seed: u64,
) -> Result<Trained> {
    let spec = ModelSpec::build(
        kind,
        &config.architecture(kind),
        corpus.train.dim(),
        config.n_pad,
        corpus.vocab.len(),
        bottleneck,
    )?;
    let mut train_config = config.train_config(seed, LossConfig::cross_entropy());
    train_config.tap = Some(config.classifier_tap);
    train_classifier(&corpus.train, &corpus.vocab, &corpus.dev, &spec, &train_config)
}

/// Trains one Siamese network with embedding width `dim`.
pub fn fit_siamese(
    config: &ExperimentConfig,
    corpus: &PreparedCorpus,
    loss: LossConfig,
    dim: usize,
    seed: u64,
) -> Result<Trained> {
    let kind = ModelKind::SiameseCnn;
    let spec = ModelSpec::build(
        kind,
        &config.architecture(kind),
        corpus.train.dim(),
        config.n_pad,
        dim,
        None,
    )?;
    let pairs = extract_same_pairs(&corpus.train);
    train_siamese(&corpus.train, &pairs, &corpus.dev, &spec, &config.train_config(seed, loss))
}

/// Test-set result of one model and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub model: ExperimentModel,
    pub seed: u64,
    pub dim: usize,
    pub ap: f64,
}

/// Runs every configured model once with `seed`, in configuration order.
/// The LDA row reuses the cos-hinge network of the same seed.
pub fn run_seed(config: &ExperimentConfig, corpus: &PreparedCorpus, seed: u64) -> Result<Vec<RunResult>> {
    let pad = config.pad();
    let mut hinge: Option<Trained> = None;
    let mut results = Vec::with_capacity(config.models.len());
    for &model in &config.models {
        log::info!("seed {seed}: {}", model.name());
        let (dim, ap) = match model {
            ExperimentModel::Dtw => (
                corpus.test.dim(),
                average_precision(&score_pairs_dtw(&corpus.test)?)?.ap,
            ),
            ExperimentModel::ClassifierDnn
            | ExperimentModel::ClassifierCnn
            | ExperimentModel::ClassifierCnnBottleneck => {
                let (kind, bottleneck) = match model {
                    ExperimentModel::ClassifierDnn => (ModelKind::ClassifierDnn, None),
                    ExperimentModel::ClassifierCnn => (ModelKind::ClassifierCnn, None),
                    _ => (ModelKind::ClassifierCnn, Some(config.bottleneck_dim)),
                };
                let tap = if bottleneck.is_some() {
                    Tap::Bottleneck
                } else {
                    config.classifier_tap
                };
                let trained = fit_classifier(config, corpus, kind, bottleneck, seed)?;
                let e = embed(&trained.model, &corpus.test, tap, &pad)?;
                (e.dim(), test_ap(&e)?)
            }
            ExperimentModel::SiameseCoscos2 => {
                let trained = fit_siamese(config, corpus, LossConfig::coscos2(), config.siamese_dim, seed)?;
                let e = embed(&trained.model, &corpus.test, Tap::FinalLinear, &pad)?;
                (e.dim(), test_ap(&e)?)
            }
            ExperimentModel::SiameseCosHinge | ExperimentModel::SiameseCosHingeLda => {
                if hinge.is_none() {
                    hinge = Some(fit_siamese(
                        config,
                        corpus,
                        LossConfig::cos_hinge(config.margin),
                        config.siamese_dim,
                        seed,
                    )?);
                }
                let trained = hinge.as_ref().expect("trained above");
                let e = embed(&trained.model, &corpus.test, Tap::FinalLinear, &pad)?;
                if model == ExperimentModel::SiameseCosHinge {
                    (e.dim(), test_ap(&e)?)
                } else {
                    let train_e = embed(&trained.model, &corpus.train, Tap::FinalLinear, &pad)?;
                    let target = config
                        .lda_dim
                        .unwrap_or_else(|| 10.min(corpus.vocab.len().saturating_sub(1)).max(1));
                    let lda = lda_fit(&train_e, target, DEFAULT_SHRINKAGE)?;
                    let projected = lda_transform(&lda, &e)?;
                    (projected.dim(), test_ap(&projected)?)
                }
            }
        };
        log::info!("seed {seed}: {} AP {ap:.4} (dim {dim})", model.name());
        results.push(RunResult {
            model,
            seed,
            dim,
            ap,
        });
    }
    Ok(results)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: ExperimentModel,
    pub dim: usize,
    pub ap_mean: f64,
    pub ap_std: f64,
    pub per_seed: Vec<f64>,
}

/// Collapses per-seed results into one row per model, in configuration
/// order.
pub fn summarize(models: &[ExperimentModel], results: &[RunResult]) -> Vec<ResultRow> {
    models
        .iter()
        .map(|&model| {
            let runs: Vec<&RunResult> = results.iter().filter(|r| r.model == model).collect();
            let per_seed: Vec<f64> = runs.iter().map(|r| r.ap).collect();
            let (ap_mean, ap_std) = mean_std(&per_seed);
            ResultRow {
                model,
                dim: runs.first().map_or(0, |r| r.dim),
                ap_mean,
                ap_std,
                per_seed,
            }
        })
        .collect()
}

/// Trains and evaluates every configured model over the seed list.
pub fn run_reference_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let corpus = PreparedCorpus::new(config)?;
    let mut results = Vec::new();
    for &seed in &config.seeds {
        results.extend(run_seed(config, &corpus, seed)?);
    }
    Ok(summarize(&config.models, &results))
}

/// `model,dim,ap_mean,ap_std`.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    writeln!(w, "model,dim,ap_mean,ap_std")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.model.name(), r.dim, r.ap_mean, r.ap_std)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    /// Width of the final linear layer of a cos-hinge Siamese network.
    Siamese,
    /// Width of the linear bottleneck of a CNN classifier.
    Bottleneck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: SweepFamily,
    pub dim: usize,
    pub ap_mean: f64,
    pub ap_std: f64,
    pub per_seed: Vec<f64>,
}

/// Test AP against embedding width.
pub fn sweep_dims(
    config: &ExperimentConfig,
    corpus: &PreparedCorpus,
    family: SweepFamily,
    dims: &[usize],
) -> Result<Vec<SweepRow>> {
    let pad = config.pad();
    dims.iter()
        .map(|&dim| {
            let per_seed = config
                .seeds
                .iter()
                .map(|&seed| {
                    let (trained, tap) = match family {
                        SweepFamily::Siamese => (
                            fit_siamese(config, corpus, LossConfig::cos_hinge(config.margin), dim, seed)?,
                            Tap::FinalLinear,
                        ),
                        SweepFamily::Bottleneck => (
                            fit_classifier(config, corpus, ModelKind::ClassifierCnn, Some(dim), seed)?,
                            Tap::Bottleneck,
                        ),
                    };
                    let ap = test_ap(&embed(&trained.model, &corpus.test, tap, &pad)?)?;
                    log::info!("sweep {family:?} dim {dim} seed {seed}: AP {ap:.4}");
                    Ok(ap)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (ap_mean, ap_std) = mean_std(&per_seed);
            Ok(SweepRow {
                family,
                dim,
                ap_mean,
                ap_std,
                per_seed,
            })
        })
        .collect()
}

/// `family,dim,ap_mean,ap_std`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "family,dim,ap_mean,ap_std")?;
    for r in rows {
        let family = match r.family {
            SweepFamily::Siamese => "siamese",
            SweepFamily::Bottleneck => "bottleneck",
        };
        writeln!(w, "{family},{},{},{}", r.dim, r.ap_mean, r.ap_std)?;
    }
    Ok(())
}
