//! Command-line front end. Every subcommand writes only inside `--out`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{
    cmvn_normalize, extract_same_pairs, load_archive, save_archive, synth_generate, vocab_filter,
    PairSet, SynthConfig,
};
use crate::dimred::{lda_fit, lda_transform, LdaModel, DEFAULT_SHRINKAGE};
use crate::embedding::EmbeddingSet;
use crate::eval::{same_different_report, SameDifferentInput, SameDifferentReport};
use crate::experiment::{
    run_reference_experiment, sweep_dims, write_results_csv, write_sweep_csv, ExperimentConfig,
    PreparedCorpus, Scale, SweepFamily,
};
use crate::losses::{Distance, LossConfig, LossKind};
use crate::models::{
    embed, gradient_check_suite, train_classifier, train_siamese, Architecture, Model, ModelKind,
    ModelSpec, Tap, TrainConfig, Trained,
};
use crate::{Error, Result};

/// Siamese embedding width used when neither the config nor a flag sets
/// one and the full scale is selected.
const FULL_EMBEDDING_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelChoice {
    pub scale: Scale,
    /// Replaces the scale's convolutional layer widths.
    pub architecture: Option<Architecture>,
    pub bottleneck: Option<usize>,
    /// Siamese embedding width; 1024 at full scale, the experiment
    /// default otherwise.
    pub embedding_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

/// JSON run configuration. Command-line flags override its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub model: ModelChoice,
    pub min_count: usize,
    pub paths: Paths,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            synth: SynthConfig::default(),
            train: TrainConfig::default(),
            model: ModelChoice::default(),
            min_count: 2,
            paths: Paths::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    fn architecture(&self, kind: ModelKind) -> Architecture {
        match (&self.model.architecture, kind) {
            (Some(a), ModelKind::ClassifierCnn | ModelKind::SiameseCnn) => a.clone(),
            _ => self.model.scale.architecture(kind),
        }
    }

    fn embedding_dim(&self) -> usize {
        self.model.embedding_dim.unwrap_or(match self.model.scale {
            Scale::Full => FULL_EMBEDDING_DIM,
            Scale::Desk => ExperimentConfig::default().siamese_dim,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "awe", version, about = "Acoustic word embeddings: training and same-different evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training archive (CMVN-normalized).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Development archive used for model selection.
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
    #[arg(long)]
    n_pad: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Cnn,
    Dnn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SiameseLossArg {
    Coscos2,
    CosHinge,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TapArg {
    SoftmaxOutput,
    PreSoftmaxLogits,
    Bottleneck,
    FinalLinear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistanceArg {
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Siamese,
    Bottleneck,
}

impl From<TapArg> for Tap {
    fn from(t: TapArg) -> Self {
        match t {
            TapArg::SoftmaxOutput => Tap::SoftmaxOutput,
            TapArg::PreSoftmaxLogits => Tap::PreSoftmaxLogits,
            TapArg::Bottleneck => Tap::Bottleneck,
            TapArg::FinalLinear => Tap::FinalLinear,
        }
    }
}

impl From<DistanceArg> for Distance {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Cosine => Distance::Cosine,
            DistanceArg::Euclidean => Distance::Euclidean,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic train/dev/test archives.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        num_types: Option<usize>,
        #[arg(long)]
        tokens_per_type: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        warp_strength: Option<f64>,
        #[arg(long)]
        unseen_type_fraction: Option<f64>,
    },
    /// Per-group cepstral mean and variance normalization.
    Cmvn {
        #[command(flatten)]
        common: Common,
        /// Input archives; each is written to OUT under its own file name.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// List all same-type segment pairs of an archive.
    Pairs {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Train a word classifier.
    TrainClassifier {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_enum, default_value = "cnn")]
        kind: ClassifierArg,
        /// Linear bottleneck width before the softmax.
        #[arg(long)]
        bottleneck: Option<usize>,
        #[arg(long)]
        min_count: Option<usize>,
        /// Embedding tap used for dev-set model selection.
        #[arg(long, value_enum)]
        tap: Option<TapArg>,
    },
    /// Train a Siamese network.
    TrainSiamese {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_enum, default_value = "cos-hinge")]
        loss: SiameseLossArg,
        #[arg(long)]
        margin: Option<f64>,
        /// Embedding width.
        #[arg(long)]
        dim: Option<usize>,
        /// Same-type pairs file from `pairs`; all pairs when absent.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long, value_enum)]
        distance: Option<DistanceArg>,
    },
    /// Embed every segment of an archive with a trained model.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        tap: Option<TapArg>,
    },
    /// Fit LDA on labelled embeddings.
    LdaFit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = DEFAULT_SHRINKAGE)]
        shrinkage: f64,
    },
    /// Project embeddings with a fitted LDA model.
    LdaApply {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lda: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
    },
    /// Same-different AP of embeddings.
    EvalAp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, value_enum, default_value = "cosine")]
        distance: DistanceArg,
    },
    /// Same-different AP of DTW on frames.
    EvalDtw {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Test AP against embedding width.
    SweepDim {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "siamese")]
        family: FamilyArg,
        #[arg(long, value_delimiter = ',', default_value = "10,50,200,500")]
        dims: Vec<usize>,
        /// Seeds to average over; the configured list when absent.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Finite-difference check of analytic gradients on random networks.
    GradCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        networks: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Train and evaluate every model over a seed list on the synthetic
    /// corpus.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Synth { common, .. }
            | Command::Cmvn { common, .. }
            | Command::Pairs { common, .. }
            | Command::TrainClassifier { common, .. }
            | Command::TrainSiamese { common, .. }
            | Command::Embed { common, .. }
            | Command::LdaFit { common, .. }
            | Command::LdaApply { common, .. }
            | Command::EvalAp { common, .. }
            | Command::EvalDtw { common, .. }
            | Command::SweepDim { common, .. }
            | Command::GradCheck { common, .. }
            | Command::Experiment { common, .. } => common,
        }
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns the process exit code: 0 on success, 1 on a runtime error and
/// 2 on a usage error.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    let common = command.common();
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out = common.out.clone();
    fs::create_dir_all(&out)?;
    pool.install(|| execute(command, config, &out))
}

fn write_file(path: PathBuf, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| Error::Config(format!("--{name} is required (or set paths.{name})")))
}

fn apply_train_args(config: &mut RunConfig, args: &TrainArgs) {
    if let Some(s) = args.scale {
        config.model.scale = match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Full => Scale::Full,
        };
    }
    let t = &mut config.train;
    t.seed = config.seed;
    if let Some(n) = args.n_pad {
        t.pad.n_pad = n;
    }
    if let Some(e) = args.epochs {
        t.max_epochs = e;
    }
    if let Some(b) = args.batch_size {
        t.batch_size = b;
    }
    if let Some(p) = args.patience {
        t.patience = p;
    }
}

fn save_trained(trained: &Trained, out: &Path) -> Result<()> {
    trained.model.save(out.join("model.awec"))?;
    fs::write(out.join("history.csv"), trained.history.to_csv())?;
    println!(
        "best epoch {} with dev AP {:.6} (initial {:.6})",
        trained.history.best_epoch, trained.history.best_dev_ap, trained.history.initial_dev_ap
    );
    Ok(())
}

fn write_report(report: &SameDifferentReport, out: &Path) -> Result<()> {
    report.write_summary(std::io::stdout().lock())?;
    write_file(out.join("report.txt"), |w| report.write_summary(w))?;
    write_file(out.join("pr.csv"), |w| report.write_csv(w))?;
    write_file(out.join("pairs.bin"), |w| report.write_pair_dump(w))
}

fn read_pairs(path: &Path) -> Result<PairSet> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Data(format!("{}:{}: bad index '{s}'", path.display(), n + 1)))
        };
        match fields.as_slice() {
            [] => continue,
            [a, b] => pairs.push((parse(a)?, parse(b)?)),
            _ => {
                return Err(Error::Data(format!(
                    "{}:{}: expected two indices",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    Ok(PairSet { pairs })
}

fn execute(command: Command, mut config: RunConfig, out: &Path) -> Result<()> {
    match command {
        Command::Synth {
            num_types,
            tokens_per_type,
            dim,
            noise_sigma,
            warp_strength,
            unseen_type_fraction,
            ..
        } => {
            let s = &mut config.synth;
            if let Some(v) = num_types {
                s.num_types = v;
            }
            if let Some(v) = tokens_per_type {
                s.tokens_per_type = v;
            }
            if let Some(v) = dim {
                s.dim = v;
            }
            if let Some(v) = noise_sigma {
                s.noise_sigma = v;
            }
            if let Some(v) = warp_strength {
                s.warp_strength = v;
            }
            if let Some(v) = unseen_type_fraction {
                s.unseen_type_fraction = v;
            }
            let corpus = synth_generate(&config.synth, config.seed)?;
            for (name, archive) in [
                ("train", &corpus.train),
                ("dev", &corpus.dev),
                ("test", &corpus.test),
            ] {
                save_archive(archive, out.join(format!("{name}.awe")))?;
                println!("{name}: {} segments", archive.len());
            }
            Ok(())
        }
        Command::Cmvn { input, .. } => {
            for path in input {
                let name = path
                    .file_name()
                    .ok_or_else(|| Error::Config(format!("{} has no file name", path.display())))?;
                save_archive(&cmvn_normalize(&load_archive(&path)?), out.join(name))?;
            }
            Ok(())
        }
        Command::Pairs { input, .. } => {
            let pairs = extract_same_pairs(&load_archive(&input)?);
            write_file(out.join("pairs.txt"), |w| {
                for (a, b) in &pairs.pairs {
                    writeln!(w, "{a} {b}")?;
                }
                Ok(())
            })?;
            println!("{} same-type pairs", pairs.len());
            Ok(())
        }
        Command::TrainClassifier {
            train: args,
            kind,
            bottleneck,
            min_count,
            tap,
            ..
        } => {
            apply_train_args(&mut config, &args);
            let train_path = required(args.train, &config.paths.train, "train")?;
            let dev_path = required(args.dev, &config.paths.dev, "dev")?;
            let min_count = min_count.unwrap_or(config.min_count);
            let (train, vocab) = vocab_filter(&load_archive(&train_path)?, min_count)?;
            let dev = load_archive(&dev_path)?;
            let kind = match kind {
                ClassifierArg::Cnn => ModelKind::ClassifierCnn,
                ClassifierArg::Dnn => ModelKind::ClassifierDnn,
            };
            let spec = ModelSpec::build(
                kind,
                &config.architecture(kind),
                train.dim(),
                config.train.pad.n_pad,
                vocab.len(),
                bottleneck.or(config.model.bottleneck),
            )?;
            config.train.loss = LossConfig::cross_entropy();
            if let Some(t) = tap {
                config.train.tap = Some(t.into());
            }
            let trained = train_classifier(&train, &vocab, &dev, &spec, &config.train)?;
            save_trained(&trained, out)
        }
        Command::TrainSiamese {
            train: args,
            loss,
            margin,
            dim,
            pairs,
            distance,
            ..
        } => {
            apply_train_args(&mut config, &args);
            let train = load_archive(required(args.train, &config.paths.train, "train")?)?;
            let dev = load_archive(required(args.dev, &config.paths.dev, "dev")?)?;
            let pairs = match pairs {
                Some(p) => read_pairs(&p)?,
                None => extract_same_pairs(&train),
            };
            let default_margin = config.train.loss.margin.unwrap_or(0.15);
            let mut loss = match loss {
                SiameseLossArg::Coscos2 => LossConfig::coscos2(),
                SiameseLossArg::CosHinge => LossConfig::cos_hinge(margin.unwrap_or(default_margin)),
            };
            loss.distance = distance.map_or(config.train.loss.distance, Distance::from);
            config.train.loss = loss;
            let kind = ModelKind::SiameseCnn;
            let spec = ModelSpec::build(
                kind,
                &config.architecture(kind),
                train.dim(),
                config.train.pad.n_pad,
                dim.unwrap_or_else(|| config.embedding_dim()),
                None,
            )?;
            let trained = train_siamese(&train, &pairs, &dev, &spec, &config.train)?;
            save_trained(&trained, out)
        }
        Command::Embed {
            model, input, tap, ..
        } => {
            let model = Model::load(model)?;
            let archive = load_archive(input)?;
            let tap = tap.map_or(model.spec.default_tap(), Tap::from);
            let mut pad = config.train.pad;
            pad.n_pad = model.spec.n_pad;
            let e = embed(&model, &archive, tap, &pad)?;
            e.save(out.join("embeddings.awee"))?;
            println!("{} embeddings of dimension {}", e.len(), e.dim());
            Ok(())
        }
        Command::LdaFit {
            embeddings,
            dim,
            shrinkage,
            ..
        } => {
            let model = lda_fit(&EmbeddingSet::load(embeddings)?, dim, shrinkage)?;
            model.save(out.join("lda.awel"))?;
            println!("LDA {} -> {}", model.d_in, model.d_out);
            Ok(())
        }
        Command::LdaApply {
            lda, embeddings, ..
        } => {
            let projected = lda_transform(&LdaModel::load(lda)?, &EmbeddingSet::load(embeddings)?)?;
            projected.save(out.join("embeddings.awee"))
        }
        Command::EvalAp {
            embeddings,
            distance,
            ..
        } => {
            let e = EmbeddingSet::load(embeddings)?;
            let report = same_different_report(SameDifferentInput::Embeddings(&e, distance.into()))?;
            write_report(&report, out)
        }
        Command::EvalDtw { input, .. } => {
            let archive = load_archive(input)?;
            write_report(&same_different_report(SameDifferentInput::Frames(&archive))?, out)
        }
        Command::SweepDim {
            family,
            dims,
            seeds,
            train,
            dev,
            test,
            ..
        } => {
            let mut exp = config.experiment.clone();
            if let Some(s) = seeds {
                exp.seeds = s;
            }
            exp.validate()?;
            let paths = [
                train.or(config.paths.train.clone()),
                dev.or(config.paths.dev.clone()),
                test.or(config.paths.test.clone()),
            ];
            let corpus = match paths {
                [Some(tr), Some(dv), Some(te)] => PreparedCorpus::from_archives(
                    &load_archive(tr)?,
                    load_archive(dv)?,
                    load_archive(te)?,
                    exp.min_count,
                )?,
                [None, None, None] => PreparedCorpus::new(&exp)?,
                _ => {
                    return Err(Error::Config(
                        "give all of --train, --dev and --test, or none".into(),
                    ))
                }
            };
            let family = match family {
                FamilyArg::Siamese => SweepFamily::Siamese,
                FamilyArg::Bottleneck => SweepFamily::Bottleneck,
            };
            let rows = sweep_dims(&exp, &corpus, family, &dims)?;
            write_sweep_csv(&rows, std::io::stdout().lock())?;
            write_file(out.join("sweep.csv"), |w| write_sweep_csv(&rows, w))
        }
        Command::GradCheck {
            networks,
            step,
            tolerance,
            ..
        } => {
            let records = gradient_check_suite(networks, config.seed, step)?;
            let worst = records.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
            write_file(out.join("gradcheck.csv"), |w| {
                writeln!(w, "network,loss,num_params,checked,skipped,max_rel_error")?;
                for r in &records {
                    let loss = match r.loss {
                        LossKind::CrossEntropy => "cross_entropy",
                        LossKind::CosCos2 => "coscos2",
                        LossKind::CosHinge => "cos_hinge",
                    };
                    writeln!(
                        w,
                        "{},{loss},{},{},{},{:e}",
                        r.network, r.num_params, r.checked, r.skipped, r.max_rel_error
                    )?;
                }
                Ok(())
            })?;
            println!("{} checks, worst relative error {worst:e}", records.len());
            if worst > tolerance {
                return Err(Error::Numeric(format!(
                    "relative gradient error {worst:e} exceeds {tolerance:e}"
                )));
            }
            Ok(())
        }
        Command::Experiment { seeds, .. } => {
            let mut exp = config.experiment.clone();
            if let Some(s) = seeds {
                exp.seeds = s;
            }
            let rows = run_reference_experiment(&exp)?;
            write_results_csv(&rows, std::io::stdout().lock())?;
            write_file(out.join("results.csv"), |w| write_results_csv(&rows, w))
        }
    }
}
