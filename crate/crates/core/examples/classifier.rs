//! Train a CNN word classifier and use its softmax output as an embedding.
//!
//! cargo run --release --example classifier

use awe::experiment::{fit_classifier, ExperimentConfig, PreparedCorpus};
use awe::eval::{same_different_report, SameDifferentInput};
use awe::losses::Distance;
use awe::models::{embed, ModelKind, Tap};

fn main() -> awe::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = ExperimentConfig::default();
    let corpus = PreparedCorpus::new(&config)?;
    println!("vocabulary: {} word types", corpus.vocab.len());

    let trained = fit_classifier(&config, &corpus, ModelKind::ClassifierCnn, None, 1)?;
    print!("{}", trained.history.to_csv());

    for tap in [Tap::SoftmaxOutput, Tap::PreSoftmaxLogits] {
        let e = embed(&trained.model, &corpus.test, tap, &config.pad())?;
        let report = same_different_report(SameDifferentInput::Embeddings(&e, Distance::Cosine))?;
        println!("{tap:?}: dimension {}, test AP {:.4}", e.dim(), report.ap());
    }
    Ok(())
}
