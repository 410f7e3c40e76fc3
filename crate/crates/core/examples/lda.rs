//! Compress cos-hinge Siamese embeddings with LDA fitted on the training set.
//!
//! cargo run --release --example lda

use awe::dimred::{lda_fit, lda_transform, DEFAULT_SHRINKAGE};
use awe::embedding::EmbeddingSet;
use awe::eval::{same_different_report, SameDifferentInput};
use awe::experiment::{fit_siamese, ExperimentConfig, PreparedCorpus};
use awe::losses::{Distance, LossConfig};
use awe::models::{embed, Tap};

fn main() -> awe::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = ExperimentConfig::default();
    let corpus = PreparedCorpus::new(&config)?;
    let trained = fit_siamese(&config, &corpus, LossConfig::cos_hinge(config.margin), 64, 1)?;

    let train = embed(&trained.model, &corpus.train, Tap::FinalLinear, &config.pad())?;
    let test = embed(&trained.model, &corpus.test, Tap::FinalLinear, &config.pad())?;
    println!("{:>4}  {:.4}", test.dim(), ap(&test)?);
    for dim in [2, 5, 10, 20] {
        let lda = lda_fit(&train, dim, DEFAULT_SHRINKAGE)?;
        let projected = lda_transform(&lda, &test)?;
        println!("{:>4}  {:.4}", projected.dim(), ap(&projected)?);
    }
    Ok(())
}

fn ap(e: &EmbeddingSet) -> awe::Result<f64> {
    Ok(same_different_report(SameDifferentInput::Embeddings(e, Distance::Cosine))?.ap())
}
