//! Train Siamese networks with both losses and compare them with DTW on the
//! raw frames.
//!
//! cargo run --release --example siamese

use awe::experiment::{fit_siamese, ExperimentConfig, PreparedCorpus};
use awe::eval::{same_different_report, SameDifferentInput};
use awe::losses::{Distance, LossConfig};
use awe::models::{embed, Tap};

fn main() -> awe::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = ExperimentConfig::default();
    let corpus = PreparedCorpus::new(&config)?;

    let dtw = same_different_report(SameDifferentInput::Frames(&corpus.test))?;
    println!("DTW on frames: AP {:.4}", dtw.ap());

    for (name, loss) in [
        ("coscos2", LossConfig::coscos2()),
        ("cos-hinge", LossConfig::cos_hinge(config.margin)),
    ] {
        let trained = fit_siamese(&config, &corpus, loss, config.siamese_dim, 1)?;
        let e = embed(&trained.model, &corpus.test, Tap::FinalLinear, &config.pad())?;
        let report = same_different_report(SameDifferentInput::Embeddings(&e, Distance::Cosine))?;
        println!(
            "{name}: dev AP {:.4} -> {:.4} (epoch {}), test AP {:.4}",
            trained.history.initial_dev_ap,
            trained.history.best_dev_ap,
            trained.history.best_epoch,
            report.ap()
        );
    }
    Ok(())
}
