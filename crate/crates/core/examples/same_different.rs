//! Score the same-different task on hand-made embeddings and write the
//! precision-recall curve.
//!
//! cargo run --example same_different

use awe::embedding::EmbeddingSet;
use awe::eval::{same_different_report, SameDifferentInput};
use awe::losses::Distance;

fn main() -> awe::Result<()> {
    // three tokens each of two words, plus a stray token of a third word
    let vectors = vec![
        vec![1.0, 0.1, 0.0],
        vec![0.9, 0.2, 0.1],
        vec![1.0, -0.1, 0.2],
        vec![0.0, 1.0, 0.1],
        vec![0.2, 0.9, 0.0],
        vec![0.7, 0.7, 0.0],
        vec![0.0, 0.0, 1.0],
    ];
    let labels = ["cat", "cat", "cat", "dog", "dog", "dog", "emu"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let embeddings = EmbeddingSet::from_parts(3, vectors, labels)?;

    for distance in [Distance::Cosine, Distance::Euclidean] {
        let report = same_different_report(SameDifferentInput::Embeddings(&embeddings, distance))?;
        report.write_summary(std::io::stdout())?;
        println!();
    }
    let report = same_different_report(SameDifferentInput::Embeddings(&embeddings, Distance::Cosine))?;
    report.write_csv(std::io::stdout())?;
    Ok(())
}
