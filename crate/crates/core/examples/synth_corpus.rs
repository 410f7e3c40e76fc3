//! Generate the synthetic corpus, normalize it and round-trip it through
//! the archive format.
//!
//! cargo run --release --example synth_corpus

use awe::data::{archive_to_bytes, cmvn_normalize, read_archive, synth_generate, SynthConfig};

fn main() -> awe::Result<()> {
    let config = SynthConfig::default();
    let corpus = synth_generate(&config, 1)?;
    for (name, archive) in [("train", &corpus.train), ("dev", &corpus.dev), ("test", &corpus.test)] {
        let normalized = cmvn_normalize(archive);
        let bytes = archive_to_bytes(&normalized)?;
        let back = read_archive(&bytes[..])?;
        assert_eq!(archive_to_bytes(&back)?, bytes);

        let mut types: Vec<&str> = archive.labels();
        types.sort_unstable();
        types.dedup();
        let frames: usize = archive.iter().map(|s| s.num_frames()).sum();
        println!(
            "{name:5}: {:3} segments, {:2} word types, {:5.1} frames on average, {} bytes",
            archive.len(),
            types.len(),
            frames as f64 / archive.len() as f64,
            bytes.len()
        );
    }
    let first = corpus.train.get(0);
    println!(
        "first training segment: '{}' from {}, {} frames × {} coefficients",
        first.word_label,
        first.group_id,
        first.num_frames(),
        first.dim()
    );
    Ok(())
}
