//! Test AP of cos-hinge Siamese embeddings as the final layer width varies.
//!
//! cargo run --release --example dimension_sweep [-- 10 50 200 500]

use awe::experiment::{sweep_dims, write_sweep_csv, ExperimentConfig, PreparedCorpus, SweepFamily};

fn main() -> awe::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut dims: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("widths are positive integers"))
        .collect();
    if dims.is_empty() {
        dims = vec![10, 50, 200, 500];
    }
    let config = ExperimentConfig::default();
    let corpus = PreparedCorpus::new(&config)?;
    let rows = sweep_dims(&config, &corpus, SweepFamily::Siamese, &dims)?;
    write_sweep_csv(&rows, std::io::stdout())?;
    for r in &rows {
        println!("# dim {}: per-seed AP {:?}", r.dim, r.per_seed);
    }
    Ok(())
}
