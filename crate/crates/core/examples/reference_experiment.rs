//! Train and evaluate every model over five initializations and print the
//! results table.
//!
//! cargo run --release --example reference_experiment

use awe::experiment::{run_reference_experiment, write_results_csv, ExperimentConfig};

fn main() -> awe::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let start = std::time::Instant::now();
    let rows = run_reference_experiment(&ExperimentConfig::default())?;
    write_results_csv(&rows, std::io::stdout())?;
    eprintln!("finished in {:.0} s", start.elapsed().as_secs_f64());
    Ok(())
}
