//! Compare backpropagated gradients with central differences on random
//! small networks, for every loss.
//!
//! cargo run --release --example gradient_check

use awe::models::gradient_check_suite;

fn main() -> awe::Result<()> {
    let records = gradient_check_suite(20, 1, 1e-5)?;
    for r in &records {
        println!(
            "net {:2} {:<13} {:4} params  {:4} checked  {:2} skipped  max rel err {:.2e}",
            r.network,
            format!("{:?}", r.loss),
            r.num_params,
            r.checked,
            r.skipped,
            r.max_rel_error
        );
    }
    let worst = records.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    println!("worst: {worst:.2e}");
    Ok(())
}
