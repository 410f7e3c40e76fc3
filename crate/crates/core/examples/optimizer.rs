//! ADADELTA on a one-dimensional quadratic. The first step has size about
//! `sqrt(ε)` whatever the gradient scale; the step size then grows with the
//! accumulated updates.
//!
//! cargo run --example optimizer

use awe::optim::{adadelta_scalar, AdadeltaConfig};

fn main() {
    let config = AdadeltaConfig::default();
    for scale in [1.0, 100.0] {
        // f(x) = scale · (x − 3)²
        let (mut x, mut sq_grad, mut sq_update) = (0.0f64, 0.0, 0.0);
        println!("scale {scale}");
        for step in 1..=3000 {
            let g = 2.0 * scale * (x - 3.0);
            let dx = adadelta_scalar(&mut x, g, &mut sq_grad, &mut sq_update, &config);
            if step <= 2 || step % 500 == 0 {
                println!("  step {step:4}  Δx = {dx:+.6e}  x = {x:.6}");
            }
        }
    }
}
