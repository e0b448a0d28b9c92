//! Growth of the companion integral against its closed-form mean, and
//! convergence of the square integral.
//!
//! `cargo run --example divergence`

use enlargement::mctest::{divergence_profile, DivergenceSpec};

fn main() {
    let prof = divergence_profile(&DivergenceSpec::new(0.75, vec![1e-2, 1e-3, 1e-4, 1e-6], 5000, 3));
    for r in &prof.rows {
        println!("eps {:e}: mean {:.4} +- {:.4}, closed form {:.4}", r.eps, r.mean, r.se, r.closed_form);
    }
    println!("verdict {}", prof.verdict);
}
