//! Occupation estimate of the local time in the future-infimum identity,
//! on the base grid and after refining near contact.
//!
//! `cargo run --example localtime`

use enlargement::experiments::bessel::{localtime_summary, PitmanParams};

fn main() {
    let s = localtime_summary(&PitmanParams { localtime_paths: 2000, ..Default::default() });
    for (label, c) in [("base grid", &s.base_grid), ("refined", &s.refined)] {
        println!("{label:>9}: occupation {:.4} vs {:.4} +- {:.4}", c.mean_closed, c.mean_rhs, c.se_rhs);
    }
    println!("points added per path: mean {:.0}, max {}", s.mean_points_added, s.max_points_added);
}
