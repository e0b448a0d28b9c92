//! Survival of the last zero before time 1 against its Azéma
//! supermartingale.
//!
//! `cargo run --example azema`

use enlargement::experiments::brownian::{run_emery_azema, EmeryParams};

fn main() {
    let out = run_emery_azema(&EmeryParams { n_paths: 20_000, ..Default::default() });
    print!("{}", out.render());
}
