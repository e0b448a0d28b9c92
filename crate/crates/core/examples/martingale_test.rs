//! Binned conditional-mean-zero test of the bridge drift, with the raw
//! increments as a negative control.
//!
//! `cargo run --example martingale_test`

use enlargement::experiments::brownian::{jacod_observations, jacod_spec, JacodParams};
use enlargement::mctest::cond_mean_zero;

fn main() {
    let p = JacodParams { n_paths: 10_000, ..Default::default() };
    let obs = jacod_observations(&p);
    let r = cond_mean_zero("bridge drift", &obs, &jacod_spec());
    println!(
        "{}: {}/{} bins within 3 SE, verdict {}; raw increments detected in {:?} of eligible bins",
        r.name, r.bins_within_band, r.occupied_bins, r.verdict, r.control.detection_fraction
    );
}
