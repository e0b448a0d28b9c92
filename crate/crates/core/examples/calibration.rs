//! Null-model calibration of the binned test.
//!
//! `cargo run --example calibration`

use enlargement::experiments::calibration::{calibrate, CalibrationParams};

fn main() {
    let cal = calibrate(&CalibrationParams { n_seeds: 20, ..Default::default() });
    println!("{} of {} null runs rejected", cal.false_positives, cal.runs);
    print!("{}", cal.z_table_csv());
}
