//! Exact analysis of the bundled finite model, in rationals and in floats.
//!
//! `cargo run --example finite_model`

use enlargement::finite_prob::model_file::FiniteModel;
use enlargement::finite_prob::Scalar;

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/models/early_signal.toml");
    let model = FiniteModel::from_toml_str(&std::fs::read_to_string(path)?)?;
    let exact = model.analyze(|q| q.clone())?;
    let float = model.analyze(|q| q.to_f64())?;
    println!("atoms {}, horizon {}", exact.n_atoms, exact.horizon);
    if let Some(v) = &exact.viability {
        println!("largest terminal jump sum: {}", v.jump_sum_max.as_deref().unwrap_or("none"));
    }
    for m in &exact.deflated_martingales {
        println!("deflated {} martingale: {}", m.name, m.exact_martingale);
    }
    println!("exact pass {}, float pass {}", exact.pass, float.pass);
    Ok(())
}
