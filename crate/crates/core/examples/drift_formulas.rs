//! Evaluates every registered model at one feature point.
//!
//! `cargo run --example drift_formulas`

use enlargement::formulas::{EnlargementModel, Features, ModelName, ModelParams};

fn main() -> anyhow::Result<()> {
    let f = Features {
        w_t: Some(0.3),
        w_1: Some(-0.4),
        u_t: Some(0.8),
        record_t: Some(0.7),
        z_t: Some(1.2),
        i_t: Some(0.6),
        random_time: Some(0.9),
        cumulative_intensity: Some(0.25),
        ..Features::at(0.5)
    };
    for name in ModelName::ALL {
        let model = EnlargementModel::new(name, ModelParams::default())?;
        let needs: Vec<&str> = model.required_features().iter().map(|x| x.as_str()).collect();
        let drift = model.drift_rate(&f)?;
        let azema = model.azema(&f).transpose()?;
        println!("{name:<20} needs {needs:?}: drift {drift:+.5}, azema {azema:?}");
    }
    let missing = EnlargementModel::by_name("jacod_bridge")?.drift_rate(&Features::at(0.5));
    println!("without features: {}", missing.unwrap_err());
    Ok(())
}
