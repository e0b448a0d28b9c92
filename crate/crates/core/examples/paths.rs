//! Simulates Bessel(3) paths, derives the future infimum on the grid and
//! with bridge minima, and round-trips a bundle through the binary cache.
//!
//! `cargo run --example paths`

use rand::Rng;

use enlargement::simulate::export::{read_cache, write_cache};
use enlargement::simulate::functionals::{future_inf, future_inf_bridge, realized_qv, BridgeLaw, BRIDGE_CHANNEL, TAIL_CHANNEL};
use enlargement::simulate::gen_bes3;
use enlargement::simulate::rng::channel_rng;

fn main() -> anyhow::Result<()> {
    let seed = 7;
    let pb = gen_bes3(1000, 1.0 / 256.0, 16.0, 1.0, seed)?;
    let one = pb.grid().floor_index(1.0);
    let qv = pb.paths().map(|z| realized_qv(z, one)).sum::<f64>() / pb.n_paths() as f64;
    println!("mean [Z] on [0, 1]: {qv:.4} (expected 1)");

    // I_0 is uniform on (0, 1). The grid infimum stops at the horizon and
    // misses the dips between grid points.
    let grid_inf = future_inf(&pb, 16.0)?.column(0);
    // After the horizon the infimum of Bessel(3) from z is z U; inside a
    // step the minimum of the conditioned bridge is drawn exactly.
    let bridge_inf: Vec<f64> = pb
        .paths()
        .enumerate()
        .map(|(i, z)| {
            let beyond = z[z.len() - 1] * channel_rng(seed, TAIL_CHANNEL, i as u64).random::<f64>();
            let mut rng = channel_rng(seed, BRIDGE_CHANNEL, i as u64);
            future_inf_bridge(z, pb.grid(), BridgeLaw::Bessel3, |_| 1.0, Some(beyond), &mut rng)[0]
        })
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("mean I_0: grid {:.4}, bridge {:.4} (exact 0.5)", mean(&grid_inf), mean(&bridge_inf));

    let head = pb.truncate(one)?;
    let mut buf = Vec::new();
    write_cache(&head, &mut buf)?;
    assert_eq!(read_cache(buf.as_slice())?, head);
    println!("cache of [0, 1]: {} bytes, round trip exact", buf.len());
    Ok(())
}
