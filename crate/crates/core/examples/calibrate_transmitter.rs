//! Finds the transmit power `x0` at which a transmitter geometry has a target
//! fraction of true nulls, by bisection on `log10 x0`.
//!
//! ```text
//! cargo run --release --example calibrate_transmitter -- [target] [seeds] [grid_side n_sensors gp_length_scale]
//! ```
//!
//! Without the geometry arguments the default geometry is used.

use mht_ggsp::scenario::{gen_transmitter_scenario, TransmitterConfig};

fn mean_null_proportion(base: &TransmitterConfig, x0: f64, seeds: u64) -> mht_ggsp::Result<f64> {
    let mut total = 0.0;
    for seed in 0..seeds {
        let cfg = TransmitterConfig {
            x0,
            seed,
            ..base.clone()
        };
        total += gen_transmitter_scenario(&cfg)?.null_proportion();
    }
    Ok(total / seeds as f64)
}

fn main() -> mht_ggsp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let target: f64 = args.first().map_or(0.10, |a| a.parse().expect("target"));
    let seeds: u64 = args.get(1).map_or(20, |a| a.parse().expect("seeds"));
    let mut base = TransmitterConfig::default();
    if args.len() >= 5 {
        base.grid_side = args[2].parse().expect("grid_side");
        base.n_sensors = args[3].parse().expect("n_sensors");
        base.gp_length_scale = args[4].parse().expect("gp_length_scale");
    }

    let (mut lo, mut hi) = (0.0_f64, 12.0_f64);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        let pi0 = mean_null_proportion(&base, 10f64.powf(mid), seeds)?;
        println!("x0 = {:.4e}  null proportion = {pi0:.4}", 10f64.powf(mid));
        if pi0 > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x0 = 10f64.powf(0.5 * (lo + hi));
    println!("calibrated x0 = {x0:.4e} for target {target}");
    println!(
        "configured x0 = {:.4e} gives {:.4}",
        base.x0,
        mean_null_proportion(&base, base.x0, seeds)?
    );
    Ok(())
}
