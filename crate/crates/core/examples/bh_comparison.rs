//! Monte Carlo comparison of MHT-GGSP, the oracle lfdr rule and
//! Benjamini-Hochberg on the desk-scale transmitter scenario.
//!
//! ```text
//! cargo run --release --example bh_comparison -- [reps]
//! ```

use mht_ggsp::monte_carlo::{
    monte_carlo, FitConfig, Method, MonteCarloConfig, RunOptions, ScenarioConfig,
};
use mht_ggsp::scenario::TransmitterConfig;

fn main() -> mht_ggsp::Result<()> {
    let reps: usize = std::env::args()
        .nth(1)
        .map_or(10, |a| a.parse().expect("reps"));
    let cfg = MonteCarloConfig {
        scenario: ScenarioConfig::Transmitter(TransmitterConfig::desk_scale()),
        fit: FitConfig::default(),
        methods: vec![Method::MhtGgsp, Method::Oracle, Method::Bh],
        alphas: vec![0.05, 0.1, 0.15, 0.2],
        reps,
        seed: 5,
    };
    let report = monte_carlo(&cfg, RunOptions::default())?;
    println!(
        "{reps} repetitions, mean null proportion {:.3}",
        report.null_proportion()
    );
    println!(
        "{:<9} {:>5} {:>14} {:>14}",
        "method", "alpha", "FDR", "power"
    );
    for r in &report.rows {
        println!(
            "{:<9} {:>5} {:>7.3} ± {:.3} {:>7.3} ± {:.3}",
            r.method.id(),
            r.alpha,
            r.fdr,
            r.se_fdr,
            r.power,
            r.se_power
        );
    }
    for (rep, e) in &report.failures {
        eprintln!("repetition {rep} failed: {e}");
    }
    Ok(())
}
