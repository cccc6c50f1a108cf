//! Compares the closed-form SINR term variances with a Rayleigh-fading
//! Monte Carlo estimate on a 7-cell network.
//!
//! cargo run --release --example bound_oracle -- [realizations]

use std::time::Instant;

use sectorsim::fadelab::{closed_form_terms, oracle_compare, simulate_terms, FadelabConfig};
use sectorsim::runner::Experiment;
use sectorsim::{PowerStrategy, Precoder, Scenario, Setting};

fn main() -> sectorsim::Result<()> {
    let realizations = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2000);
    for setting in [Setting::SecMP, Setting::CompSec] {
        for precoder in [Precoder::Mr, Precoder::Zf] {
            let scenario = Scenario {
                num_cells: 7,
                setting,
                precoder,
                power_strategy: PowerStrategy::CpaPmf,
                ..Scenario::default()
            };
            let exp = Experiment::new(&scenario)?;
            let snap = exp.snapshot(0)?;
            let (eta, _) = exp.allocate(&snap.network)?;
            let start = Instant::now();
            let cfg = FadelabConfig {
                realizations,
                ..FadelabConfig::default()
            };
            let emp = simulate_terms(&snap.network, &eta, &cfg)?;
            let report = oracle_compare(
                &emp,
                &closed_form_terms(&snap.network, &eta, cfg.probe_cell),
            );
            println!(
                "== {setting} / {precoder} ({:.1} s)",
                start.elapsed().as_secs_f64()
            );
            println!("{report}\n");
        }
    }
    Ok(())
}
