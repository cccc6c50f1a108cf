//! Rates under each power allocation strategy for the sectorized and
//! coordinated settings on a 7-cell network.
//!
//! cargo run --release --example power_strategies -- [drops]

use sectorsim::runner::{run_experiment, summarize};
use sectorsim::{PowerStrategy, Precoder, Scenario, Setting};

fn main() -> sectorsim::Result<()> {
    let drops = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    println!(
        "{:<8} {:<3} {:<8} {:>12} {:>12} {:>8}",
        "setting", "", "power", "95% (Mbps)", "median", "time (s)"
    );
    for setting in [Setting::SecMP, Setting::CompSec] {
        for precoder in [Precoder::Mr, Precoder::Zf] {
            for power in [
                PowerStrategy::Upa,
                PowerStrategy::CpaPmf,
                PowerStrategy::DpaPmf,
                PowerStrategy::CpaNmf,
                PowerStrategy::DpaNmf,
            ] {
                let s = Scenario {
                    num_cells: 7,
                    setting,
                    precoder,
                    power_strategy: power,
                    num_drops: drops,
                    ..Scenario::default()
                };
                let r = run_experiment(&s)?;
                let stats = summarize(&r)?;
                println!(
                    "{:<8} {:<3} {:<8} {:>12.3} {:>12.3} {:>8.1}",
                    setting.to_string(),
                    precoder.to_string(),
                    power.to_string(),
                    stats.p95_likely / 1e6,
                    stats.median / 1e6,
                    r.runtime_s
                );
            }
        }
    }
    Ok(())
}
