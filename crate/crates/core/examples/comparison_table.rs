//! 95%-likely and median rates of Omni, SecMD, SecMP and CoMPSec under MR
//! precoding and CPA-PMF, for pilot reuse 1 and 3.
//!
//! cargo run --release --example comparison_table -- [drops] [shadow_sigma_db]

use sectorsim::runner::{run_experiment, summarize};
use sectorsim::{PowerStrategy, Precoder, Scenario, Setting};

fn main() -> sectorsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let drops = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let sigma = args.next().and_then(|s| s.parse().ok()).unwrap_or(8.0);
    println!("{drops} drops, shadowing {sigma} dB");
    println!(
        "{:<4} {:<8} {:>12} {:>8} {:>12} {:>8}",
        "xi", "setting", "95% (Mbps)", "gain", "median", "gain"
    );
    for xi in [1, 3] {
        let mut base = None;
        for setting in [
            Setting::Omni,
            Setting::SecMD,
            Setting::SecMP,
            Setting::CompSec,
        ] {
            let s = Scenario {
                setting,
                precoder: Precoder::Mr,
                power_strategy: PowerStrategy::CpaPmf,
                pilot_reuse: xi,
                num_drops: drops,
                shadow_sigma_db: sigma,
                ..Scenario::default()
            };
            let stats = summarize(&run_experiment(&s)?)?;
            let (p0, m0) = *base.get_or_insert((stats.p95_likely, stats.median));
            println!(
                "{:<4} {:<8} {:>12.3} {:>7.2}x {:>12.3} {:>7.2}x",
                xi,
                setting.to_string(),
                stats.p95_likely / 1e6,
                stats.p95_likely / p0,
                stats.median / 1e6,
                stats.median / m0
            );
        }
    }
    Ok(())
}
