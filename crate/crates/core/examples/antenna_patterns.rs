//! Ideal and tabulated radiation patterns and their effect on SecMP rates.
//!
//! cargo run --release --example antenna_patterns -- [drops]

use std::f64::consts::PI;

use sectorsim::antenna::Pattern;
use sectorsim::runner::{run_experiment, summarize};
use sectorsim::scenario::PatternSpec;
use sectorsim::{Scenario, Setting};

/// Patch element with a reflector: flat main lobe, smooth roll-off, -15 dB back lobe.
fn patch_table() -> Vec<(f64, f64)> {
    (0..360)
        .map(|i| {
            let phi = i as f64 - 180.0;
            let x = (phi.abs() / 180.0).min(1.0);
            let g = 0.03 + 0.97 * (0.5 * (1.0 + (PI * x.powf(1.6)).cos())).powi(2);
            (phi, g)
        })
        .collect()
}

fn main() -> sectorsim::Result<()> {
    let drops = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50);
    let table = patch_table();
    let path = std::env::temp_dir().join("sectorsim_patch.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["angle_deg", "gain_linear"])?;
    for (a, g) in &table {
        w.write_record([a.to_string(), g.to_string()])?;
    }
    w.flush()?;

    let specs = [
        PatternSpec::Omni,
        PatternSpec::Irp {
            beamwidth_deg: 120.0,
            main_gain: 3.0,
        },
        PatternSpec::Irp {
            beamwidth_deg: 120.0,
            main_gain: 2.0,
        },
        PatternSpec::Irp {
            beamwidth_deg: 90.0,
            main_gain: 3.5,
        },
        PatternSpec::File(path),
    ];
    print!("{:<28}", "pattern");
    for phi in [0.0, 30.0, 60.0, 90.0, 180.0] {
        print!(" {:>7}", format!("{phi}°"));
    }
    println!(" {:>12}", "95% (Mbps)");
    for spec in specs {
        let pattern: Pattern = spec.resolve()?;
        let label = match &spec {
            PatternSpec::File(_) => "file:patch".to_string(),
            other => other.to_string(),
        };
        print!("{label:<28}");
        for phi in [0.0, 30.0, 60.0, 90.0, 180.0] {
            print!(" {:>7.3}", pattern.gain_at(phi));
        }
        let s = Scenario {
            setting: Setting::SecMP,
            pattern: spec,
            num_drops: drops,
            ..Scenario::default()
        };
        let stats = summarize(&run_experiment(&s)?)?;
        println!(" {:>12.3}", stats.p95_likely / 1e6);
    }
    Ok(())
}
