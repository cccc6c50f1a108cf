//! Desired and coherent interference power under uniform power for every
//! setting, MR precoding, both pilot reuse factors.
//!
//! cargo run --release --example pilot_contamination -- [drops]

use sectorsim::runner::Experiment;
use sectorsim::{PowerStrategy, Precoder, Scenario, Setting};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn main() -> sectorsim::Result<()> {
    let drops = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50);
    println!(
        "{:<3} {:<8} {:>10} {:>10} {:>14} {:>10}",
        "xi", "setting", "P (dB)", "I3 (dB)", "I3/(I1+I2+1)", "ag/c"
    );
    for xi in [1, 3] {
        for setting in Setting::ALL {
            let s = Scenario {
                setting,
                precoder: Precoder::Mr,
                power_strategy: PowerStrategy::Upa,
                pilot_reuse: xi,
                num_drops: drops,
                ..Scenario::default()
            };
            let exp = Experiment::new(&s)?;
            let (mut p, mut i3, mut ratio, mut quality) = (vec![], vec![], vec![], vec![]);
            for d in 0..drops {
                let snap = exp.snapshot(d)?;
                let net = &snap.network;
                let (eta, _) = exp.allocate(net)?;
                let b = sectorsim::linkrate::sinr_breakdown(net, &eta);
                for u in 0..b.len() {
                    p.push(b.p[u]);
                    i3.push(b.i3[u]);
                    ratio.push(b.i3[u] / (b.i1[u] + b.i2[u] + 1.0));
                    let a = net.serving[u][0];
                    quality.push(net.ag.get(a, u) / net.c.get(a, u));
                }
            }
            println!(
                "{:<3} {:<8} {:>10.2} {:>10.2} {:>14.4} {:>10.3}",
                xi,
                setting.to_string(),
                db(median(p)),
                db(median(i3)),
                median(ratio),
                median(quality)
            );
        }
    }
    Ok(())
}
