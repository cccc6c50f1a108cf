//! Bisection trace of network-wide max-min power control on one snapshot,
//! compared with the per-cell closed form and uniform power.
//!
//! cargo run --release --example nmf_trace -- [setting] [precoder]

use sectorsim::linkrate::sinr_breakdown;
use sectorsim::power::{nmf, pmf, upa};
use sectorsim::runner::Experiment;
use sectorsim::{Precoder, Scenario, Setting};

fn main() -> sectorsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let setting: Setting = args.next().map_or(Ok(Setting::CompSec), |s| s.parse())?;
    let precoder: Precoder = args.next().map_or(Ok(Precoder::Zf), |s| s.parse())?;
    let s = Scenario {
        num_cells: 7,
        setting,
        precoder,
        ..Scenario::default()
    };
    let exp = Experiment::new(&s)?;
    let net = exp.snapshot(0)?.network;
    let r = nmf(&net, s.nmf_tolerance)?;
    r.write_trace(std::io::stdout().lock())?;
    let (pmf_eta, _) = pmf(&net);
    eprintln!(
        "bracket [{:.6e}, {:.6e}] after {} probes",
        r.t_lo, r.t_hi, r.iterations
    );
    eprintln!("min SINR  NMF {:.6e}", r.t_star);
    eprintln!(
        "min SINR  PMF {:.6e}",
        sinr_breakdown(&net, &pmf_eta).min_sinr()
    );
    eprintln!(
        "min SINR  UPA {:.6e}",
        sinr_breakdown(&net, &upa(&net)).min_sinr()
    );
    Ok(())
}
