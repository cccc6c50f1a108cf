use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sectorsim::runner::{emit_outputs, summarize, Experiment};
use sectorsim::scenario::PatternSpec;
use sectorsim::{PowerStrategy, Precoder, Scenario, Setting};

/// Run a multi-drop downlink experiment and write rates.csv and summary.json.
#[derive(Parser, Debug)]
#[command(name = "sectorsim", version)]
struct Cli {
    /// TOML scenario file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// omni, secmd, secmp, compsec or compomn.
    #[arg(long)]
    setting: Option<Setting>,
    /// mr or zf.
    #[arg(long)]
    precoder: Option<Precoder>,
    /// upa, cpa-nmf, cpa-pmf, dpa-nmf or dpa-pmf.
    #[arg(long)]
    power: Option<PowerStrategy>,
    /// Pilot reuse factor, 1 or 3.
    #[arg(long)]
    reuse: Option<usize>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// irp:THETA:AQ, file:PATH or omni.
    #[arg(long)]
    pattern: Option<PatternSpec>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the array layout to layout.csv.
    #[arg(long)]
    dump_layout: bool,
}

fn run(cli: Cli) -> sectorsim::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| sectorsim::Error::Validation(e.to_string()))?;
    }
    let mut s = match &cli.config {
        Some(path) => Scenario::from_file(path)?,
        None => Scenario::default(),
    };
    if let Some(v) = cli.setting {
        s.setting = v;
    }
    if let Some(v) = cli.precoder {
        s.precoder = v;
    }
    if let Some(v) = cli.power {
        s.power_strategy = v;
    }
    if let Some(v) = cli.reuse {
        s.pilot_reuse = v;
    }
    if let Some(v) = cli.drops {
        s.num_drops = v;
    }
    if let Some(v) = cli.seed {
        s.master_seed = v;
    }
    if let Some(v) = cli.pattern {
        s.pattern = v;
    }
    let exp = Experiment::new(&s)?;
    let result = exp.run()?;
    let stats = summarize(&result)?;
    emit_outputs(&result, &stats, &cli.out)?;
    if cli.dump_layout {
        exp.layout
            .write_csv(std::fs::File::create(cli.out.join("layout.csv"))?)?;
    }
    println!(
        "{} {} {} xi={}: 95%-likely {:.3} Mbps, median {:.3} Mbps over {} users ({:.1} s)",
        stats.setting,
        stats.precoder,
        stats.power_strategy,
        stats.pilot_reuse,
        stats.p95_likely / 1e6,
        stats.median / 1e6,
        stats.samples,
        result.runtime_s
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
