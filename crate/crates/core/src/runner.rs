//! Multi-drop experiments, summary statistics and result files.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::antenna::Pattern;
use crate::association::associate;
use crate::channel::{estimation_gains, large_scale_coupling, reuse_sets, CouplingTable, ReuseMap};
use crate::geometry::{build_layout, drop_users, Layout, UserDrop};
use crate::linkrate::{achievable_rates, sinr_breakdown, SinrBreakdown};
use crate::network::Network;
use crate::power::{allocate, AllocationReport, PowerAllocation};
use crate::scenario::{FrameAccounting, LinkBudget, Scenario};
use crate::seed;
use crate::{Error, Result};

/// Per-experiment state shared by every drop.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub scenario: Scenario,
    pub layout: Layout,
    pub pattern: Pattern,
    pub reuse: ReuseMap,
    pub frame: FrameAccounting,
    pub link_budget: LinkBudget,
    pub neighbourhoods: Vec<Vec<usize>>,
}

/// The large-scale state of one drop.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub drop_seed: u64,
    pub users: UserDrop,
    pub coupling: CouplingTable,
    pub network: Network,
}

#[derive(Clone, Debug, Serialize)]
pub struct DropResult {
    pub index: usize,
    pub seed: u64,
    pub breakdown: SinrBreakdown,
    pub rates: Vec<f64>,
    pub clamped_pairs: usize,
    pub excluded_users: usize,
    pub rescaled_arrays: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub frame: FrameAccounting,
    pub link_budget: LinkBudget,
    pub wrap_conflicts: usize,
    pub drops: Vec<DropResult>,
    #[serde(skip)]
    pub runtime_s: f64,
}

impl ExperimentResult {
    /// All per-user rates in ascending order.
    pub fn pooled_rates(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .drops
            .iter()
            .flat_map(|d| d.rates.iter().copied())
            .collect();
        r.sort_by(f64::total_cmp);
        r
    }
}

impl Experiment {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let layout = build_layout(scenario)?;
        let reuse = reuse_sets(scenario.pilot_reuse, &layout);
        let neighbourhoods = (0..layout.num_cells())
            .map(|l| layout.neighbors(l))
            .collect();
        Ok(Experiment {
            scenario: scenario.clone(),
            pattern: scenario.pattern.resolve()?,
            frame: scenario.frame()?,
            link_budget: scenario.link_budget(),
            layout,
            reuse,
            neighbourhoods,
        })
    }

    pub fn drop_seed(&self, index: usize) -> u64 {
        seed::derive(self.scenario.master_seed, index as u64)
    }

    pub fn snapshot(&self, index: usize) -> Result<Snapshot> {
        let s = &self.scenario;
        let drop_seed = self.drop_seed(index);
        let users = drop_users(
            &self.layout,
            s.users_per_cell,
            s.exclusion_radius_m,
            drop_seed,
        )?;
        let coupling = large_scale_coupling(
            &self.layout,
            &self.pattern,
            &users,
            drop_seed,
            &s.path_loss(),
            s.shadow_sigma_db,
        );
        let ag = estimation_gains(
            &coupling,
            &self.reuse,
            s.users_per_cell,
            &self.link_budget,
            self.frame.tau_p,
        );
        let assoc = associate(s.setting, &self.layout, &users, &coupling.c);
        let network = Network::new(
            s.setting,
            s.precoder,
            &self.layout,
            &self.reuse,
            &assoc,
            coupling.c.clone(),
            ag,
            s.users_per_cell,
            self.link_budget.rho_dl,
        )?;
        Ok(Snapshot {
            drop_seed,
            users,
            coupling,
            network,
        })
    }

    pub fn allocate(&self, net: &Network) -> Result<(PowerAllocation, AllocationReport)> {
        allocate(
            net,
            self.scenario.power_strategy,
            &self.neighbourhoods,
            self.scenario.nmf_tolerance,
        )
    }

    pub fn run_drop(&self, index: usize) -> Result<DropResult> {
        let snap = self.snapshot(index)?;
        let (eta, report) = self.allocate(&snap.network)?;
        eta.check(&snap.network)?;
        let breakdown = sinr_breakdown(&snap.network, &eta);
        let rates = achievable_rates(&breakdown, &self.frame, self.scenario.bandwidth_hz);
        Ok(DropResult {
            index,
            seed: snap.drop_seed,
            breakdown,
            rates,
            clamped_pairs: snap.coupling.clamped,
            excluded_users: report.excluded_users.len(),
            rescaled_arrays: report.rescaled_arrays.len(),
        })
    }

    /// Runs every drop in parallel; results are ordered by drop index.
    pub fn run(&self) -> Result<ExperimentResult> {
        let start = Instant::now();
        let drops = (0..self.scenario.num_drops)
            .into_par_iter()
            .map(|i| {
                self.run_drop(i).map_err(|e| Error::Drop {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentResult {
            scenario: self.scenario.clone(),
            frame: self.frame,
            link_budget: self.link_budget,
            wrap_conflicts: self.reuse.wrap_conflicts,
            drops,
            runtime_s: start.elapsed().as_secs_f64(),
        })
    }
}

pub fn run_experiment(s: &Scenario) -> Result<ExperimentResult> {
    Experiment::new(s)?.run()
}

/// Percentile `p ∈ [0, 1]` of an ascending sample, interpolating linearly
/// between order statistics at position `(n − 1)·p`.
pub fn percentile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub samples: usize,
    /// Rate achieved by 95% of users (5th percentile), bits/s.
    pub p95_likely: f64,
    /// Distribution-free 95% confidence interval of the 5th percentile.
    pub p95_likely_ci: (f64, f64),
    pub median: f64,
    pub mean: f64,
    pub setting: String,
    pub precoder: String,
    pub power_strategy: String,
    pub pilot_reuse: usize,
}

/// Order-statistic confidence interval for the `p`-quantile.
fn quantile_ci(sorted: &[f64], p: f64) -> (f64, f64) {
    let n = sorted.len() as f64;
    let half = 1.96 * (n * p * (1.0 - p)).sqrt();
    let idx = |x: f64| (x.round().max(0.0) as usize).min(sorted.len() - 1);
    (sorted[idx(n * p - half - 1.0)], sorted[idx(n * p + half)])
}

pub fn summarize(r: &ExperimentResult) -> Result<SummaryStats> {
    let pooled = r.pooled_rates();
    let p95_likely = percentile(&pooled, 0.05)?;
    Ok(SummaryStats {
        samples: pooled.len(),
        p95_likely,
        p95_likely_ci: quantile_ci(&pooled, 0.05),
        median: percentile(&pooled, 0.5)?,
        mean: pooled.iter().sum::<f64>() / pooled.len() as f64,
        setting: r.scenario.setting.to_string(),
        precoder: r.scenario.precoder.to_string(),
        power_strategy: r.scenario.power_strategy.to_string(),
        pilot_reuse: r.scenario.pilot_reuse,
    })
}

/// Writes `drop,cell,user,sinr,P,I1,I2,I3,rate_bps` rows in drop order.
pub fn write_rates<W: Write>(r: &ExperimentResult, out: W) -> Result<()> {
    let k = r.scenario.users_per_cell;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "drop", "cell", "user", "sinr", "P", "I1", "I2", "I3", "rate_bps",
    ])?;
    for d in &r.drops {
        let b = &d.breakdown;
        for u in 0..d.rates.len() {
            w.write_record([
                d.index.to_string(),
                (u / k).to_string(),
                (u % k).to_string(),
                b.sinr[u].to_string(),
                b.p[u].to_string(),
                b.i1[u].to_string(),
                b.i2[u].to_string(),
                b.i3[u].to_string(),
                d.rates[u].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Diagnostics {
    wrap_conflicts: usize,
    clamped_pairs: usize,
    excluded_users: usize,
    rescaled_arrays: usize,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    scenario: &'a Scenario,
    frame: &'a FrameAccounting,
    link_budget: &'a LinkBudget,
    stats: &'a SummaryStats,
    diagnostics: Diagnostics,
    runtime_s: f64,
}

/// Writes `rates.csv` and `summary.json` into `dir`.
pub fn emit_outputs(r: &ExperimentResult, stats: &SummaryStats, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rates(
        r,
        std::io::BufWriter::new(std::fs::File::create(dir.join("rates.csv"))?),
    )?;
    let doc = SummaryDocument {
        scenario: &r.scenario,
        frame: &r.frame,
        link_budget: &r.link_budget,
        stats,
        diagnostics: Diagnostics {
            wrap_conflicts: r.wrap_conflicts,
            clamped_pairs: r.drops.iter().map(|d| d.clamped_pairs).sum(),
            excluded_users: r.drops.iter().map(|d| d.excluded_users).sum(),
            rescaled_arrays: r.drops.iter().map(|d| d.rescaled_arrays).sum(),
        },
        runtime_s: r.runtime_s,
    };
    let mut f = std::fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &doc)?;
    writeln!(f)?;
    Ok(())
}
