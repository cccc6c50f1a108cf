//! Downlink power allocation.
//!
//! Coefficients `η[a][u]` are fractions of the unit per-BS power that array
//! `a` spends on user `u`. Every strategy returns an allocation that is zero
//! off the association and respects `Σ_u η[a][u] ≤ budget_a`.

mod maxmin;

use rayon::prelude::*;
use serde::Serialize;

use crate::network::Network;
use crate::scenario::PowerStrategy;
use crate::{Error, Result};

pub use maxmin::{
    feasible_at, feasible_at_with, nmf, upper_target, Formulation, MaxMinResult, Probe,
};

/// Slack allowed on per-array budget sums.
pub const BUDGET_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub num_arrays: usize,
    pub num_users: usize,
    pub eta: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_arrays: usize, num_users: usize) -> Self {
        PowerAllocation {
            num_arrays,
            num_users,
            eta: vec![0.0; num_arrays * num_users],
        }
    }

    pub fn for_network(net: &Network) -> Self {
        Self::zeros(net.num_arrays(), net.num_users())
    }

    #[inline]
    pub fn get(&self, a: usize, u: usize) -> f64 {
        self.eta[a * self.num_users + u]
    }

    #[inline]
    pub fn set(&mut self, a: usize, u: usize, v: f64) {
        self.eta[a * self.num_users + u] = v;
    }

    pub fn array_power(&self, net: &Network, a: usize) -> f64 {
        net.served[a].iter().map(|&u| self.get(a, u)).sum()
    }

    /// Checks non-negativity, support on the association and per-array budgets.
    pub fn check(&self, net: &Network) -> Result<()> {
        for a in 0..net.num_arrays() {
            for u in 0..net.num_users() {
                let v = self.get(a, u);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Constraint(format!("eta[{a}][{u}] = {v}")));
                }
                if v > 0.0 && !net.serving[u].contains(&a) {
                    return Err(Error::Constraint(format!(
                        "array {a} powers unserved user {u}"
                    )));
                }
            }
            let total = self.array_power(net, a);
            let budget = net.arrays[a].budget;
            if total > budget * (1.0 + BUDGET_SLACK) + BUDGET_SLACK {
                return Err(Error::Constraint(format!(
                    "array {a} uses {total} of budget {budget}"
                )));
            }
        }
        Ok(())
    }
}

/// Allocation plus diagnostics common to every strategy.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AllocationReport {
    /// Users given zero power because their estimated channel gain vanishes.
    pub excluded_users: Vec<usize>,
    /// Arrays scaled back after decentralized solves overshot their budget.
    pub rescaled_arrays: Vec<usize>,
    /// Max-min results, one per solved (sub)problem.
    pub maxmin: Vec<MaxMinResult>,
}

/// Splits each array's budget evenly over its users.
pub fn upa(net: &Network) -> PowerAllocation {
    let mut eta = PowerAllocation::for_network(net);
    for (a, users) in net.served.iter().enumerate() {
        if users.is_empty() {
            continue;
        }
        let share = net.arrays[a].budget / users.len() as f64;
        for &u in users {
            eta.set(a, u, share);
        }
    }
    eta
}

/// Per-cell max-min fairness in closed form, assuming every array transmits
/// at full power and neglecting coherent interference.
///
/// With one serving array per user, each array equalizes the SINRs of its
/// own users. Under joint service the coefficients of a user are equal at
/// all its serving arrays and each cell's users are equalized.
pub fn pmf(net: &Network) -> (PowerAllocation, Vec<usize>) {
    let mut eta = PowerAllocation::for_network(net);
    let mut excluded = Vec::new();
    if net.setting.is_comp() {
        for l in 0..net.num_cells {
            let users: Vec<usize> = net.cell_users(l).collect();
            let mut ratios = Vec::with_capacity(users.len());
            for &u in &users {
                let r = net.rho_dl
                    * net.serving[u]
                        .iter()
                        .map(|&a| net.coherent_amp(a, u))
                        .sum::<f64>()
                        .powi(2);
                ratios.push(positive_ratio(net.full_power_noncoherent(u), r));
            }
            let Some(share) = net
                .cell_users(l)
                .flat_map(|u| net.serving[u].iter().map(|&a| net.arrays[a].cell_budget))
                .reduce(f64::min)
            else {
                continue;
            };
            let total: f64 = ratios.iter().flatten().sum();
            for (&u, ratio) in users.iter().zip(&ratios) {
                match ratio {
                    Some(x) if total > 0.0 => {
                        for &a in &net.serving[u] {
                            eta.set(a, u, x * share / total);
                        }
                    }
                    _ => excluded.push(u),
                }
            }
        }
    } else {
        for (a, users) in net.served.iter().enumerate() {
            let ratios: Vec<Option<f64>> = users
                .iter()
                .map(|&u| {
                    let f = net.rho_dl * net.gain_factor[a] * net.ag.get(a, u);
                    positive_ratio(net.full_power_noncoherent(u), f)
                })
                .collect();
            let total: f64 = ratios.iter().flatten().sum();
            for (&u, ratio) in users.iter().zip(&ratios) {
                match ratio {
                    Some(x) if total > 0.0 => eta.set(a, u, x * net.arrays[a].budget / total),
                    _ => excluded.push(u),
                }
            }
        }
        excluded.sort_unstable();
        excluded.dedup();
    }
    (eta, excluded)
}

fn positive_ratio(num: f64, den: f64) -> Option<f64> {
    let x = num / den;
    (den > 0.0 && x.is_finite()).then_some(x)
}

/// Per-cell SINR under the PMF objective: full-power non-coherent
/// interference and no coherent term.
pub fn pmf_objective_sinr(net: &Network, eta: &PowerAllocation) -> Vec<f64> {
    (0..net.num_users())
        .map(|u| {
            let amp: f64 = net.serving[u]
                .iter()
                .map(|&a| net.coherent_amp(a, u) * eta.get(a, u).sqrt())
                .sum();
            net.rho_dl * amp * amp / net.full_power_noncoherent(u)
        })
        .collect()
}

/// Problem solved inside each neighbourhood by [`dpa`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalObjective {
    Pmf,
    Nmf { tolerance: f64 },
}

/// Decentralized allocation: every cell solves the problem restricted to
/// itself and its neighbours and keeps only its own users' coefficients.
/// Arrays shared between cells are scaled back to their budget if the
/// assembled coefficients overshoot it.
pub fn dpa(
    net: &Network,
    neighbourhoods: &[Vec<usize>],
    objective: LocalObjective,
) -> Result<(PowerAllocation, AllocationReport)> {
    let locals: Vec<_> = (0..net.num_cells)
        .into_par_iter()
        .map(|l| -> Result<_> {
            let mut cells = neighbourhoods[l].clone();
            cells.push(l);
            let sub = net.restrict(&cells);
            let (eta, excluded, mm) = match objective {
                LocalObjective::Pmf => {
                    let (eta, ex) = pmf(&sub.net);
                    (eta, ex, None)
                }
                LocalObjective::Nmf { tolerance } => {
                    let r = nmf(&sub.net, tolerance)?;
                    (r.eta.clone(), Vec::new(), Some(r))
                }
            };
            let home = sub
                .cells
                .iter()
                .position(|&m| m == l)
                .expect("cell in its neighbourhood");
            let mut entries = Vec::new();
            for lu in sub.net.cell_users(home) {
                for &la in &sub.net.serving[lu] {
                    entries.push((sub.arrays[la], sub.users[lu], eta.get(la, lu)));
                }
            }
            let excluded: Vec<usize> = excluded
                .into_iter()
                .filter(|&lu| sub.net.cell_of(lu) == home)
                .map(|lu| sub.users[lu])
                .collect();
            Ok((entries, excluded, mm))
        })
        .collect::<Result<_>>()?;
    let mut eta = PowerAllocation::for_network(net);
    let mut report = AllocationReport::default();
    for (entries, excluded, mm) in locals {
        for (a, u, v) in entries {
            eta.set(a, u, v);
        }
        report.excluded_users.extend(excluded);
        report.maxmin.extend(mm);
    }
    for a in 0..net.num_arrays() {
        let total = eta.array_power(net, a);
        let budget = net.arrays[a].budget;
        if total > budget * (1.0 + BUDGET_SLACK) {
            let k = budget / total;
            for &u in &net.served[a] {
                eta.set(a, u, eta.get(a, u) * k);
            }
            report.rescaled_arrays.push(a);
        }
    }
    Ok((eta, report))
}

/// Runs the configured strategy on a full network.
pub fn allocate(
    net: &Network,
    strategy: PowerStrategy,
    neighbourhoods: &[Vec<usize>],
    tolerance: f64,
) -> Result<(PowerAllocation, AllocationReport)> {
    let mut report = AllocationReport::default();
    let eta = match strategy {
        PowerStrategy::Upa => upa(net),
        PowerStrategy::CpaPmf => {
            let (eta, ex) = pmf(net);
            report.excluded_users = ex;
            eta
        }
        PowerStrategy::CpaNmf => {
            let r = nmf(net, tolerance)?;
            let eta = r.eta.clone();
            report.maxmin.push(r);
            eta
        }
        PowerStrategy::DpaPmf => return dpa(net, neighbourhoods, LocalObjective::Pmf),
        PowerStrategy::DpaNmf => {
            return dpa(net, neighbourhoods, LocalObjective::Nmf { tolerance })
        }
    };
    Ok((eta, report))
}
