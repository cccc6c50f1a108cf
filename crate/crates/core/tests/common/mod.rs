#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sectorsim::channel::GainTable;
use sectorsim::linkrate::sinr_breakdown;
use sectorsim::network::{ArrayInfo, NetworkParts};
use sectorsim::power::PowerAllocation;
use sectorsim::runner::Experiment;
use sectorsim::{Network, PowerStrategy, Precoder, Scenario, Setting};

pub fn scenario(
    setting: Setting,
    precoder: Precoder,
    cells: usize,
    users: usize,
    antennas: usize,
    seed: u64,
) -> Scenario {
    Scenario {
        num_cells: cells,
        users_per_cell: users,
        antennas_per_array: antennas,
        setting,
        precoder,
        power_strategy: PowerStrategy::CpaPmf,
        master_seed: seed,
        ..Scenario::default()
    }
}

pub fn instance(
    setting: Setting,
    precoder: Precoder,
    cells: usize,
    users: usize,
    antennas: usize,
    seed: u64,
) -> Network {
    let s = scenario(setting, precoder, cells, users, antennas, seed);
    Experiment::new(&s).unwrap().snapshot(0).unwrap().network
}

/// Two single-user cells, each served by its own array.
pub fn two_user(seed: u64, precoder: Precoder, shared_pilot: bool) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = GainTable::zeros(2, 2);
    let mut ag = GainTable::zeros(2, 2);
    for a in 0..2 {
        for u in 0..2 {
            let scale = if a == u { 1.0 } else { 0.05 };
            let v = scale * rng.gen_range(0.2..1.0);
            c.set(a, u, v);
            ag.set(a, u, v * rng.gen_range(0.2..0.9));
        }
    }
    let arrays = (0..2)
        .map(|l| ArrayInfo {
            elements: 16,
            budget: 1.0 / 3.0,
            cell_budget: 1.0 / 3.0,
            served_cells: vec![l],
        })
        .collect();
    Network::from_parts(NetworkParts {
        setting: Setting::SecMP,
        precoder,
        users_per_cell: 1,
        class_of_cell: if shared_pilot { vec![0, 0] } else { vec![0, 1] },
        arrays,
        serving: vec![vec![0], vec![1]],
        c,
        ag,
        rho_dl: 2.0,
    })
    .unwrap()
}

/// Coefficients are drawn uniformly, then each array is scaled to a random
/// fraction of its budget.
pub fn random_feasible(net: &Network, rng: &mut ChaCha8Rng) -> PowerAllocation {
    let mut eta = PowerAllocation::for_network(net);
    for a in 0..net.num_arrays() {
        let users = &net.served[a];
        let w: Vec<f64> = users.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            continue;
        }
        let fill = rng.gen_range(0.5..1.0) * net.arrays[a].budget;
        for (&u, x) in users.iter().zip(&w) {
            eta.set(a, u, x / total * fill);
        }
    }
    eta
}

/// Best min-SINR of a two-user network over a uniform grid of both budgets.
pub fn grid_maxmin(net: &Network, steps: usize) -> f64 {
    let pairs: Vec<(usize, usize)> = (0..2).map(|u| (net.serving[u][0], u)).collect();
    let basis = |i: usize| {
        let mut eta = PowerAllocation::for_network(net);
        eta.set(pairs[i].0, pairs[i].1, 1.0);
        let sb = sinr_breakdown(net, &eta);
        (0..2)
            .map(|u| (sb.p[u], sb.i1[u] + sb.i2[u] + sb.i3[u]))
            .collect::<Vec<_>>()
    };
    let (b0, b1) = (basis(0), basis(1));
    let h0 = net.arrays[pairs[0].0].budget / steps as f64;
    let h1 = net.arrays[pairs[1].0].budget / steps as f64;
    let mut best = 0.0f64;
    for i in 0..=steps {
        let x = i as f64 * h0;
        for j in 0..=steps {
            let y = j as f64 * h1;
            let s = (0..2)
                .map(|u| (x * b0[u].0 + y * b1[u].0) / (1.0 + x * b0[u].1 + y * b1[u].1))
                .fold(f64::INFINITY, f64::min);
            best = best.max(s);
        }
    }
    best
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
