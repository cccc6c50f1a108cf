//! Closed-form effective SINR and achievable-rate lower bounds.
//!
//! For user `u` with serving arrays `S(u)`, array powers `P_a = Σ η_a` and
//! gain factor `G_a`:
//!
//! ```text
//! P  = ρ (Σ_{a∈S(u)} √(G_a·ag_au·η_au))²
//! I1 = Σ_{a related} ρ (c_au − [ZF, a nulls p(u)]·ag_au) P_a
//! I2 = Σ_{a unrelated} ρ c_au P_a
//! I3 = ρ Σ_{v co-pilot} (Σ_{a∈S(v)} √(G_a·ag_au·η_av))²
//! ```
//!
//! An array is related to `u` when it serves a cell of `u`'s reuse class.

use serde::Serialize;

use crate::network::Network;
use crate::power::PowerAllocation;
use crate::scenario::FrameAccounting;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SinrBreakdown {
    pub p: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub i3: Vec<f64>,
    pub sinr: Vec<f64>,
}

impl SinrBreakdown {
    pub fn len(&self) -> usize {
        self.sinr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sinr.is_empty()
    }

    pub fn min_sinr(&self) -> f64 {
        self.sinr.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Per-array transmit power `Σ_{u served} η`.
pub fn array_powers(net: &Network, eta: &PowerAllocation) -> Vec<f64> {
    (0..net.num_arrays())
        .map(|a| net.served[a].iter().map(|&u| eta.get(a, u)).sum())
        .collect()
}

pub fn user_terms(net: &Network, eta: &PowerAllocation, powers: &[f64], u: usize) -> [f64; 4] {
    let rho = net.rho_dl;
    let coherent = |v: usize| -> f64 {
        net.serving[v]
            .iter()
            .map(|&a| net.coherent_amp(a, u) * eta.get(a, v).max(0.0).sqrt())
            .sum()
    };
    let p = rho * coherent(u).powi(2);
    let (mut i1, mut i2) = (0.0, 0.0);
    for (a, &pa) in powers.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let term = net.noncoherent_coef(a, u) * pa;
        if net.is_related(a, u) {
            i1 += term;
        } else {
            i2 += term;
        }
    }
    let i3 = rho
        * net.copilots[u]
            .iter()
            .map(|&v| coherent(v).powi(2))
            .sum::<f64>();
    [p, i1, i2, i3]
}

pub fn sinr_breakdown(net: &Network, eta: &PowerAllocation) -> SinrBreakdown {
    let powers = array_powers(net, eta);
    let n = net.num_users();
    let mut out = SinrBreakdown {
        p: Vec::with_capacity(n),
        i1: Vec::with_capacity(n),
        i2: Vec::with_capacity(n),
        i3: Vec::with_capacity(n),
        sinr: Vec::with_capacity(n),
    };
    for u in 0..n {
        let [p, i1, i2, i3] = user_terms(net, eta, &powers, u);
        out.p.push(p);
        out.i1.push(i1);
        out.i2.push(i2);
        out.i3.push(i3);
        out.sinr.push(p / (i1 + i2 + i3 + 1.0));
    }
    out
}

/// SINR from the single-sum form that holds when every user has exactly one
/// serving array. Returns `None` otherwise.
pub fn sinr_single_serving(net: &Network, eta: &PowerAllocation) -> Option<Vec<f64>> {
    if net.serving.iter().any(|s| s.len() != 1) {
        return None;
    }
    let powers = array_powers(net, eta);
    let rho = net.rho_dl;
    let s = |v: usize| net.serving[v][0];
    Some(
        (0..net.num_users())
            .map(|u| {
                let a = s(u);
                let desired = rho * net.gain_factor[a] * net.ag.get(a, u) * eta.get(a, u);
                let noncoherent: f64 = (0..net.num_arrays())
                    .map(|b| net.noncoherent_coef(b, u) * powers[b])
                    .sum();
                let coherent: f64 = net.copilots[u]
                    .iter()
                    .map(|&v| rho * net.gain_factor[s(v)] * net.ag.get(s(v), u) * eta.get(s(v), v))
                    .sum();
                desired / (noncoherent + coherent + 1.0)
            })
            .collect(),
    )
}

/// Achievable downlink rate in bits/s.
pub fn achievable_rate(sinr: f64, frame: &FrameAccounting, bandwidth_hz: f64) -> f64 {
    frame.dl_fraction() * bandwidth_hz * (1.0 + sinr).log2()
}

pub fn achievable_rates(
    sb: &SinrBreakdown,
    frame: &FrameAccounting,
    bandwidth_hz: f64,
) -> Vec<f64> {
    sb.sinr
        .iter()
        .map(|&s| achievable_rate(s, frame, bandwidth_hz))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainTable;
    use crate::network::{ArrayInfo, NetworkParts};
    use crate::scenario::{Precoder, Setting};

    fn single_user(precoder: Precoder) -> Network {
        Network::from_parts(NetworkParts {
            setting: Setting::SecMP,
            precoder,
            users_per_cell: 1,
            class_of_cell: vec![0],
            arrays: vec![ArrayInfo {
                elements: 2,
                budget: 1.0 / 3.0,
                cell_budget: 1.0 / 3.0,
                served_cells: vec![0],
            }],
            serving: vec![vec![0]],
            c: GainTable {
                num_arrays: 1,
                num_users: 1,
                data: vec![1.0],
            },
            ag: GainTable {
                num_arrays: 1,
                num_users: 1,
                data: vec![0.5],
            },
            rho_dl: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn hand_evaluated_zf_example() {
        let net = single_user(Precoder::Zf);
        let mut eta = PowerAllocation::zeros(1, 1);
        eta.set(0, 0, 1.0 / 3.0);
        let sb = sinr_breakdown(&net, &eta);
        assert!((sb.p[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((sb.i1[0] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!((sb.i2[0], sb.i3[0]), (0.0, 0.0));
        assert!((sb.sinr[0] - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn mr_over_zf_prefactor() {
        let mut eta = PowerAllocation::zeros(1, 1);
        eta.set(0, 0, 1.0 / 3.0);
        let zf = sinr_breakdown(&single_user(Precoder::Zf), &eta);
        let mr = sinr_breakdown(&single_user(Precoder::Mr), &eta);
        assert!((mr.p[0] / zf.p[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_power_zero_sinr() {
        let sb = sinr_breakdown(&single_user(Precoder::Mr), &PowerAllocation::zeros(1, 1));
        assert_eq!(sb.sinr, vec![0.0]);
    }

    #[test]
    fn rate_examples() {
        let frame = FrameAccounting {
            tau_c: 420,
            tau_p: 18,
            tau_ul: 134,
            tau_dl: 268,
        };
        let r = achievable_rate(1.0, &frame, 20e6);
        assert!((r - 268.0 / 420.0 * 20e6).abs() < 1e-6);
        assert!((r / 1e6 - 12.76).abs() < 0.01);
        assert_eq!(achievable_rate(0.0, &frame, 20e6), 0.0);
        assert!(
            (achievable_rate(3.7, &frame, 40e6) / achievable_rate(3.7, &frame, 20e6) - 2.0).abs()
                < 1e-15
        );
    }
}
