//! The large-scale view of one network snapshot that rate evaluation and
//! power control operate on.

use crate::association::Association;
use crate::channel::{GainTable, ReuseMap};
use crate::geometry::Layout;
use crate::scenario::{Precoder, Setting};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayInfo {
    pub elements: usize,
    pub budget: f64,
    /// Budget available to each served cell in the full network.
    pub cell_budget: f64,
    /// Local indices of the cells this array serves.
    pub served_cells: Vec<usize>,
}

/// Everything needed to build a [`Network`] without a geometric layout.
#[derive(Clone, Debug)]
pub struct NetworkParts {
    pub setting: Setting,
    pub precoder: Precoder,
    pub users_per_cell: usize,
    pub class_of_cell: Vec<usize>,
    pub arrays: Vec<ArrayInfo>,
    pub serving: Vec<Vec<usize>>,
    pub c: GainTable,
    pub ag: GainTable,
    pub rho_dl: f64,
}

#[derive(Clone, Debug)]
pub struct Network {
    pub setting: Setting,
    pub precoder: Precoder,
    pub users_per_cell: usize,
    pub num_cells: usize,
    pub class_of_cell: Vec<usize>,
    pub arrays: Vec<ArrayInfo>,
    pub serving: Vec<Vec<usize>>,
    pub served: Vec<Vec<usize>>,
    pub c: GainTable,
    pub ag: GainTable,
    pub rho_dl: f64,
    pub pilot: Vec<usize>,
    /// Other users sharing each user's pilot.
    pub copilots: Vec<Vec<usize>>,
    /// Array gain factor: `M_a` for MR, `M_a` minus the number of served
    /// pilot directions for ZF.
    pub gain_factor: Vec<f64>,
    /// `serves_pilot[a][p]`: array `a` steers a ZF null along pilot `p`.
    pub serves_pilot: Vec<Vec<bool>>,
}

/// A sub-network together with the parent indices of its users and arrays.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub net: Network,
    pub cells: Vec<usize>,
    pub users: Vec<usize>,
    pub arrays: Vec<usize>,
}

impl Network {
    pub fn from_parts(p: NetworkParts) -> Result<Self> {
        let k = p.users_per_cell;
        let num_cells = p.class_of_cell.len();
        let num_users = num_cells * k;
        if p.serving.len() != num_users || p.c.num_users != num_users || p.ag.num_users != num_users
        {
            return Err(Error::Validation(format!(
                "network tables disagree on user count {num_users}"
            )));
        }
        let num_classes = p.class_of_cell.iter().max().map_or(1, |m| m + 1);
        let pilot: Vec<usize> = (0..num_users)
            .map(|u| p.class_of_cell[u / k] * k + u % k)
            .collect();
        let mut served = vec![Vec::new(); p.arrays.len()];
        for (u, arrays) in p.serving.iter().enumerate() {
            for &a in arrays {
                served[a].push(u);
            }
        }
        let mut serves_pilot = vec![vec![false; num_classes * k]; p.arrays.len()];
        let mut gain_factor = Vec::with_capacity(p.arrays.len());
        for (a, info) in p.arrays.iter().enumerate() {
            for &u in &served[a] {
                serves_pilot[a][pilot[u]] = true;
            }
            let directions = serves_pilot[a].iter().filter(|&&b| b).count();
            let g = match p.precoder {
                Precoder::Mr => info.elements as f64,
                Precoder::Zf => {
                    if directions >= info.elements {
                        return Err(Error::ZeroForcingRank {
                            array: a,
                            users: directions,
                            elements: info.elements,
                        });
                    }
                    (info.elements - directions) as f64
                }
            };
            gain_factor.push(g);
        }
        let copilots = copilot_lists(&pilot);
        Ok(Network {
            setting: p.setting,
            precoder: p.precoder,
            users_per_cell: k,
            num_cells,
            class_of_cell: p.class_of_cell,
            arrays: p.arrays,
            serving: p.serving,
            served,
            c: p.c,
            ag: p.ag,
            rho_dl: p.rho_dl,
            pilot,
            copilots,
            gain_factor,
            serves_pilot,
        })
    }

    /// Assembles a network from a layout, reuse classes and association.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        setting: Setting,
        precoder: Precoder,
        layout: &Layout,
        reuse: &ReuseMap,
        assoc: &Association,
        c: GainTable,
        ag: GainTable,
        users_per_cell: usize,
        rho_dl: f64,
    ) -> Result<Self> {
        let arrays = layout
            .arrays
            .iter()
            .map(|r| ArrayInfo {
                elements: r.element_count,
                budget: r.power_budget,
                cell_budget: r.power_budget / r.served_cells.len().max(1) as f64,
                served_cells: r.served_cells.clone(),
            })
            .collect();
        Network::from_parts(NetworkParts {
            setting,
            precoder,
            users_per_cell,
            class_of_cell: reuse.class_of.clone(),
            arrays,
            serving: assoc.serving.clone(),
            c,
            ag,
            rho_dl,
        })
    }

    pub fn num_users(&self) -> usize {
        self.serving.len()
    }

    pub fn num_arrays(&self) -> usize {
        self.arrays.len()
    }

    pub fn cell_of(&self, u: usize) -> usize {
        u / self.users_per_cell
    }

    pub fn class_of_user(&self, u: usize) -> usize {
        self.class_of_cell[self.cell_of(u)]
    }

    pub fn cell_users(&self, l: usize) -> std::ops::Range<usize> {
        l * self.users_per_cell..(l + 1) * self.users_per_cell
    }

    /// Whether array `a` serves some cell in user `u`'s reuse class.
    pub fn is_related(&self, a: usize, u: usize) -> bool {
        let class = self.class_of_user(u);
        self.arrays[a]
            .served_cells
            .iter()
            .any(|&l| self.class_of_cell[l] == class)
    }

    /// Noise-normalized non-coherent interference per unit transmit power
    /// of array `a` at user `u`.
    pub fn noncoherent_coef(&self, a: usize, u: usize) -> f64 {
        let c = self.c.get(a, u);
        let nulled = self.precoder == Precoder::Zf && self.serves_pilot[a][self.pilot[u]];
        let v = if nulled { c - self.ag.get(a, u) } else { c };
        self.rho_dl * v.max(0.0)
    }

    /// `√(G_a·ag)`: amplitude of the coherent beam gain of array `a` toward user `u`.
    pub fn coherent_amp(&self, a: usize, u: usize) -> f64 {
        (self.gain_factor[a] * self.ag.get(a, u)).sqrt()
    }

    /// `1 + Σ_a coef·budget_a`: noise plus non-coherent interference with every array at full power.
    pub fn full_power_noncoherent(&self, u: usize) -> f64 {
        1.0 + (0..self.num_arrays())
            .map(|a| self.noncoherent_coef(a, u) * self.arrays[a].budget)
            .sum::<f64>()
    }

    /// Sub-network of the given local cells. Arrays serving none of them are
    /// dropped; gain factors and ZF null directions are kept from the full network.
    pub fn restrict(&self, cells: &[usize]) -> Restriction {
        let mut cells = cells.to_vec();
        cells.sort_unstable();
        cells.dedup();
        let k = self.users_per_cell;
        let cell_pos = |l: usize| cells.iter().position(|&m| m == l);
        let users: Vec<usize> = cells.iter().flat_map(|&l| self.cell_users(l)).collect();
        let arrays: Vec<usize> = (0..self.num_arrays())
            .filter(|&a| {
                self.arrays[a]
                    .served_cells
                    .iter()
                    .any(|&l| cell_pos(l).is_some())
            })
            .collect();
        let array_pos = |a: usize| arrays.iter().position(|&b| b == a);
        let pick = |t: &GainTable| {
            let mut out = GainTable::zeros(arrays.len(), users.len());
            for (na, &a) in arrays.iter().enumerate() {
                for (nu, &u) in users.iter().enumerate() {
                    out.set(na, nu, t.get(a, u));
                }
            }
            out
        };
        let serving: Vec<Vec<usize>> = users
            .iter()
            .map(|&u| {
                self.serving[u]
                    .iter()
                    .filter_map(|&a| array_pos(a))
                    .collect()
            })
            .collect();
        let mut served = vec![Vec::new(); arrays.len()];
        for (u, s) in serving.iter().enumerate() {
            for &a in s {
                served[a].push(u);
            }
        }
        let pilot: Vec<usize> = users.iter().map(|&u| self.pilot[u]).collect();
        let net = Network {
            setting: self.setting,
            precoder: self.precoder,
            users_per_cell: k,
            num_cells: cells.len(),
            class_of_cell: cells.iter().map(|&l| self.class_of_cell[l]).collect(),
            arrays: arrays
                .iter()
                .map(|&a| {
                    let info = &self.arrays[a];
                    ArrayInfo {
                        elements: info.elements,
                        budget: info.budget,
                        cell_budget: info.cell_budget,
                        served_cells: info
                            .served_cells
                            .iter()
                            .filter_map(|&l| cell_pos(l))
                            .collect(),
                    }
                })
                .collect(),
            serving,
            served,
            c: pick(&self.c),
            ag: pick(&self.ag),
            rho_dl: self.rho_dl,
            copilots: copilot_lists(&pilot),
            pilot,
            gain_factor: arrays.iter().map(|&a| self.gain_factor[a]).collect(),
            serves_pilot: arrays
                .iter()
                .map(|&a| self.serves_pilot[a].clone())
                .collect(),
        };
        Restriction {
            net,
            cells,
            users,
            arrays,
        }
    }
}

fn copilot_lists(pilot: &[usize]) -> Vec<Vec<usize>> {
    (0..pilot.len())
        .map(|u| {
            (0..pilot.len())
                .filter(|&v| v != u && pilot[v] == pilot[u])
                .collect()
        })
        .collect()
}
