//! Network-wide max-min fairness by bisection over convex feasibility problems.
//!
//! A probe at target `t` maximizes a slack `σ ≤ 1` subject to every user's
//! SINR constraint, each row normalized by the user's full-power noise plus
//! interference. The target is achievable iff the optimal slack is
//! non-negative. With one serving array per user the SINR constraints are
//! linear in `η` and the probe is a linear program; under joint service they
//! are second-order cones in `ψ = √η`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::Serialize;

use super::PowerAllocation;
use crate::linkrate::sinr_breakdown;
use crate::network::Network;
use crate::{Error, Result};

/// Optimal slack below which a probe counts as infeasible.
pub const SLACK_TOLERANCE: f64 = 1e-7;
pub const MAX_BISECTIONS: usize = 60;
const SOLVER_MAX_ITER: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Formulation {
    Linear,
    Conic,
}

#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub t: f64,
    pub feasible: bool,
    pub slack: f64,
    pub solver_iterations: u32,
    #[serde(skip)]
    pub eta: Option<PowerAllocation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxMinResult {
    #[serde(skip)]
    pub eta: PowerAllocation,
    /// Smallest SINR achieved by `eta`.
    pub t_star: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub iterations: usize,
    pub trace: Vec<Probe>,
}

impl MaxMinResult {
    pub fn relative_width(&self) -> f64 {
        (self.t_hi - self.t_lo) / self.t_hi.max(f64::MIN_POSITIVE)
    }

    /// Writes the probe sequence as `t,feasible,slack,solver_iterations`.
    pub fn write_trace<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.trace {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest full-budget, interference-free SINR over all users.
pub fn upper_target(net: &Network) -> f64 {
    (0..net.num_users())
        .map(|u| {
            let amp: f64 = net.serving[u]
                .iter()
                .map(|&a| (net.gain_factor[a] * net.ag.get(a, u) * net.arrays[a].budget).sqrt())
                .sum();
            net.rho_dl * amp * amp
        })
        .fold(0.0, f64::max)
}

fn default_formulation(net: &Network) -> Formulation {
    if net.serving.iter().all(|s| s.len() == 1) {
        Formulation::Linear
    } else {
        Formulation::Conic
    }
}

pub fn feasible_at(net: &Network, t: f64) -> Result<Probe> {
    feasible_at_with(net, t, default_formulation(net))
}

pub fn feasible_at_with(net: &Network, t: f64, form: Formulation) -> Result<Probe> {
    if t <= 0.0 {
        return Ok(Probe {
            t,
            feasible: true,
            slack: 0.0,
            solver_iterations: 0,
            eta: Some(PowerAllocation::for_network(net)),
        });
    }
    let problem = match form {
        Formulation::Linear => linear_probe(net, t)?,
        Formulation::Conic => conic_probe(net, t),
    };
    problem.solve(net, t)
}

/// Bisects the max-min SINR target to relative width `tol`.
pub fn nmf(net: &Network, tol: f64) -> Result<MaxMinResult> {
    let form = default_formulation(net);
    let mut lo = 0.0;
    let mut hi = upper_target(net);
    let mut best = PowerAllocation::for_network(net);
    let mut trace = Vec::new();
    let mut iterations = 0;
    while hi - lo > tol * hi && iterations < MAX_BISECTIONS {
        let t = 0.5 * (lo + hi);
        let mut probe = feasible_at_with(net, t, form)?;
        iterations += 1;
        if probe.feasible {
            lo = t;
            best = probe.eta.take().expect("feasible probe carries eta");
        } else {
            hi = t;
            probe.eta = None;
        }
        trace.push(probe);
    }
    let t_star = sinr_breakdown(net, &best).min_sinr();
    Ok(MaxMinResult {
        eta: best,
        t_star,
        t_lo: lo,
        t_hi: hi,
        iterations,
        trace,
    })
}

/// Default settings first, then fallbacks for runs that stall.
fn solver_settings() -> Vec<DefaultSettings<f64>> {
    let base = || {
        let mut b = DefaultSettingsBuilder::default();
        b.verbose(false).max_iter(SOLVER_MAX_ITER);
        b
    };
    vec![
        base().build().expect("valid solver settings"),
        base()
            .equilibrate_enable(false)
            .build()
            .expect("valid solver settings"),
        base()
            .max_step_fraction(0.9)
            .static_regularization_constant(1e-7)
            .iterative_refinement_max_iter(50)
            .build()
            .expect("valid solver settings"),
        base()
            .tol_gap_abs(1e-7)
            .tol_gap_rel(1e-7)
            .tol_feas(1e-7)
            .build()
            .expect("valid solver settings"),
    ]
}

/// Sparse conic program `min −σ  s.t.  A x + s = b, s ∈ K` assembled row by row.
struct ConeProgram {
    num_vars: usize,
    rows: usize,
    ti: Vec<usize>,
    tj: Vec<usize>,
    tv: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    sigma: usize,
    /// Variable index and whether it holds `√η` for each nonzero coefficient.
    eta_vars: Vec<(usize, usize, usize, bool)>,
}

impl ConeProgram {
    fn new(num_vars: usize, sigma: usize) -> Self {
        ConeProgram {
            num_vars,
            rows: 0,
            ti: Vec::new(),
            tj: Vec::new(),
            tv: Vec::new(),
            b: Vec::new(),
            cones: Vec::new(),
            sigma,
            eta_vars: Vec::new(),
        }
    }

    /// Adds a row `s = b − Σ coef·x`.
    fn row(&mut self, coefs: &[(usize, f64)], b: f64) {
        for &(j, v) in coefs {
            if v != 0.0 {
                self.ti.push(self.rows);
                self.tj.push(j);
                self.tv.push(v);
            }
        }
        self.b.push(b);
        self.rows += 1;
    }

    fn cone(&mut self, cone: SupportedConeT<f64>) {
        // merge runs of the same linear cone type
        match (self.cones.last_mut(), &cone) {
            (Some(SupportedConeT::ZeroConeT(n)), SupportedConeT::ZeroConeT(m))
            | (Some(SupportedConeT::NonnegativeConeT(n)), SupportedConeT::NonnegativeConeT(m)) => {
                *n += m
            }
            _ => self.cones.push(cone),
        }
    }

    fn solve(&self, net: &Network, t: f64) -> Result<Probe> {
        let p = CscMatrix::zeros((self.num_vars, self.num_vars));
        let mut q = vec![0.0; self.num_vars];
        q[self.sigma] = -1.0;
        let a = CscMatrix::new_from_triplets(
            self.rows,
            self.num_vars,
            self.ti.clone(),
            self.tj.clone(),
            self.tv.clone(),
        );
        let mut last = None;
        for settings in solver_settings() {
            let mut solver = DefaultSolver::new(&p, &q, &a, &self.b, &self.cones, settings);
            solver.solve();
            let sol = solver.solution;
            match sol.status {
                SolverStatus::Solved | SolverStatus::AlmostSolved => {
                    return Ok(self.probe(net, t, &sol.x, sol.iterations))
                }
                status => last = Some(format!("{status:?} after {} iterations", sol.iterations)),
            }
        }
        Err(Error::Solver {
            t,
            reason: last.unwrap_or_default(),
        })
    }

    fn probe(&self, net: &Network, t: f64, x: &[f64], iterations: u32) -> Probe {
        let slack = x[self.sigma];
        let feasible = slack >= -SLACK_TOLERANCE;
        let mut eta = PowerAllocation::for_network(net);
        for &(arr, u, j, is_sqrt) in &self.eta_vars {
            let v = x[j].max(0.0);
            eta.set(arr, u, if is_sqrt { v * v } else { v });
        }
        // interior-point iterates may sit a hair outside the budget
        for arr in 0..net.num_arrays() {
            let total = eta.array_power(net, arr);
            let budget = net.arrays[arr].budget;
            if total > budget {
                for &u in &net.served[arr] {
                    eta.set(arr, u, eta.get(arr, u) * budget / total);
                }
            }
        }
        Probe {
            t,
            feasible,
            slack,
            solver_iterations: iterations,
            eta: feasible.then_some(eta),
        }
    }
}

/// Variables: `x_u` (η of user `u` at its only serving array), `p_a`, `σ`.
fn linear_probe(net: &Network, t: f64) -> Result<ConeProgram> {
    let n_users = net.num_users();
    let n_arrays = net.num_arrays();
    if let Some(u) = (0..n_users).find(|&u| net.serving[u].len() != 1) {
        return Err(Error::Validation(format!(
            "linear probe needs one serving array per user; user {u} has {}",
            net.serving[u].len()
        )));
    }
    let x = |u: usize| u;
    let p = |a: usize| n_users + a;
    let sigma = n_users + n_arrays;
    let mut prog = ConeProgram::new(n_users + n_arrays + 1, sigma);
    let s = |v: usize| net.serving[v][0];

    for a in 0..n_arrays {
        let mut coefs = vec![(p(a), 1.0)];
        coefs.extend(net.served[a].iter().map(|&u| (x(u), -1.0)));
        prog.row(&coefs, 0.0);
    }
    prog.cone(SupportedConeT::ZeroConeT(n_arrays));

    let mut nonneg = 0;
    for u in 0..n_users {
        prog.row(&[(x(u), -1.0)], 0.0);
        prog.eta_vars.push((s(u), u, x(u), false));
        nonneg += 1;
    }
    for a in 0..n_arrays {
        prog.row(&[(p(a), 1.0)], net.arrays[a].budget);
        nonneg += 1;
    }
    prog.row(&[(sigma, 1.0)], 1.0);
    nonneg += 1;
    for u in 0..n_users {
        let d = net.full_power_noncoherent(u);
        let mut coefs = Vec::with_capacity(n_arrays + net.copilots[u].len() + 2);
        let b_u = net.rho_dl * net.gain_factor[s(u)] * net.ag.get(s(u), u);
        coefs.push((x(u), -b_u / (t * d)));
        for a in 0..n_arrays {
            let w = net.noncoherent_coef(a, u);
            if w > 0.0 {
                coefs.push((p(a), w / d));
            }
        }
        for &v in &net.copilots[u] {
            let f = net.rho_dl * net.gain_factor[s(v)] * net.ag.get(s(v), u);
            coefs.push((x(v), f / d));
        }
        coefs.push((sigma, 1.0));
        prog.row(&coefs, -1.0 / d);
        nonneg += 1;
    }
    prog.cone(SupportedConeT::NonnegativeConeT(nonneg));
    Ok(prog)
}

/// Variables: `ψ` per serving pair, array amplitudes `s_a ≥ ‖ψ_a‖`, `σ`.
fn conic_probe(net: &Network, t: f64) -> ConeProgram {
    let n_users = net.num_users();
    let n_arrays = net.num_arrays();
    let mut pair = vec![Vec::new(); n_users];
    let mut n_pairs = 0;
    for u in 0..n_users {
        for &a in &net.serving[u] {
            pair[u].push((a, n_pairs));
            n_pairs += 1;
        }
    }
    let s_var = |a: usize| n_pairs + a;
    let sigma = n_pairs + n_arrays;
    let mut prog = ConeProgram::new(n_pairs + n_arrays + 1, sigma);

    for (u, pairs) in pair.iter().enumerate() {
        for &(a, j) in pairs {
            prog.row(&[(j, -1.0)], 0.0);
            prog.eta_vars.push((a, u, j, true));
        }
    }
    for a in 0..n_arrays {
        prog.row(&[(s_var(a), 1.0)], net.arrays[a].budget.sqrt());
    }
    prog.row(&[(sigma, 1.0)], 1.0);
    prog.cone(SupportedConeT::NonnegativeConeT(n_pairs + n_arrays + 1));

    for a in (0..n_arrays).filter(|&a| !net.served[a].is_empty()) {
        prog.row(&[(s_var(a), -1.0)], 0.0);
        for &u in &net.served[a] {
            let j = pair[u].iter().find(|p| p.0 == a).expect("served pair").1;
            prog.row(&[(j, -1.0)], 0.0);
        }
        prog.cone(SupportedConeT::SecondOrderConeT(1 + net.served[a].len()));
    }

    let rho = net.rho_dl;
    for u in 0..n_users {
        let sd = net.full_power_noncoherent(u).sqrt();
        let mut head: Vec<(usize, f64)> = pair[u]
            .iter()
            .map(|&(a, j)| (j, -(rho.sqrt() * net.coherent_amp(a, u)) / (t.sqrt() * sd)))
            .collect();
        head.push((sigma, 1.0));
        prog.row(&head, 0.0);
        let mut dim = 2;
        for a in 0..n_arrays {
            let w = net.noncoherent_coef(a, u);
            if w > 0.0 && !net.served[a].is_empty() {
                prog.row(&[(s_var(a), -w.sqrt() / sd)], 0.0);
                dim += 1;
            }
        }
        for &v in &net.copilots[u] {
            let coefs: Vec<(usize, f64)> = pair[v]
                .iter()
                .map(|&(a, j)| (j, -(rho.sqrt() * net.coherent_amp(a, u)) / sd))
                .collect();
            prog.row(&coefs, 0.0);
            dim += 1;
        }
        prog.row(&[], 1.0 / sd);
        prog.cone(SupportedConeT::SecondOrderConeT(dim));
    }
    prog
}
