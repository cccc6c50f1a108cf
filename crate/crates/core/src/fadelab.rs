//! Monte Carlo check of the closed-form SINR terms under Rayleigh fading.
//!
//! For each array the simulator draws one i.i.d. `CN(0, 1)` column `z_p` per
//! pilot, so the MMSE estimate of user `u`'s channel is `√ag·z_{p(u)}` and
//! the true channel adds an independent error of variance `c − ag`. MR
//! precoding uses `conj(Z_s)/√M`, ZF uses `√(M−R)·conj(Z_s)(Z_sᵀ conj(Z_s))⁻¹`
//! over the `R` served pilot columns `Z_s`.
//!
//! The signal received by a probe user `u` is split by the array `a` it
//! comes through and the symbol `v` it carries:
//!
//! | term | content |
//! |------|---------|
//! | T11  | mean beam gain on `u`'s own symbol |
//! | T12  | mean beam gain on co-pilot symbols |
//! | T13  | fluctuation of those beam gains (MR only) |
//! | T14  | estimate-direction leakage from other pilots (MR only) |
//! | T2   | estimation error at arrays serving `u`'s pilot |
//! | T3   | arrays of `u`'s reuse class not serving `u`'s pilot |
//! | T4   | arrays of other reuse classes |
//! | T5   | unit noise |

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::linkrate::{array_powers, sinr_breakdown};
use crate::network::Network;
use crate::power::PowerAllocation;
use crate::scenario::Precoder;
use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Term {
    T11,
    T12,
    T13,
    T14,
    T2,
    T3,
    T4,
    T5,
}

impl Term {
    pub const ALL: [Term; 8] = [
        Term::T11,
        Term::T12,
        Term::T13,
        Term::T14,
        Term::T2,
        Term::T3,
        Term::T4,
        Term::T5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::T11 => "T11",
            Term::T12 => "T12",
            Term::T13 => "T13",
            Term::T14 => "T14",
            Term::T2 => "T2",
            Term::T3 => "T3",
            Term::T4 => "T4",
            Term::T5 => "T5",
        }
    }
}

const NUM_TERMS: usize = 8;
/// Raw per-symbol components: S (co-pilot beam), U (other-pilot beam), E, R, O.
const NUM_COMPONENTS: usize = 5;
const REALIZATIONS_PER_CHUNK: usize = 50;
const MAX_CONSECUTIVE_SINGULAR: usize = 10;

#[derive(Clone, Debug)]
pub struct FadelabConfig {
    pub realizations: usize,
    pub seed: u64,
    pub probe_cell: usize,
}

impl Default for FadelabConfig {
    fn default() -> Self {
        FadelabConfig {
            realizations: 2000,
            seed: 1,
            probe_cell: 0,
        }
    }
}

/// Empirical term statistics for every user of the probe cell.
#[derive(Clone, Debug, Serialize)]
pub struct TermStats {
    pub realizations: usize,
    pub probe_users: Vec<usize>,
    /// `variance[i][term]` for probe user `i`.
    pub variance: Vec<[f64; NUM_TERMS]>,
    /// Pooled |correlation| for every pair of terms with non-zero variance.
    pub correlations: Vec<(Term, Term, f64)>,
    /// Largest off-diagonal magnitude of `Z_sᵀ B / √(M−R)` seen under ZF.
    pub zf_leakage: f64,
    pub singular_redraws: usize,
}

impl TermStats {
    pub fn max_correlation(&self) -> f64 {
        self.correlations.iter().map(|c| c.2).fold(0.0, f64::max)
    }
}

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn cn_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let data: Vec<Complex64> = (0..rows * cols).map(|_| cn(rng)).collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Array of user `u`'s view: serves its pilot, shares its class, or neither.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Group {
    ServesPilot,
    Related,
    Unrelated,
}

fn group(net: &Network, a: usize, u: usize) -> Group {
    if net.serves_pilot[a][net.pilot[u]] {
        Group::ServesPilot
    } else if net.is_related(a, u) {
        Group::Related
    } else {
        Group::Unrelated
    }
}

/// Precomputed per-array layout of pilot columns.
struct ArrayPlan {
    elements: usize,
    /// Pilots with a drawn column; served pilots first.
    pilots: Vec<usize>,
    served_pilots: usize,
    /// `(user, column in the precoder, sqrt(ρ·η))` for powered users.
    symbols: Vec<(usize, usize, f64)>,
}

fn plan(net: &Network, eta: &PowerAllocation, probes: &[usize]) -> Vec<ArrayPlan> {
    (0..net.num_arrays())
        .map(|a| {
            let mut pilots: Vec<usize> = net.served[a].iter().map(|&u| net.pilot[u]).collect();
            pilots.sort_unstable();
            pilots.dedup();
            let served_pilots = pilots.len();
            for &u in probes {
                if !pilots.contains(&net.pilot[u]) {
                    pilots.push(net.pilot[u]);
                }
            }
            let symbols = net.served[a]
                .iter()
                .filter(|&&v| eta.get(a, v) > 0.0)
                .map(|&v| {
                    let col = pilots
                        .iter()
                        .position(|&p| p == net.pilot[v])
                        .expect("served pilot");
                    (v, col, (net.rho_dl * eta.get(a, v)).sqrt())
                })
                .collect();
            ArrayPlan {
                elements: net.arrays[a].elements,
                pilots,
                served_pilots,
                symbols,
            }
        })
        .collect()
}

/// Running sums of per-symbol components and their products.
#[derive(Clone)]
struct Accumulator {
    n: usize,
    num_users: usize,
    sum: Vec<[Complex64; NUM_COMPONENTS]>,
    prod: Vec<[[Complex64; NUM_COMPONENTS]; NUM_COMPONENTS]>,
    zf_leakage: f64,
    singular_redraws: usize,
}

impl Accumulator {
    fn new(probes: usize, num_users: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Accumulator {
            n: 0,
            num_users,
            sum: vec![[zero; NUM_COMPONENTS]; probes * num_users],
            prod: vec![[[zero; NUM_COMPONENTS]; NUM_COMPONENTS]; probes * num_users],
            zf_leakage: 0.0,
            singular_redraws: 0,
        }
    }

    fn merge(&mut self, o: &Accumulator) {
        self.n += o.n;
        for (a, b) in self.sum.iter_mut().zip(&o.sum) {
            for k in 0..NUM_COMPONENTS {
                a[k] += b[k];
            }
        }
        for (a, b) in self.prod.iter_mut().zip(&o.prod) {
            for k in 0..NUM_COMPONENTS {
                for l in 0..NUM_COMPONENTS {
                    a[k][l] += b[k][l];
                }
            }
        }
        self.zf_leakage = self.zf_leakage.max(o.zf_leakage);
        self.singular_redraws += o.singular_redraws;
    }
}

/// Builds the precoder for the first `r` columns of `z`, or `None` if the Gram matrix is singular.
fn precoder(z: &DMatrix<Complex64>, r: usize, kind: Precoder) -> Option<(DMatrix<Complex64>, f64)> {
    let m = z.nrows();
    let zs = z.columns(0, r);
    let zs_conj = zs.map(|x| x.conj());
    match kind {
        Precoder::Mr => Some((zs_conj / Complex64::new((m as f64).sqrt(), 0.0), 0.0)),
        Precoder::Zf => {
            let gram = zs.transpose() * &zs_conj;
            let inv = gram.clone().cholesky()?.inverse();
            let b = (&zs_conj * inv) * Complex64::new(((m - r) as f64).sqrt(), 0.0);
            let check = zs.transpose() * &b / Complex64::new(((m - r) as f64).sqrt(), 0.0);
            let mut leak: f64 = 0.0;
            for i in 0..r {
                for j in 0..r {
                    let target = if i == j { 1.0 } else { 0.0 };
                    leak = leak.max((check[(i, j)] - target).norm());
                }
            }
            Some((b, leak))
        }
    }
}

fn simulate_chunk(
    net: &Network,
    plans: &[ArrayPlan],
    probes: &[usize],
    groups: &[Vec<Group>],
    realizations: usize,
    chunk_seed: u64,
) -> Result<Accumulator> {
    let mut rng = ChaCha8Rng::seed_from_u64(chunk_seed);
    let n_users = net.num_users();
    let mut acc = Accumulator::new(probes.len(), n_users);
    let zero = Complex64::new(0.0, 0.0);
    let mut comp = vec![[zero; NUM_COMPONENTS]; probes.len() * n_users];
    let mut touched: Vec<usize> = Vec::new();
    for _ in 0..realizations {
        for c in &touched {
            comp[*c] = [zero; NUM_COMPONENTS];
        }
        touched.clear();
        for (a, pl) in plans.iter().enumerate() {
            if pl.symbols.is_empty() {
                continue;
            }
            let m = pl.elements;
            let mut consecutive = 0;
            let (z, b) = loop {
                let z = cn_matrix(&mut rng, m, pl.pilots.len());
                match precoder(&z, pl.served_pilots, net.precoder) {
                    Some((b, leak)) => {
                        acc.zf_leakage = acc.zf_leakage.max(leak);
                        break (z, b);
                    }
                    None => {
                        acc.singular_redraws += 1;
                        consecutive += 1;
                        if consecutive >= MAX_CONSECUTIVE_SINGULAR {
                            return Err(Error::SingularGram(consecutive));
                        }
                    }
                }
            };
            // rows: projections of every drawn pilot column on the precoder
            let proj = z.transpose() * &b;
            for (i, &u) in probes.iter().enumerate() {
                let c = net.c.get(a, u);
                let ag = net.ag.get(a, u);
                let err_sd = (c - ag).max(0.0).sqrt();
                let e = DMatrix::from_fn(1, m, |_, _| cn(&mut rng) * err_sd);
                let err_proj = e * &b;
                let col_u = pl
                    .pilots
                    .iter()
                    .position(|&p| p == net.pilot[u])
                    .expect("probe pilot drawn");
                let sqrt_ag = ag.sqrt();
                let g = groups[i][a];
                for &(v, col, amp) in &pl.symbols {
                    let est = proj[(col_u, col)] * (amp * sqrt_ag);
                    let err = err_proj[(0, col)] * amp;
                    let slot = i * n_users + v;
                    let x = &mut comp[slot];
                    match g {
                        Group::ServesPilot => {
                            if net.pilot[v] == net.pilot[u] {
                                x[0] += est;
                            } else {
                                x[1] += est;
                            }
                            x[2] += err;
                        }
                        Group::Related => x[3] += est + err,
                        Group::Unrelated => x[4] += est + err,
                    }
                    touched.push(slot);
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for &slot in &touched {
            let x = comp[slot];
            let s = &mut acc.sum[slot];
            for k in 0..NUM_COMPONENTS {
                s[k] += x[k];
            }
            let p = &mut acc.prod[slot];
            for k in 0..NUM_COMPONENTS {
                for l in 0..NUM_COMPONENTS {
                    p[k][l] += x[k] * x[l].conj();
                }
            }
        }
        acc.n += 1;
    }
    Ok(acc)
}

/// Per-symbol affine form `α + Σ β_k·component_k` of each term.
fn term_form(
    net: &Network,
    u: usize,
    v: usize,
    term: Term,
    mean_s: Complex64,
) -> (Complex64, [f64; NUM_COMPONENTS]) {
    let zero = Complex64::new(0.0, 0.0);
    let mut beta = [0.0; NUM_COMPONENTS];
    let same_pilot = net.pilot[v] == net.pilot[u];
    let alpha = match term {
        Term::T11 if v == u => mean_s,
        Term::T12 if v != u && same_pilot => mean_s,
        Term::T13 if same_pilot => {
            beta[0] = 1.0;
            -mean_s
        }
        Term::T14 => {
            beta[1] = 1.0;
            zero
        }
        Term::T2 => {
            beta[2] = 1.0;
            zero
        }
        Term::T3 => {
            beta[3] = 1.0;
            zero
        }
        Term::T4 => {
            beta[4] = 1.0;
            zero
        }
        _ => zero,
    };
    (alpha, beta)
}

fn term_covariances(
    net: &Network,
    acc: &Accumulator,
    i: usize,
    u: usize,
) -> [[Complex64; NUM_TERMS]; NUM_TERMS] {
    let n = acc.n as f64;
    let zero = Complex64::new(0.0, 0.0);
    let mut cov = [[zero; NUM_TERMS]; NUM_TERMS];
    for v in 0..acc.num_users {
        let slot = i * acc.num_users + v;
        let mean: Vec<Complex64> = acc.sum[slot].iter().map(|s| s / n).collect();
        let second = &acc.prod[slot];
        let forms: Vec<_> = Term::ALL[..7]
            .iter()
            .map(|&t| term_form(net, u, v, t, mean[0]))
            .collect();
        for (ti, (ai, bi)) in forms.iter().enumerate() {
            for (tj, (aj, bj)) in forms.iter().enumerate() {
                let mut x = ai * aj.conj();
                for k in 0..NUM_COMPONENTS {
                    x += ai * bj[k] * mean[k].conj() + aj.conj() * bi[k] * mean[k];
                    for l in 0..NUM_COMPONENTS {
                        if bi[k] != 0.0 && bj[l] != 0.0 {
                            x += bi[k] * bj[l] * second[k][l] / n;
                        }
                    }
                }
                cov[ti][tj] += x;
            }
        }
    }
    // unit noise, independent of everything
    cov[7][7] = Complex64::new(1.0, 0.0);
    cov
}

/// Simulates `cfg.realizations` fading draws and returns term statistics for
/// every user of the probe cell.
pub fn simulate_terms(
    net: &Network,
    eta: &PowerAllocation,
    cfg: &FadelabConfig,
) -> Result<TermStats> {
    if net.precoder == Precoder::Zf {
        for (a, info) in net.arrays.iter().enumerate() {
            let r = net.serves_pilot[a].iter().filter(|&&b| b).count();
            if r >= info.elements {
                return Err(Error::ZeroForcingRank {
                    array: a,
                    users: r,
                    elements: info.elements,
                });
            }
        }
    }
    let probes: Vec<usize> = net.cell_users(cfg.probe_cell).collect();
    let plans = plan(net, eta, &probes);
    let groups: Vec<Vec<Group>> = probes
        .iter()
        .map(|&u| (0..net.num_arrays()).map(|a| group(net, a, u)).collect())
        .collect();
    let chunks = cfg.realizations.div_ceil(REALIZATIONS_PER_CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = REALIZATIONS_PER_CHUNK.min(cfg.realizations - c * REALIZATIONS_PER_CHUNK);
            simulate_chunk(
                net,
                &plans,
                &probes,
                &groups,
                count,
                seed::derive(cfg.seed, c as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Accumulator::new(probes.len(), net.num_users());
    for p in &parts {
        acc.merge(p);
    }

    let covs: Vec<_> = probes
        .iter()
        .enumerate()
        .map(|(i, &u)| term_covariances(net, &acc, i, u))
        .collect();
    let variance = covs
        .iter()
        .map(|cov| std::array::from_fn(|t| cov[t][t].re.max(0.0)))
        .collect::<Vec<[f64; NUM_TERMS]>>();
    let pooled_var: Vec<f64> = (0..NUM_TERMS)
        .map(|t| variance.iter().map(|v| v[t]).sum())
        .collect();
    let scale: f64 = pooled_var.iter().sum();
    let mut correlations = Vec::new();
    for ti in 0..NUM_TERMS {
        for tj in ti + 1..NUM_TERMS {
            if pooled_var[ti] <= 1e-12 * scale || pooled_var[tj] <= 1e-12 * scale {
                continue;
            }
            let cov: Complex64 = covs.iter().map(|c| c[ti][tj]).sum();
            correlations.push((
                Term::ALL[ti],
                Term::ALL[tj],
                cov.norm() / (pooled_var[ti] * pooled_var[tj]).sqrt(),
            ));
        }
    }
    Ok(TermStats {
        realizations: acc.n,
        probe_users: probes,
        variance,
        correlations,
        zf_leakage: acc.zf_leakage,
        singular_redraws: acc.singular_redraws,
    })
}

/// Closed-form variance of every term for each user of `probe_cell`.
pub fn closed_form_terms(
    net: &Network,
    eta: &PowerAllocation,
    probe_cell: usize,
) -> Vec<[f64; NUM_TERMS]> {
    let sb = sinr_breakdown(net, eta);
    let powers = array_powers(net, eta);
    let rho = net.rho_dl;
    net.cell_users(probe_cell)
        .map(|u| {
            let mut t = [0.0; NUM_TERMS];
            t[0] = sb.p[u];
            t[1] = sb.i3[u];
            for a in 0..net.num_arrays() {
                let c = net.c.get(a, u);
                let ag = net.ag.get(a, u);
                match group(net, a, u) {
                    Group::ServesPilot => {
                        if net.precoder == Precoder::Mr {
                            for &v in &net.served[a] {
                                if net.pilot[v] == net.pilot[u] {
                                    t[2] += rho * ag * eta.get(a, v);
                                } else {
                                    t[3] += rho * ag * eta.get(a, v);
                                }
                            }
                        }
                        t[4] += rho * (c - ag) * powers[a];
                    }
                    Group::Related => t[5] += rho * c * powers[a],
                    Group::Unrelated => t[6] += rho * c * powers[a],
                }
            }
            t[7] = 1.0;
            t
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TermRow {
    pub term: Term,
    pub predicted: f64,
    pub empirical: f64,
    /// `None` when the predicted value is zero.
    pub relative_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub rows: Vec<TermRow>,
    pub max_correlation: f64,
    /// Closed-form and reconstructed SINR per probe user.
    pub sinr: Vec<(f64, f64)>,
    pub zf_leakage: f64,
}

impl OracleReport {
    /// Largest relative error over terms with non-zero predicted variance.
    pub fn max_term_error(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.relative_error)
            .fold(0.0, f64::max)
    }

    /// Largest empirical variance among terms predicted to vanish, relative to total received power.
    pub fn max_spurious(&self) -> f64 {
        let total: f64 = self.rows.iter().map(|r| r.predicted).sum();
        self.rows
            .iter()
            .filter(|r| r.relative_error.is_none())
            .map(|r| r.empirical / total)
            .fold(0.0, f64::max)
    }

    pub fn max_sinr_error(&self) -> f64 {
        self.sinr
            .iter()
            .map(|(c, e)| (e / c - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Compares pooled (summed over probe users) empirical and predicted variances.
pub fn oracle_compare(emp: &TermStats, pred: &[[f64; NUM_TERMS]]) -> OracleReport {
    let rows = Term::ALL
        .iter()
        .enumerate()
        .map(|(t, &term)| {
            let p: f64 = pred.iter().map(|x| x[t]).sum();
            let e: f64 = emp.variance.iter().map(|x| x[t]).sum();
            TermRow {
                term,
                predicted: p,
                empirical: e,
                relative_error: (p > 0.0).then(|| (e - p).abs() / p),
            }
        })
        .collect();
    let reconstruct = |v: &[f64; NUM_TERMS]| v[0] / v[1..].iter().sum::<f64>();
    let sinr = pred
        .iter()
        .zip(&emp.variance)
        .map(|(p, e)| (reconstruct(p), reconstruct(e)))
        .collect();
    OracleReport {
        rows,
        max_correlation: emp.max_correlation(),
        sinr,
        zf_leakage: emp.zf_leakage,
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<5} {:>14} {:>14} {:>10}",
            "term", "predicted", "empirical", "rel.err"
        )?;
        for r in &self.rows {
            let err = r
                .relative_error
                .map_or("-".to_string(), |e| format!("{e:.4}"));
            writeln!(
                f,
                "{:<5} {:>14.6e} {:>14.6e} {:>10}",
                r.term.name(),
                r.predicted,
                r.empirical,
                err
            )?;
        }
        writeln!(f, "max |correlation|     {:.4}", self.max_correlation)?;
        writeln!(f, "max SINR rel. error   {:.4}", self.max_sinr_error())?;
        write!(f, "ZF leakage            {:.3e}", self.zf_leakage)
    }
}

/// Empirical `E[zᵀz*]` and mean diagonal of `(ZᵀZ*)⁻¹` for `M × K` i.i.d. `CN(0, 1)` matrices.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RandomMatrixMoments {
    pub mean_norm_sq: f64,
    pub mean_inverse_diag: f64,
}

pub fn random_matrix_moments(
    m: usize,
    k: usize,
    samples: usize,
    seed_value: u64,
) -> Result<RandomMatrixMoments> {
    let chunks = samples.div_ceil(REALIZATIONS_PER_CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed_value, c as u64));
            let count = REALIZATIONS_PER_CHUNK.min(samples - c * REALIZATIONS_PER_CHUNK);
            let (mut norm, mut diag) = (0.0, 0.0);
            for _ in 0..count {
                let z = cn_matrix(&mut rng, m, k);
                norm += z.column(0).iter().map(|x| x.norm_sqr()).sum::<f64>();
                let gram = z.transpose() * z.map(|x| x.conj());
                let inv = gram.cholesky().ok_or(Error::SingularGram(1))?.inverse();
                diag += (0..k).map(|i| inv[(i, i)].re).sum::<f64>() / k as f64;
            }
            Ok((norm, diag))
        })
        .collect::<Result<Vec<_>>>()?;
    let (norm, diag) = parts
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    Ok(RandomMatrixMoments {
        mean_norm_sq: norm / samples as f64,
        mean_inverse_diag: diag / samples as f64,
    })
}
