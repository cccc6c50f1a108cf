mod common;

use rayon::ThreadPoolBuilder;
use sectorsim::fadelab::{closed_form_terms, simulate_terms, FadelabConfig, Term};
use sectorsim::power::{pmf, upa};
use sectorsim::{Network, Precoder, Setting};

use common::{instance, rel};

fn idx(t: Term) -> usize {
    Term::ALL.iter().position(|&x| x == t).unwrap()
}

fn cfg(realizations: usize) -> FadelabConfig {
    FadelabConfig {
        realizations,
        ..FadelabConfig::default()
    }
}

fn isolate(net: &mut Network) {
    for u in 0..net.num_users() {
        let l = net.cell_of(u);
        for a in 0..net.num_arrays() {
            if !net.arrays[a].served_cells.contains(&l) {
                net.c.set(a, u, 0.0);
                net.ag.set(a, u, 0.0);
            }
        }
    }
}

#[test]
fn noise_term_is_one() {
    let net = instance(Setting::SecMP, Precoder::Mr, 7, 6, 32, 1);
    let (eta, _) = pmf(&net);
    let emp = simulate_terms(&net, &eta, &cfg(100)).unwrap();
    for (e, p) in emp.variance.iter().zip(closed_form_terms(&net, &eta, 0)) {
        assert_eq!(e[idx(Term::T5)], 1.0);
        assert_eq!(p[idx(Term::T5)], 1.0);
    }
}

#[test]
fn isolated_cells_only_see_their_own_arrays() {
    let mut net = instance(Setting::SecMP, Precoder::Mr, 7, 6, 32, 2);
    isolate(&mut net);
    let eta = upa(&net);
    let emp = simulate_terms(&net, &eta, &cfg(100)).unwrap();
    let pred = closed_form_terms(&net, &eta, 0);
    for (i, u) in net.cell_users(0).enumerate() {
        assert_eq!(emp.variance[i][idx(Term::T4)], 0.0);
        assert_eq!(pred[i][idx(Term::T4)], 0.0);
        let own: f64 = (0..net.num_arrays())
            .filter(|&a| net.arrays[a].served_cells.contains(&0))
            .filter(|&a| a != net.serving[u][0])
            .map(|a| net.rho_dl * net.c.get(a, u) * eta.array_power(&net, a))
            .sum();
        assert!(rel(pred[i][idx(Term::T3)], own) < 1e-12);
    }
}

#[test]
fn mr_signal_power_single_array() {
    let net = instance(Setting::SecMP, Precoder::Mr, 1, 6, 64, 3);
    let eta = upa(&net);
    let pred = closed_form_terms(&net, &eta, 0);
    for (i, u) in net.cell_users(0).enumerate() {
        let a = net.serving[u][0];
        let expect = net.rho_dl * 64.0 * net.ag.get(a, u) * eta.get(a, u);
        assert!(rel(pred[i][idx(Term::T11)], expect) < 1e-12);
    }
    let emp = simulate_terms(&net, &eta, &cfg(2000)).unwrap();
    let (p, e): (f64, f64) = emp
        .variance
        .iter()
        .zip(&pred)
        .map(|(e, p)| (p[idx(Term::T11)], e[idx(Term::T11)]))
        .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    assert!(rel(e, p) < 0.05);
}

#[test]
fn zf_without_copilots_leaks_nothing() {
    let net = instance(Setting::CompSec, Precoder::Zf, 1, 6, 32, 4);
    let eta = upa(&net);
    let emp = simulate_terms(&net, &eta, &cfg(200)).unwrap();
    let pred = closed_form_terms(&net, &eta, 0);
    assert!(emp.zf_leakage < 1e-10);
    for (e, p) in emp.variance.iter().zip(&pred) {
        assert_eq!(p[idx(Term::T12)], 0.0);
        assert!(e[idx(Term::T12)] < 1e-20);
        assert!(e[idx(Term::T14)] < 1e-20);
    }
}

#[test]
fn thread_count_does_not_change_estimates() {
    let net = instance(Setting::CompSec, Precoder::Mr, 7, 6, 32, 5);
    let (eta, _) = pmf(&net);
    let run = |n: usize| {
        let pool = ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| simulate_terms(&net, &eta, &cfg(300)).unwrap())
    };
    assert_eq!(run(1).variance, run(3).variance);
}
