//! Large-scale couplings, pilot reuse classes and MMSE estimation gains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::antenna::Pattern;
use crate::geometry::{azimuth_offset_deg, Layout, PatternRef, UserDrop};
use crate::scenario::LinkBudget;
use crate::seed;

/// COST231-Hata urban path loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cost231Hata {
    pub frequency_mhz: f64,
    pub bs_height_m: f64,
    pub user_height_m: f64,
    pub city_correction_db: f64,
}

impl Cost231Hata {
    /// Shortest distance the model is evaluated at.
    pub const MIN_DISTANCE_M: f64 = 1.0;

    fn mobile_correction(&self) -> f64 {
        let lf = self.frequency_mhz.log10();
        (1.1 * lf - 0.7) * self.user_height_m - (1.56 * lf - 0.8)
    }

    /// Loss in dB at `d_m` meters, clamped below at [`Self::MIN_DISTANCE_M`].
    pub fn loss_db(&self, d_m: f64) -> f64 {
        let d_km = d_m.max(Self::MIN_DISTANCE_M) / 1000.0;
        let hb = self.bs_height_m.log10();
        46.3 + 33.9 * self.frequency_mhz.log10() - 13.82 * hb - self.mobile_correction()
            + (44.9 - 6.55 * hb) * d_km.log10()
            + self.city_correction_db
    }

    /// dB per decade of distance.
    pub fn slope_db(&self) -> f64 {
        44.9 - 6.55 * self.bs_height_m.log10()
    }

    pub fn gain(&self, d_m: f64) -> f64 {
        10f64.powf(-self.loss_db(d_m) / 10.0)
    }
}

/// A dense `arrays × users` table of linear gains; users are indexed `l·K + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GainTable {
    pub num_arrays: usize,
    pub num_users: usize,
    pub data: Vec<f64>,
}

impl GainTable {
    pub fn zeros(num_arrays: usize, num_users: usize) -> Self {
        GainTable {
            num_arrays,
            num_users,
            data: vec![0.0; num_arrays * num_users],
        }
    }

    #[inline]
    pub fn get(&self, a: usize, u: usize) -> f64 {
        self.data[a * self.num_users + u]
    }

    #[inline]
    pub fn set(&mut self, a: usize, u: usize, v: f64) {
        self.data[a * self.num_users + u] = v;
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.num_users..(a + 1) * self.num_users]
    }
}

/// Combined directivity, path loss and shadowing `c = a·β`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    pub c: GainTable,
    /// Array–user pairs closer than the path-loss floor.
    pub clamped: usize,
}

/// Computes `c` for every array–user pair. Shadowing is drawn once per
/// (site, user) so co-sited arrays see the same realization.
pub fn large_scale_coupling(
    layout: &Layout,
    pattern: &Pattern,
    users: &UserDrop,
    drop_seed: u64,
    path_loss: &Cost231Hata,
    shadow_sigma_db: f64,
) -> CouplingTable {
    let positions: Vec<_> = users.flat().collect();
    let n = positions.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(drop_seed, seed::stream::SHADOWING));
    let normal = Normal::new(0.0, shadow_sigma_db).expect("sigma validated");
    let shadow: Vec<f64> = (0..layout.sites.len() * n)
        .map(|_| {
            if shadow_sigma_db > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    let mut c = GainTable::zeros(layout.arrays.len(), n);
    let mut clamped = 0;
    for (a, rec) in layout.arrays.iter().enumerate() {
        for (u, &p) in positions.iter().enumerate() {
            let v = layout.min_image_vector(rec.position, p);
            let d = v.norm();
            if d < Cost231Hata::MIN_DISTANCE_M {
                clamped += 1;
            }
            let directivity = match rec.pattern {
                PatternRef::Sector => pattern.gain_at(azimuth_offset_deg(rec.boresight, v)),
                PatternRef::Omni => 1.0,
            };
            let x = shadow[rec.id.site * n + u];
            c.set(a, u, directivity * path_loss.gain(d) * 10f64.powf(x / 10.0));
        }
    }
    CouplingTable { c, clamped }
}

/// Partition of cells into pilot-reuse classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ReuseMap {
    pub class_of: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    /// Adjacent cell pairs (across the wrap) that share a class.
    pub wrap_conflicts: usize,
}

impl ReuseMap {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Cells sharing `l`'s pilot book, including `l`.
    pub fn cells_sharing(&self, l: usize) -> &[usize] {
        &self.classes[self.class_of[l]]
    }
}

/// `xi = 1`: one class with every cell. `xi = 3`: colors `(q − r) mod 3`,
/// proper on the unwrapped cluster.
pub fn reuse_sets(xi: usize, layout: &Layout) -> ReuseMap {
    let num_cells = layout.num_cells();
    let class_of: Vec<usize> = if xi == 1 {
        vec![0; num_cells]
    } else {
        layout
            .cell_axial
            .iter()
            .map(|&(q, r)| (q - r).rem_euclid(3) as usize)
            .collect()
    };
    let mut classes = vec![Vec::new(); xi];
    for (l, &k) in class_of.iter().enumerate() {
        classes[k].push(l);
    }
    classes.retain(|c| !c.is_empty());
    // re-index after dropping empty classes
    let mut class_of = class_of;
    for (i, c) in classes.iter().enumerate() {
        for &l in c {
            class_of[l] = i;
        }
    }
    let mut wrap_conflicts = 0;
    if xi > 1 {
        for l in 0..num_cells {
            for m in layout.neighbors(l) {
                if m > l && class_of[m] == class_of[l] {
                    wrap_conflicts += 1;
                }
            }
        }
    }
    ReuseMap {
        class_of,
        classes,
        wrap_conflicts,
    }
}

/// Pilot index of user `k` in cell `l`; cells of different classes use disjoint books.
pub fn pilot_index(reuse: &ReuseMap, users_per_cell: usize, l: usize, k: usize) -> usize {
    reuse.class_of[l] * users_per_cell + k
}

/// Mean-square of the MMSE estimate of each user's channel at each array.
///
/// `ag = ρ_ul·τ_p·c² / (1 + ρ_ul·τ_p·Σ c')` where the sum runs over all
/// users sharing the pilot (the user itself included).
pub fn estimation_gains(
    c: &CouplingTable,
    reuse: &ReuseMap,
    users_per_cell: usize,
    lb: &LinkBudget,
    tau_p: usize,
) -> GainTable {
    let snr = lb.rho_ul * tau_p as f64;
    let table = &c.c;
    let k = users_per_cell;
    let mut ag = GainTable::zeros(table.num_arrays, table.num_users);
    for a in 0..table.num_arrays {
        let row = table.row(a);
        for (l, &class) in reuse.class_of.iter().enumerate() {
            for kk in 0..k {
                let contam: f64 = reuse.classes[class].iter().map(|&m| row[m * k + kk]).sum();
                let cu = row[l * k + kk];
                ag.set(a, l * k + kk, snr * cu * cu / (1.0 + snr * contam));
            }
        }
    }
    ag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Layout, Point};
    use crate::scenario::{Scenario, Setting};
    use proptest::prelude::*;

    fn hata() -> Cost231Hata {
        Scenario::default().path_loss()
    }

    fn budget(snr: f64) -> LinkBudget {
        LinkBudget {
            noise_dbm: 0.0,
            rho_ul: snr,
            rho_dl: 1.0,
        }
    }

    fn table(rows: Vec<Vec<f64>>) -> CouplingTable {
        let n = rows[0].len();
        CouplingTable {
            c: GainTable {
                num_arrays: rows.len(),
                num_users: n,
                data: rows.concat(),
            },
            clamped: 0,
        }
    }

    fn one_class(cells: usize) -> ReuseMap {
        ReuseMap {
            class_of: vec![0; cells],
            classes: vec![(0..cells).collect()],
            wrap_conflicts: 0,
        }
    }

    #[test]
    fn hata_reference_values() {
        let h = hata();
        // a(h_m) at 1900 MHz, 1.5 m
        let lf = 1900f64.log10();
        let a = (1.1 * lf - 0.7) * 1.5 - (1.56 * lf - 0.8);
        let at_1km = 46.3 + 33.9 * lf - 13.82 * 30f64.log10() - a;
        assert!((h.loss_db(1000.0) - at_1km).abs() < 1e-12);
        assert!((h.loss_db(1000.0) - 136.990_843_507_989_4).abs() < 1e-9);
        assert!((h.slope_db() - 35.2249).abs() < 1e-3);
        let ratio = h.gain(500.0) / h.gain(1000.0);
        assert!((ratio - 2f64.powf(h.slope_db() / 10.0)).abs() < 1e-9 * ratio);
        assert_eq!(h.loss_db(0.2), h.loss_db(1.0));
    }

    #[test]
    fn equal_distance_equal_coupling() {
        let lay = Layout::build(Setting::Omni, 1, 1000.0, 100).unwrap();
        let users = UserDrop {
            positions: vec![vec![Point::new(300.0, 0.0), Point::new(0.0, -300.0)]],
        };
        let c = large_scale_coupling(&lay, &Pattern::omni(), &users, 3, &hata(), 0.0);
        assert!((c.c.get(0, 0) / c.c.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn back_lobe_coupling_vanishes() {
        let lay = Layout::build(Setting::SecMP, 1, 1000.0, 100).unwrap();
        let arr = &lay.arrays[0];
        let front = arr.position + arr.boresight * 400.0;
        let behind = arr.position - arr.boresight * 400.0;
        let users = UserDrop {
            positions: vec![vec![front, behind]],
        };
        let p = Pattern::irp(120.0, 3.0).unwrap();
        let c = large_scale_coupling(&lay, &p, &users, 3, &hata(), 0.0);
        assert!(c.c.get(0, 0) > 0.0);
        assert_eq!(c.c.get(0, 1), 0.0);
    }

    #[test]
    fn co_sited_arrays_share_shadowing() {
        let lay = Layout::build(Setting::SecMP, 7, 1000.0, 100).unwrap();
        let users = crate::geometry::drop_users(&lay, 4, 50.0, 11).unwrap();
        let omni = Pattern::omni();
        let shadowed = large_scale_coupling(&lay, &omni, &users, 11, &hata(), 8.0);
        let flat = large_scale_coupling(&lay, &omni, &users, 11, &hata(), 0.0);
        for site in 0..lay.sites.len() {
            let arrays: Vec<_> = (0..lay.arrays.len())
                .filter(|&a| lay.arrays[a].id.site == site)
                .collect();
            for u in 0..28 {
                let x: Vec<f64> = arrays
                    .iter()
                    .map(|&a| shadowed.c.get(a, u) / flat.c.get(a, u))
                    .collect();
                assert!(x.iter().all(|v| (v / x[0] - 1.0).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn reuse_classes() {
        let lay = Layout::build(Setting::SecMP, 19, 1000.0, 100).unwrap();
        let one = reuse_sets(1, &lay);
        assert!((0..19).all(|l| one.cells_sharing(l).len() == 19));
        let three = reuse_sets(3, &lay);
        let mut sizes: Vec<_> = three.classes.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![6, 6, 7]);
        for l in 0..19 {
            assert!(three.cells_sharing(l).contains(&l));
        }
        // no co-classed pair among unwrapped neighbours
        for (i, &a) in lay.cell_axial.iter().enumerate() {
            for (j, &b) in lay.cell_axial.iter().enumerate() {
                if i != j && crate::geometry::hex_distance((a.0 - b.0, a.1 - b.1)) == 1 {
                    assert_ne!(three.class_of[i], three.class_of[j]);
                }
            }
        }
        assert!(three.wrap_conflicts > 0);
    }

    #[test]
    fn estimation_gain_examples() {
        // single user, snr·c = 1
        let ag = estimation_gains(&table(vec![vec![1.0]]), &one_class(1), 1, &budget(1.0), 1);
        assert!((ag.get(0, 0) - 0.5).abs() < 1e-15);
        // one equal-strength contaminant
        let ag = estimation_gains(
            &table(vec![vec![1.0, 1.0]]),
            &one_class(2),
            1,
            &budget(1.0),
            1,
        );
        assert!((ag.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        // high-SNR asymptote c1²/(c1+c2)
        let ag = estimation_gains(
            &table(vec![vec![2.0, 0.5]]),
            &one_class(2),
            1,
            &budget(1e12),
            1,
        );
        assert!((ag.get(0, 0) - 4.0 / 2.5).abs() < 1e-9);
        // a back-lobe contaminant with c = 0 drops out entirely
        let with = estimation_gains(
            &table(vec![vec![1.0, 0.0]]),
            &one_class(2),
            1,
            &budget(1.0),
            1,
        );
        let without = estimation_gains(&table(vec![vec![1.0]]), &one_class(1), 1, &budget(1.0), 1);
        assert_eq!(with.get(0, 0), without.get(0, 0));
    }

    proptest! {
        #[test]
        fn estimate_below_truth_and_monotone_in_contamination(
            c in proptest::collection::vec(1e-3f64..10.0, 2..6), snr in 0.01f64..1e4,
        ) {
            let n = c.len();
            let full = estimation_gains(&table(vec![c.clone()]), &one_class(n), 1, &budget(snr), 1);
            let fewer = estimation_gains(&table(vec![c[..n - 1].to_vec()]), &one_class(n - 1), 1, &budget(snr), 1);
            for u in 0..n {
                prop_assert!(full.get(0, u) < c[u]);
                prop_assert!(full.get(0, u) >= 0.0);
            }
            for u in 0..n - 1 {
                prop_assert!(full.get(0, u) <= fewer.get(0, u));
            }
        }
    }
}
