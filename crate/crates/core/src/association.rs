//! User-to-array association for each communication setting.

use crate::channel::GainTable;
use crate::geometry::{Layout, UserDrop};
use crate::scenario::Setting;

#[derive(Clone, Debug, PartialEq)]
pub struct Association {
    /// Serving arrays of each user, ascending.
    pub serving: Vec<Vec<usize>>,
    /// Users served by each array, ascending.
    pub served: Vec<Vec<usize>>,
}

impl Association {
    pub fn load(&self, a: usize) -> usize {
        self.served[a].len()
    }

    pub fn serves(&self, a: usize, u: usize) -> bool {
        self.serving[u].contains(&a)
    }
}

/// Associates every user with its serving arrays. Ties go to the lowest
/// sector index.
pub fn associate(
    setting: Setting,
    layout: &Layout,
    users: &UserDrop,
    c: &GainTable,
) -> Association {
    let k = users.users_per_cell();
    let num_users = layout.num_cells() * k;
    let mut serving = Vec::with_capacity(num_users);
    for (l, cell) in users.positions.iter().enumerate() {
        let candidates = &layout.cell_arrays[l];
        for (kk, &p) in cell.iter().enumerate() {
            let u = l * k + kk;
            let mut chosen = match setting {
                Setting::Omni | Setting::CompSec | Setting::CompOmn => candidates.clone(),
                Setting::SecMD => {
                    let dist =
                        |a: usize| layout.min_image_vector(layout.arrays[a].position, p).norm();
                    vec![argbest(candidates, |a| -dist(a))]
                }
                Setting::SecMP => vec![argbest(candidates, |a| c.get(a, u))],
            };
            chosen.sort_unstable();
            serving.push(chosen);
        }
    }
    let mut served = vec![Vec::new(); layout.arrays.len()];
    for (u, arrays) in serving.iter().enumerate() {
        for &a in arrays {
            served[a].push(u);
        }
    }
    Association { serving, served }
}

fn argbest(candidates: &[usize], score: impl Fn(usize) -> f64) -> usize {
    let mut best = candidates[0];
    let mut best_s = score(best);
    for &a in &candidates[1..] {
        let s = score(a);
        if s > best_s {
            best = a;
            best_s = s;
        }
    }
    best
}
