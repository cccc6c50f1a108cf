//! Array layout, pilot reuse classes and one user drop for a setting.
//!
//! cargo run --release --example layout_dump -- [setting] [cells] > layout.csv

use sectorsim::channel::reuse_sets;
use sectorsim::geometry::{drop_users, Layout};
use sectorsim::{Scenario, Setting};

fn main() -> sectorsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let setting: Setting = args.next().map_or(Ok(Setting::SecMP), |s| s.parse())?;
    let cells = args.next().and_then(|s| s.parse().ok()).unwrap_or(19);
    let s = Scenario::default();
    let layout = Layout::build(setting, cells, s.cell_radius_m, s.antennas_per_array)?;
    for xi in [1, 3] {
        let reuse = reuse_sets(xi, &layout);
        eprintln!(
            "xi={xi}: class sizes {:?}, wrap conflicts {}",
            reuse.classes.iter().map(Vec::len).collect::<Vec<_>>(),
            reuse.wrap_conflicts
        );
    }
    eprintln!(
        "{} cells, {} arrays, {} sites",
        layout.num_cells(),
        layout.arrays.len(),
        layout.sites.len()
    );
    let users = drop_users(&layout, s.users_per_cell, s.exclusion_radius_m, 1)?;
    for (l, cell) in users.positions.iter().enumerate() {
        let far = cell
            .iter()
            .map(|p| (*p - layout.cell_centers[l]).norm())
            .fold(0.0, f64::max);
        eprintln!("cell {l:>2}: farthest user {far:.0} m from centre");
    }
    layout.write_csv(std::io::stdout().lock())
}
