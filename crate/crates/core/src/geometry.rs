//! Hexagonal cell layout with wrap-around, antenna array placement and user drops.
//!
//! Cells are flat-top hexagons of circumradius `R` indexed by axial
//! coordinates `(q, r)`; the center of cell `(q, r)` is `q·u + r·v` with
//! `u = (1.5R, √3/2·R)` and `v = (0, √3·R)`. Corner `i` of a cell sits at
//! angle `60°·i` from its center. Sector arrays occupy corners 1, 3 and 5,
//! which form a sublattice: every such corner is shared by three cells.
//!
//! The `L`-cell cluster is wrapped by replicating it on its own superlattice,
//! so every cell sees a complete neighbourhood. Distances and azimuths are
//! always taken to the nearest image.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scenario::{Scenario, Setting};
use crate::seed;
use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ZERO: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(r: f64, deg: f64) -> Self {
        let a = deg.to_radians();
        Point::new(r * a.cos(), r * a.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Direction in degrees, counterclockwise from the x axis.
    pub fn angle_deg(self) -> f64 {
        self.y.atan2(self.x).to_degrees()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Axial hex coordinate.
pub type Axial = (i32, i32);

const HEX_DIRECTIONS: [Axial; 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

pub fn hex_distance((q, r): Axial) -> i32 {
    (q.abs() + r.abs() + (q + r).abs()) / 2
}

/// Which radiation pattern an array's elements use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PatternRef {
    /// The scenario's sector pattern, oriented along the boresight.
    Sector,
    /// Unit gain in every direction.
    Omni,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ArrayId {
    /// Physical site; co-sited arrays share shadowing.
    pub site: usize,
    pub sector: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArrayRecord {
    pub id: ArrayId,
    pub position: Point,
    /// Unit vector.
    pub boresight: Point,
    pub element_count: usize,
    /// Fraction of the unit per-BS power available to this array.
    pub power_budget: f64,
    pub served_cells: Vec<usize>,
    pub pattern: PatternRef,
}

impl ArrayRecord {
    pub fn boresight_deg(&self) -> f64 {
        self.boresight.angle_deg()
    }
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub setting: Setting,
    pub radius: f64,
    pub cell_axial: Vec<Axial>,
    pub cell_centers: Vec<Point>,
    pub arrays: Vec<ArrayRecord>,
    /// Arrays serving each cell, ordered by sector index.
    pub cell_arrays: Vec<Vec<usize>>,
    /// Physical site positions, indexed by `ArrayId::site`.
    pub sites: Vec<Point>,
    /// Cluster translations in meters; index 0 is the zero vector.
    pub wrap_translations: Vec<Point>,
    wrap_axial: Vec<Axial>,
}

fn axial_to_point((q, r): Axial, radius: f64) -> Point {
    Point::new(
        1.5 * radius * q as f64,
        SQRT3 * radius * (0.5 * q as f64 + r as f64),
    )
}

fn rings(num_cells: usize) -> Result<i32> {
    match num_cells {
        1 => Ok(0),
        7 => Ok(1),
        19 => Ok(2),
        n => Err(Error::UnsupportedLayout(n)),
    }
}

/// Cells within `n` rings of the origin, center first, then ring by ring.
fn cluster_cells(n: i32) -> Vec<Axial> {
    let mut cells = vec![(0, 0)];
    for ring in 1..=n {
        // start at ring * (-1, 1)... walk the six sides
        let mut cur = (HEX_DIRECTIONS[4].0 * ring, HEX_DIRECTIONS[4].1 * ring);
        for d in HEX_DIRECTIONS {
            for _ in 0..ring {
                cells.push(cur);
                cur = (cur.0 + d.0, cur.1 + d.1);
            }
        }
    }
    cells
}

fn wrap_vectors(n: i32) -> Vec<Axial> {
    let mut out = vec![(0, 0)];
    if n == 0 {
        return out;
    }
    let mut t = (2 * n + 1, -n);
    for _ in 0..6 {
        out.push(t);
        t = (-t.1, t.0 + t.1);
    }
    out
}

impl Layout {
    pub fn build(setting: Setting, num_cells: usize, radius: f64, elements: usize) -> Result<Self> {
        let n = rings(num_cells)?;
        let cell_axial = cluster_cells(n);
        let cell_centers: Vec<Point> = cell_axial
            .iter()
            .map(|&a| axial_to_point(a, radius))
            .collect();
        let wrap_axial = wrap_vectors(n);
        let wrap_translations = wrap_axial
            .iter()
            .map(|&a| axial_to_point(a, radius))
            .collect();
        let mut layout = Layout {
            setting,
            radius,
            cell_axial,
            cell_centers,
            arrays: Vec::new(),
            cell_arrays: vec![Vec::new(); num_cells],
            sites: Vec::new(),
            wrap_translations,
            wrap_axial,
        };
        layout.place_arrays(elements);
        Ok(layout)
    }

    pub fn num_cells(&self) -> usize {
        self.cell_centers.len()
    }

    fn find_site(&self, p: Point) -> Option<usize> {
        let tol = 1e-6 * self.radius;
        self.sites
            .iter()
            .position(|&s| self.min_image_vector(s, p).norm() < tol)
    }

    fn site_index(&mut self, p: Point) -> usize {
        match self.find_site(p) {
            Some(i) => i,
            None => {
                self.sites.push(p);
                self.sites.len() - 1
            }
        }
    }

    fn place_arrays(&mut self, elements: usize) {
        let r = self.radius;
        match self.setting {
            Setting::Omni => {
                for l in 0..self.num_cells() {
                    let site = self.site_index(self.cell_centers[l]);
                    self.cell_arrays[l].push(self.arrays.len());
                    self.arrays.push(ArrayRecord {
                        id: ArrayId { site, sector: 0 },
                        position: self.cell_centers[l],
                        boresight: Point::new(1.0, 0.0),
                        element_count: 3 * elements,
                        power_budget: 1.0,
                        served_cells: vec![l],
                        pattern: PatternRef::Omni,
                    });
                }
            }
            Setting::SecMD | Setting::SecMP | Setting::CompSec => {
                for l in 0..self.num_cells() {
                    for sector in 0..3 {
                        let corner_deg = 60.0 * (2 * sector + 1) as f64;
                        let pos = self.cell_centers[l] + Point::polar(r, corner_deg);
                        let site = self.site_index(pos);
                        self.cell_arrays[l].push(self.arrays.len());
                        self.arrays.push(ArrayRecord {
                            id: ArrayId { site, sector },
                            position: pos,
                            boresight: Point::polar(1.0, corner_deg + 180.0),
                            element_count: elements,
                            power_budget: 1.0 / 3.0,
                            served_cells: vec![l],
                            pattern: PatternRef::Sector,
                        });
                    }
                }
            }
            Setting::CompOmn => {
                for l in 0..self.num_cells() {
                    for sector in 0..3 {
                        let corner_deg = 60.0 * (2 * sector + 1) as f64;
                        let pos = self.cell_centers[l] + Point::polar(r, corner_deg);
                        let site = self.site_index(pos);
                        let a = match self.arrays.iter().position(|x| x.id.site == site) {
                            Some(a) => a,
                            None => {
                                self.arrays.push(ArrayRecord {
                                    id: ArrayId { site, sector: 0 },
                                    position: pos,
                                    boresight: Point::new(1.0, 0.0),
                                    element_count: 3 * elements,
                                    power_budget: 1.0,
                                    served_cells: Vec::new(),
                                    pattern: PatternRef::Omni,
                                });
                                self.arrays.len() - 1
                            }
                        };
                        if !self.arrays[a].served_cells.contains(&l) {
                            self.arrays[a].served_cells.push(l);
                            self.cell_arrays[l].push(a);
                        }
                    }
                }
                for a in &mut self.arrays {
                    a.served_cells.sort_unstable();
                }
            }
        }
    }

    /// Displacement from `src` to the nearest image of `dst`.
    pub fn min_image_vector(&self, src: Point, dst: Point) -> Point {
        let mut best = dst - src;
        let mut best_d = best.norm_sq();
        for &t in &self.wrap_translations[1..] {
            let v = dst + t - src;
            let d = v.norm_sq();
            if d < best_d {
                best = v;
                best_d = d;
            }
        }
        best
    }

    /// Maps an axial coordinate onto the cluster, if some image lands there.
    fn cell_at(&self, a: Axial) -> Option<usize> {
        self.wrap_axial.iter().find_map(|t| {
            let b = (a.0 - t.0, a.1 - t.1);
            self.cell_axial.iter().position(|&c| c == b)
        })
    }

    /// Distinct wrap-aware neighbours of cell `l`, excluding `l` itself.
    pub fn neighbors(&self, l: usize) -> Vec<usize> {
        let (q, r) = self.cell_axial[l];
        let mut out = Vec::new();
        for d in HEX_DIRECTIONS {
            if let Some(m) = self.cell_at((q + d.0, r + d.1)) {
                if m != l && !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Whether `p`, given relative to the center of its cell, lies inside the hexagon.
    pub fn in_hexagon(&self, rel: Point) -> bool {
        let (x, y) = (rel.x.abs(), rel.y.abs());
        y <= SQRT3 / 2.0 * self.radius && SQRT3 * x + y <= SQRT3 * self.radius
    }

    /// Cell whose hexagon contains `p` (after wrapping), if any.
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        (0..self.num_cells()).find(|&l| {
            let rel = self.min_image_vector(self.cell_centers[l], p);
            self.in_hexagon(rel)
        })
    }

    /// Writes one `id,x,y,boresight_deg,elements,budget` row per array.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "x", "y", "boresight_deg", "elements", "budget"])?;
        for a in &self.arrays {
            w.write_record([
                format!("{}:{}", a.id.site, a.id.sector),
                format!("{:.3}", a.position.x),
                format!("{:.3}", a.position.y),
                format!("{:.1}", a.boresight_deg()),
                a.element_count.to_string(),
                format!("{:.6}", a.power_budget),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_layout(s: &Scenario) -> Result<Layout> {
    Layout::build(
        s.setting,
        s.num_cells,
        s.cell_radius_m,
        s.antennas_per_array,
    )
}

/// User positions, `positions[cell][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct UserDrop {
    pub positions: Vec<Vec<Point>>,
}

impl UserDrop {
    pub fn users_per_cell(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    /// Positions in global user order `l·K + k`.
    pub fn flat(&self) -> impl Iterator<Item = Point> + '_ {
        self.positions.iter().flatten().copied()
    }
}

const MAX_ATTEMPTS_PER_USER: usize = 10_000;

/// Drops `k` users uniformly in every cell, avoiding the exclusion disk
/// around each site that serves the cell.
pub fn drop_users(
    layout: &Layout,
    k: usize,
    exclusion_radius: f64,
    drop_seed: u64,
) -> Result<UserDrop> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(drop_seed, seed::stream::USERS));
    let r = layout.radius;
    let half_h = SQRT3 / 2.0 * r;
    let mut positions = Vec::with_capacity(layout.num_cells());
    for l in 0..layout.num_cells() {
        let center = layout.cell_centers[l];
        let sites: Vec<Point> = layout.cell_arrays[l]
            .iter()
            .map(|&a| layout.min_image_vector(center, layout.arrays[a].position))
            .collect();
        let mut cell = Vec::with_capacity(k);
        let mut attempts = 0;
        while cell.len() < k {
            attempts += 1;
            if attempts > MAX_ATTEMPTS_PER_USER * k.max(1) {
                return Err(Error::Sampling { cell: l, attempts });
            }
            let rel = Point::new(rng.gen_range(-r..r), rng.gen_range(-half_h..half_h));
            if !layout.in_hexagon(rel) {
                continue;
            }
            if sites.iter().any(|&s| (rel - s).norm() < exclusion_radius) {
                continue;
            }
            cell.push(center + rel);
        }
        positions.push(cell);
    }
    Ok(UserDrop { positions })
}

/// Angle of `v` relative to `boresight`, in degrees.
pub fn azimuth_offset_deg(boresight: Point, v: Point) -> f64 {
    let d = v.y.atan2(v.x) - boresight.y.atan2(boresight.x);
    crate::antenna::wrap_deg(d * 180.0 / PI)
}
