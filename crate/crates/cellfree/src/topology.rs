//! Random network layouts and user-centric cluster construction.
//!
//! The default layout tiles a 7-cell hexagonal flower (one center cell plus
//! its six neighbours) with wrap-around distances computed over the
//! translation vectors of the 7-hex super-lattice, eliminating boundary
//! effects. Each virtual cell hosts one CPU owning the APs placed inside it.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{pathloss_db, LargeScale};
use crate::model::db_to_lin;
use crate::{Error, Result};

/// Minimum user-to-AP distance, km (20 m exclusion disc).
pub const AP_EXCLUSION_KM: f64 = 0.02;

const EXCLUSION_MAX_TRIES: usize = 10_000;

/// A point in the plane, km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pos {
    pub x: f64,
    pub y: f64,
}

impl Pos {
    pub fn new(x: f64, y: f64) -> Self {
        Pos { x, y }
    }

    pub fn dist(self, other: Pos) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Network layout plus all user-centric cluster sets.
///
/// Cluster fields are empty until [`build_clusters`] runs. `r in c_u[u]`
/// iff `u in e_r[r]`; `c_qu[q][u]` intersects `c_u[u]` with `b_q[q]`; `d_u[u]` lists the
/// CPUs with non-empty `c_qu`.
#[derive(Debug, Clone)]
pub struct NetworkTopology {
    pub ap_positions: Vec<Pos>,
    pub user_positions: Vec<Pos>,
    /// CPU index owning each AP.
    pub cpu_of_ap: Vec<usize>,
    pub n_cpus: usize,
    /// Per-CPU AP sets (disjoint, union = all APs).
    pub b_q: Vec<Vec<usize>>,
    /// Per-user serving cluster, ascending AP index.
    pub c_u: Vec<Vec<usize>>,
    /// Per-AP user set.
    pub e_r: Vec<Vec<usize>>,
    /// Per-CPU user set.
    pub e_q: Vec<Vec<usize>>,
    /// Per-user CPU set.
    pub d_u: Vec<Vec<usize>>,
    /// Per-(CPU, user) AP set.
    pub c_qu: Vec<Vec<Vec<usize>>>,
    pub cell_radius_km: f64,
    pub n_cells: usize,
}

impl NetworkTopology {
    /// Assemble a topology from explicit positions; cluster sets stay empty.
    pub fn from_parts(
        ap_positions: Vec<Pos>,
        user_positions: Vec<Pos>,
        cpu_of_ap: Vec<usize>,
        n_cpus: usize,
        cell_radius_km: f64,
        n_cells: usize,
    ) -> Self {
        assert_eq!(ap_positions.len(), cpu_of_ap.len());
        let mut b_q = vec![Vec::new(); n_cpus];
        for (r, &q) in cpu_of_ap.iter().enumerate() {
            b_q[q].push(r);
        }
        NetworkTopology {
            ap_positions,
            user_positions,
            cpu_of_ap,
            n_cpus,
            b_q,
            c_u: Vec::new(),
            e_r: Vec::new(),
            e_q: Vec::new(),
            d_u: Vec::new(),
            c_qu: Vec::new(),
            cell_radius_km,
            n_cells,
        }
    }

    pub fn n_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_positions.len()
    }

    /// Minimum distance over the wrap-around shift set.
    pub fn wrap_distance(&self, a: Pos, b: Pos) -> f64 {
        wrap_distance(a, b, self)
    }

    /// Flat text snapshot: one record per node (kind, id, x_km, y_km, cpu).
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "cells {} {}", self.n_cells, self.cell_radius_km)?;
        for (r, p) in self.ap_positions.iter().enumerate() {
            writeln!(w, "ap {} {:.9} {:.9} {}", r, p.x, p.y, self.cpu_of_ap[r])?;
        }
        for (u, p) in self.user_positions.iter().enumerate() {
            writeln!(w, "user {} {:.9} {:.9} -", u, p.x, p.y)?;
        }
        Ok(())
    }

    /// Parse a snapshot produced by [`write_snapshot`]; clusters stay empty.
    pub fn read_snapshot<R: BufRead>(r: R) -> Result<Self> {
        let mut n_cells = 0usize;
        let mut cell_radius = 0.0f64;
        let mut aps = Vec::new();
        let mut cpus = Vec::new();
        let mut users = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::ConfigParse {
                line: i + 1,
                msg: format!("bad snapshot record: {line}"),
            };
            match toks[0] {
                "cells" if toks.len() == 3 => {
                    n_cells = toks[1].parse().map_err(|_| bad())?;
                    cell_radius = toks[2].parse().map_err(|_| bad())?;
                }
                "ap" if toks.len() == 5 => {
                    let x: f64 = toks[2].parse().map_err(|_| bad())?;
                    let y: f64 = toks[3].parse().map_err(|_| bad())?;
                    let q: usize = toks[4].parse().map_err(|_| bad())?;
                    aps.push(Pos::new(x, y));
                    cpus.push(q);
                }
                "user" if toks.len() == 5 => {
                    let x: f64 = toks[2].parse().map_err(|_| bad())?;
                    let y: f64 = toks[3].parse().map_err(|_| bad())?;
                    users.push(Pos::new(x, y));
                }
                _ => return Err(bad()),
            }
        }
        let n_cpus = cpus.iter().copied().max().map_or(0, |q| q + 1);
        Ok(NetworkTopology::from_parts(
            aps,
            users,
            cpus,
            n_cpus.max(1),
            cell_radius,
            n_cells,
        ))
    }
}

/// Area of a hexagon with circumradius `r`, km^2.
pub fn hex_area(r: f64) -> f64 {
    1.5 * 3f64.sqrt() * r * r
}

/// Centers of the hexagonal cells: cell 0 at the origin, cells 1..6 on the
/// first ring at distance sqrt(3) R.
pub fn cell_centers(n_cells: usize, radius: f64) -> Vec<Pos> {
    let s = 3f64.sqrt() * radius;
    let a1 = Pos::new(s, 0.0);
    let a2 = Pos::new(0.5 * s, 0.75f64.sqrt() * s);
    let mut centers = vec![Pos::new(0.0, 0.0)];
    if n_cells == 7 {
        centers.push(a1);
        centers.push(a2);
        centers.push(Pos::new(a2.x - a1.x, a2.y - a1.y));
        centers.push(Pos::new(-a1.x, -a1.y));
        centers.push(Pos::new(-a2.x, -a2.y));
        centers.push(Pos::new(a1.x - a2.x, a1.y - a2.y));
    }
    centers
}

/// Point-in-hexagon test for a pointy-top hexagon centered at `c`.
fn in_hex(p: Pos, c: Pos, radius: f64) -> bool {
    let x = p.x - c.x;
    let y = p.y - c.y;
    let apothem = 0.75f64.sqrt() * radius;
    let half = 0.5 * x;
    let proj = 0.75f64.sqrt() * y;
    x.abs() <= apothem && (half + proj).abs() <= apothem && (half - proj).abs() <= apothem
}

fn sample_in_hex(c: Pos, radius: f64, rng: &mut ChaCha8Rng) -> Pos {
    let apothem = 0.75f64.sqrt() * radius;
    loop {
        let x = c.x + (2.0 * rng.random::<f64>() - 1.0) * apothem;
        let y = c.y + (2.0 * rng.random::<f64>() - 1.0) * radius;
        let p = Pos::new(x, y);
        if in_hex(p, c, radius) {
            return p;
        }
    }
}

/// Wrap-around translation vectors of the 7-hex super-lattice, including
/// the identity shift. With (i, j) = (2, 1): T1 = 2 a1 + a2 and its 60-degree
/// rotations.
pub fn wrap_shifts(radius: f64) -> [Pos; 7] {
    let s = 3f64.sqrt() * radius;
    let a1 = Pos::new(s, 0.0);
    let a2 = Pos::new(0.5 * s, 0.75f64.sqrt() * s);
    let t1 = Pos::new(2.0 * a1.x + a2.x, 2.0 * a1.y + a2.y);
    let t2 = Pos::new(3.0 * a2.x - a1.x, 3.0 * a2.y - a1.y);
    let t3 = Pos::new(t2.x - t1.x, t2.y - t1.y);
    [
        Pos::new(0.0, 0.0),
        t1,
        Pos::new(-t1.x, -t1.y),
        t2,
        Pos::new(-t2.x, -t2.y),
        t3,
        Pos::new(-t3.x, -t3.y),
    ]
}

/// Minimum Euclidean distance over the identity shift and the 6 translation
/// vectors of the 7-hex super-cell. Falls back to the plain distance for
/// layouts that are not the 7-cell flower.
pub fn wrap_distance(a: Pos, b: Pos, topo: &NetworkTopology) -> f64 {
    if topo.n_cells != 7 {
        return a.dist(b);
    }
    wrap_shifts(topo.cell_radius_km)
        .iter()
        .map(|s| a.dist(Pos::new(b.x + s.x, b.y + s.y)))
        .fold(f64::INFINITY, f64::min)
}

/// Generate a random layout: `aps_per_cell` APs and
/// floor(density * hex area) users uniform in each hexagon, users resampled
/// until outside every AP's exclusion disc. CPU q owns the APs of cell q.
pub fn generate_topology(
    n_cells: usize,
    cell_radius_km: f64,
    aps_per_cell: usize,
    user_density_per_km2: f64,
    rng_seed: u64,
) -> Result<NetworkTopology> {
    if n_cells != 7 && n_cells != 1 {
        return Err(Error::Topology(format!(
            "unsupported layout: {n_cells} cells (expected 7 or 1)"
        )));
    }
    if !(cell_radius_km > 0.0) {
        return Err(Error::Topology("cell radius must be positive".into()));
    }
    if user_density_per_km2 < 0.0 {
        return Err(Error::Topology("user density must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let centers = cell_centers(n_cells, cell_radius_km);
    let users_per_cell = (user_density_per_km2 * hex_area(cell_radius_km)).floor() as usize;

    let mut ap_positions = Vec::with_capacity(n_cells * aps_per_cell);
    let mut cpu_of_ap = Vec::with_capacity(n_cells * aps_per_cell);
    for (q, &c) in centers.iter().enumerate() {
        for _ in 0..aps_per_cell {
            ap_positions.push(sample_in_hex(c, cell_radius_km, &mut rng));
            cpu_of_ap.push(q);
        }
    }

    let mut topo = NetworkTopology::from_parts(
        ap_positions,
        Vec::new(),
        cpu_of_ap,
        n_cells,
        cell_radius_km,
        n_cells,
    );

    let mut user_positions = Vec::with_capacity(n_cells * users_per_cell);
    for &c in &centers {
        for _ in 0..users_per_cell {
            let mut placed = false;
            for _ in 0..EXCLUSION_MAX_TRIES {
                let p = sample_in_hex(c, cell_radius_km, &mut rng);
                let clear = topo
                    .ap_positions
                    .iter()
                    .all(|&ap| wrap_distance(p, ap, &topo) >= AP_EXCLUSION_KM);
                if clear {
                    user_positions.push(p);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Topology(
                    "exclusion-zone rejection sampling exceeded retry bound".into(),
                ));
            }
        }
    }
    topo.user_positions = user_positions;
    Ok(topo)
}

/// Build all cluster sets from large-scale gains.
///
/// C_u collects every AP whose gain meets the unshadowed pathloss of a
/// `rho_km` link, plus the strongest AP as fallback.
pub fn build_clusters(topo: &mut NetworkTopology, gains: &LargeScale, rho_km: f64) {
    let n_aps = topo.n_aps();
    let n_users = topo.n_users();
    let n_cpus = topo.n_cpus;
    let threshold = db_to_lin(pathloss_db(rho_km).expect("rho_km must be positive"));

    let mut c_u = vec![Vec::new(); n_users];
    for u in 0..n_users {
        let mut set = BTreeSet::new();
        let mut best = 0usize;
        let mut best_gain = f64::NEG_INFINITY;
        for r in 0..n_aps {
            let g = gains.gain(r, u);
            if g >= threshold {
                set.insert(r);
            }
            if g > best_gain {
                best_gain = g;
                best = r;
            }
        }
        set.insert(best);
        c_u[u] = set.into_iter().collect();
    }

    let mut e_r = vec![Vec::new(); n_aps];
    for (u, cluster) in c_u.iter().enumerate() {
        for &r in cluster {
            e_r[r].push(u);
        }
    }

    let mut c_qu = vec![vec![Vec::new(); n_users]; n_cpus];
    let mut d_u = vec![Vec::new(); n_users];
    let mut e_q = vec![Vec::new(); n_cpus];
    for (u, cluster) in c_u.iter().enumerate() {
        for &r in cluster {
            let q = topo.cpu_of_ap[r];
            c_qu[q][u].push(r);
        }
        for q in 0..n_cpus {
            if !c_qu[q][u].is_empty() {
                d_u[u].push(q);
                e_q[q].push(u);
            }
        }
    }

    topo.c_u = c_u;
    topo.e_r = e_r;
    topo.e_q = e_q;
    topo.d_u = d_u;
    topo.c_qu = c_qu;
}
