//! Model II on `Z^d`: `x ~ y` iff `min(W_x, W_y) >= |x - y|`, with
//! `W = U^(-1/beta)` and `beta < d`.
//!
//! Let `Q = {0..m-1}^d` be the box holding the window and call ring `k` the
//! lattice points at Chebyshev distance exactly `k` from `Q`. A ring-`k`
//! point is at Euclidean distance at least `k` from every window vertex, so
//! it can only matter when its weight is at least `k`, which happens with
//! probability `k^-beta`. Rings up to `floor(max window weight)` are
//! therefore thinned to these relevant points, and the degrees of window
//! vertices are exact.
//!
//! Rings are grouped into blocks `{1}, {2}, {3,4}, {5..8}, ...`. Each block
//! has its own random stream derived from the replication seed; inside a
//! block candidates are found by geometric jumps at the block's largest
//! relevance probability and thinned to `k^-beta`. Points of the box `Q`
//! outside the window form block "zero" and are all kept.
//!
//! The fast mode materialises the blocks reached by more than a few window
//! vertices and finds pairs with one grid per dyadic weight band: a pair
//! whose smaller weight lies in `[2^l, 2^(l+1))` is at distance below
//! `2^(l+1)`, so it sits in adjacent cells of side `2^(l+1)` in the grid of
//! points with weight at least `2^l`. Farther blocks are streamed against
//! the window vertices heavy enough to reach them. The naive mode
//! materialises every block and checks all pairs; both modes see the same
//! vertices and, edges being deterministic given the weights, return the
//! same degrees.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rustc_hash::FxHashMap;

use super::edges::{EdgeList, VertexLabel};
use super::{rng_from_seed, Generated, GeneratorMode, ModelConfig, MAX_DIM};
use crate::error::{Error, Result};
use crate::weights::WeightDistribution;

const NO_RANK: u32 = u32::MAX;
/// Blocks reached by more window vertices than this are materialised.
const STREAM_REACH: usize = 32;
const MAX_BAND: u32 = 60;
/// Coordinates must stay below `2^60` for the band grids.
const COORD_LIMIT: i64 = 1 << 60;

type Coord = [i64; MAX_DIM];

#[derive(Clone, Copy)]
struct Geometry {
    dim: usize,
    side: i64,
}

impl Geometry {
    fn pow(&self, base: i64) -> u128 {
        (base as u128).pow(self.dim as u32)
    }

    /// Number of points in rings `1..=k`.
    fn through(&self, k: i64) -> u128 {
        self.pow(self.side + 2 * k) - self.pow(self.side)
    }

    /// Ring and coordinates of the `g`-th point of rings `1, 2, ...`.
    fn decode(&self, g: u128) -> (i64, Coord) {
        let approx = ((g as f64 + self.pow(self.side) as f64).powf(1.0 / self.dim as f64) - self.side as f64) / 2.0;
        let mut k = (approx.floor() as i64).max(0) + 1;
        while k > 1 && self.through(k - 1) > g {
            k -= 1;
        }
        while self.through(k) <= g {
            k += 1;
        }
        let mut offset = g - self.through(k - 1);
        let inner = (self.side + 2 * k - 2) as u128;
        let outer = (self.side + 2 * k) as u128;
        let mut c = [0i64; MAX_DIM];
        for axis in 0..self.dim {
            let slab = inner.pow(axis as u32) * outer.pow((self.dim - 1 - axis) as u32);
            if offset >= 2 * slab {
                offset -= 2 * slab;
                continue;
            }
            c[axis] = if offset < slab { -k } else { self.side - 1 + k };
            let mut r = offset % slab;
            for j in (0..self.dim).rev() {
                if j == axis {
                    continue;
                }
                if j < axis {
                    c[j] = -k + 1 + (r % inner) as i64;
                    r /= inner;
                } else {
                    c[j] = -k + (r % outer) as i64;
                    r /= outer;
                }
            }
            return (k, c);
        }
        unreachable!("offset inside ring {k}")
    }
}

/// Rings `(lo, hi]` of block `j`.
fn block_rings(j: u32) -> (i64, i64) {
    if j == 0 {
        (0, 1)
    } else {
        (1 << (j - 1), 1 << j)
    }
}

fn block_seed(seed: u64, block: u32) -> u64 {
    let mut z = seed ^ (u64::from(block) + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Geometric jump over an index space that may exceed `u64`.
fn jump<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u128 {
    if p >= 1.0 {
        return 0;
    }
    let e: f64 = Exp1.sample(rng);
    let s = e / -(-p).ln_1p();
    if s >= u128::MAX as f64 {
        u128::MAX
    } else {
        s as u128
    }
}

/// Calls `f(ring, coords, weight)` for every relevant point of block `j`.
fn for_each_in_block<F: FnMut(i64, Coord, f64)>(
    geom: Geometry,
    dist: &WeightDistribution,
    beta: f64,
    seed: u64,
    j: u32,
    mut f: F,
) {
    let (lo, hi) = block_rings(j);
    let mut rng = rng_from_seed(block_seed(seed, j));
    let start = geom.through(lo);
    let end = geom.through(hi);
    let bound = ((lo + 1) as f64).powf(-beta);
    let mut g = start;
    loop {
        g = g.saturating_add(jump(&mut rng, bound));
        if g >= end {
            break;
        }
        let (k, c) = geom.decode(g);
        let p = (k as f64).powf(-beta);
        if p >= bound || rng.gen::<f64>() * bound < p {
            f(k, c, dist.sample_at_least(&mut rng, k as f64));
        }
        g += 1;
    }
}

fn band(w: f64) -> u32 {
    let e = ((w.to_bits() >> 52) & 0x7ff) as i64 - 1023;
    e.clamp(0, i64::from(MAX_BAND)) as u32
}

fn dist2(a: &Coord, b: &Coord, dim: usize) -> f64 {
    let mut s: i128 = 0;
    for k in 0..dim {
        let d = i128::from(a[k] - b[k]);
        s += d * d;
    }
    s as f64
}

#[inline]
fn linked(wx: f64, wy: f64, d2: f64) -> bool {
    let m = wx.min(wy);
    m * m >= d2
}

struct Points {
    coords: Vec<Coord>,
    weight: Vec<f64>,
    rank: Vec<u32>,
}

impl Points {
    fn push(&mut self, c: Coord, w: f64, rank: u32) {
        self.coords.push(c);
        self.weight.push(w);
        self.rank.push(rank);
    }
}

/// One grid per weight band, stored as sorted `(cell, point)` runs.
struct BandGrids {
    dim: usize,
    members: Vec<Vec<u32>>,
    cells: Vec<FxHashMap<Coord, (u32, u32)>>,
}

fn cell_of(c: &Coord, band: u32, dim: usize) -> Coord {
    let mut key = [0i64; MAX_DIM];
    for k in 0..dim {
        key[k] = c[k] >> (band + 1);
    }
    key
}

impl BandGrids {
    fn build(points: &Points, dim: usize) -> Self {
        let top = points.weight.iter().map(|&w| band(w)).max().unwrap_or(0);
        let mut members = Vec::new();
        let mut cells = Vec::new();
        for l in 0..=top {
            let mut keyed: Vec<(Coord, u32)> = (0..points.weight.len())
                .filter(|&i| band(points.weight[i]) >= l)
                .map(|i| (cell_of(&points.coords[i], l, dim), i as u32))
                .collect();
            keyed.sort_unstable();
            let mut map = FxHashMap::default();
            let mut s = 0;
            while s < keyed.len() {
                let mut e = s + 1;
                while e < keyed.len() && keyed[e].0 == keyed[s].0 {
                    e += 1;
                }
                map.insert(keyed[s].0, (s as u32, e as u32));
                s = e;
            }
            members.push(keyed.into_iter().map(|(_, i)| i).collect());
            cells.push(map);
        }
        Self { dim, members, cells }
    }

    /// Calls `f(y)` for every `y != x` linked to `x`.
    fn neighbors<F: FnMut(usize)>(&self, points: &Points, x: usize, mut f: F) {
        let wx = points.weight[x];
        let cx = points.coords[x];
        let top = band(wx).min(self.cells.len() as u32 - 1);
        let offsets = 3usize.pow(self.dim as u32);
        for l in 0..=top {
            let home = cell_of(&cx, l, self.dim);
            for o in 0..offsets {
                let mut key = home;
                let mut rest = o;
                for slot in key.iter_mut().take(self.dim) {
                    *slot += (rest % 3) as i64 - 1;
                    rest /= 3;
                }
                let Some(&(s, e)) = self.cells[l as usize].get(&key) else { continue };
                for &y in &self.members[l as usize][s as usize..e as usize] {
                    let y = y as usize;
                    if y == x {
                        continue;
                    }
                    let wy = points.weight[y];
                    if band(wx.min(wy)) == l && linked(wx, wy, dist2(&cx, &points.coords[y], self.dim)) {
                        f(y);
                    }
                }
            }
        }
    }
}

fn label(c: &Coord) -> VertexLabel {
    VertexLabel::Lattice(*c)
}

pub(crate) fn generate<R: Rng + ?Sized>(
    config: &ModelConfig,
    seed: u64,
    rng: &mut R,
    mut edges: Option<&mut EdgeList>,
) -> Result<Generated> {
    let dim = config.dim;
    let dist = config.weight;
    let beta = dist.beta();
    let n = config.n as usize;
    let side = config.lattice_side() as i64;
    let geom = Geometry { dim, side };
    let cap = config.max_vertices as usize;

    let mut pts = Points { coords: Vec::with_capacity(n), weight: Vec::with_capacity(n), rank: Vec::with_capacity(n) };
    let mut c = [0i64; MAX_DIM];
    for r in 0..n {
        let mut idx = r as i64;
        for k in (0..dim).rev() {
            c[k] = idx % side;
            idx /= side;
        }
        pts.push(c, dist.sample(rng), r as u32);
    }
    // Block zero: the rest of the box, every weight is relevant.
    let mut box_rng = rng_from_seed(block_seed(seed, u32::MAX));
    let box_total = geom.pow(side) as usize;
    for idx in n..box_total {
        let mut rest = idx as i64;
        for k in (0..dim).rev() {
            c[k] = rest % side;
            rest /= side;
        }
        pts.push(c, dist.sample(&mut box_rng), NO_RANK);
    }

    let mut heavy: Vec<usize> = (0..n).collect();
    heavy.sort_by(|&a, &b| pts.weight[b].total_cmp(&pts.weight[a]));
    let reach = heavy.first().map_or(0.0, |&x| pts.weight[x]).floor() as i64;
    if reach + side >= COORD_LIMIT {
        return Err(Error::MemoryGuard { expected: reach as f64, cap: config.max_vertices });
    }
    let last_block = (0..64u32).find(|&j| block_rings(j).1 >= reach).unwrap_or(63);
    let materialise_to = match config.mode {
        GeneratorMode::Naive => reach,
        GeneratorMode::Fast => heavy.get(STREAM_REACH).map_or(0, |&x| pts.weight[x].floor() as i64).min(reach),
    };

    let mut streamed_blocks = Vec::new();
    if reach >= 1 {
        for j in 0..=last_block {
            let (lo, hi) = block_rings(j);
            if hi <= materialise_to || (lo < materialise_to && config.mode == GeneratorMode::Naive) {
                for_each_in_block(geom, &dist, beta, seed, j, |_, c, w| pts.push(c, w, NO_RANK));
                if pts.weight.len() > cap {
                    return Err(Error::MemoryGuard { expected: pts.weight.len() as f64, cap: config.max_vertices });
                }
            } else {
                streamed_blocks.push(j);
            }
        }
    }

    let mut degrees = vec![0u64; n];
    let mut emit = |x: usize, y: usize, pts: &Points, degrees: &mut Vec<u64>| {
        degrees[x] += 1;
        if let Some(list) = edges.as_deref_mut() {
            let ry = pts.rank[y];
            if ry == NO_RANK || ry > x as u32 {
                list.push(label(&pts.coords[x]), label(&pts.coords[y]), 1);
            }
        }
    };
    match config.mode {
        GeneratorMode::Naive => {
            for x in 0..n {
                let (cx, wx) = (pts.coords[x], pts.weight[x]);
                for y in 0..pts.weight.len() {
                    if y != x && linked(wx, pts.weight[y], dist2(&cx, &pts.coords[y], dim)) {
                        emit(x, y, &pts, &mut degrees);
                    }
                }
            }
        }
        GeneratorMode::Fast => {
            let grids = BandGrids::build(&pts, dim);
            let mut found = Vec::new();
            for x in 0..n {
                found.clear();
                grids.neighbors(&pts, x, |y| found.push(y));
                for &y in &found {
                    emit(x, y, &pts, &mut degrees);
                }
            }
        }
    }

    let mut simulated = pts.weight.len() as u64;
    let heavy_weights: Vec<f64> = heavy.iter().map(|&x| pts.weight[x]).collect();
    let stream_cap = cap as u64 * 20;
    for j in streamed_blocks {
        let mut far = Points { coords: Vec::new(), weight: Vec::new(), rank: Vec::new() };
        for_each_in_block(geom, &dist, beta, seed, j, |k, c, w| {
            if (k as f64) <= heavy_weights[0] {
                far.push(c, w, NO_RANK);
            }
        });
        simulated += far.weight.len() as u64;
        if simulated > stream_cap {
            return Err(Error::MemoryGuard { expected: simulated as f64, cap: stream_cap });
        }
        let base = pts.weight.len();
        pts.coords.append(&mut far.coords);
        pts.weight.append(&mut far.weight);
        pts.rank.append(&mut far.rank);
        for y in base..pts.weight.len() {
            let (cy, wy) = (pts.coords[y], pts.weight[y]);
            // Only window vertices heavier than the ring index can reach y.
            let ring = ring_of(&cy, side, dim) as f64;
            let reachable = heavy_weights.partition_point(|&w| w >= ring);
            for &x in &heavy[..reachable] {
                if linked(pts.weight[x], wy, dist2(&pts.coords[x], &cy, dim)) {
                    emit(x, y, &pts, &mut degrees);
                }
            }
        }
        pts.coords.truncate(base);
        pts.weight.truncate(base);
        pts.rank.truncate(base);
    }

    let positions = pts.coords[..n].iter().flat_map(|c| c[..dim].iter().map(|&x| x as f64)).collect();
    Ok(Generated { positions, weights: pts.weight[..n].to_vec(), degrees, simulated, buffer: None })
}

/// Chebyshev distance from the box `{0..side-1}^d`.
fn ring_of(c: &Coord, side: i64, dim: usize) -> i64 {
    (0..dim).map(|k| (-c[k]).max(c[k] - (side - 1)).max(0)).max().unwrap_or(0)
}
