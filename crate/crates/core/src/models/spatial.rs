//! Models I and III: the window plus a buffer of width `B`, organised as a
//! binary space-partition tree while the vertices are generated.
//!
//! Every tree node knows its index range, bounding box and the largest
//! weight below it. For a window vertex `x` a node at distance `r` bounds
//! every hazard `lambda W_x W_y r_xy^-alpha` inside it by
//! `h = lambda W_x W_max r^-alpha`. When the node's expected number of
//! candidates `size (1 - e^-h)` is small, candidates are found by geometric
//! jumps of rate `h` over its index range and accepted with probability
//! `p_xy / (1 - e^-h)`; otherwise the search descends. Leaves are decided
//! pair by pair.
//!
//! A pair of window vertices is decided by the endpoint of smaller window
//! rank; a window-buffer pair by its window endpoint. Buffer-buffer pairs
//! are never sampled.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::edges::{EdgeList, VertexLabel};
use super::{Generated, GeneratorMode, ModelConfig, ModelKind, MAX_DIM};
use crate::error::{Error, Result};
use crate::numeric::skip_by_hazard;

const LEAF: usize = 16;
const NO_RANK: u32 = u32::MAX;
const NO_CHILD: u32 = u32::MAX;
/// Largest expected candidate count for which a node is swept by jumps.
const SWEEP_BUDGET: f64 = 2.0;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: u32,
    end: u32,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    wmax: f64,
    left: u32,
    right: u32,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }

    fn min_dist2(&self, p: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, &x) in p.iter().enumerate() {
            let gap = (self.lo[k] - x).max(x - self.hi[k]).max(0.0);
            s += gap * gap;
        }
        s
    }
}

/// Vertices of one replication of model I or III, with the search tree.
#[derive(Debug, Clone)]
pub struct SpatialVertices {
    kind: ModelKind,
    dim: usize,
    lambda: f64,
    half_alpha: f64,
    pos: Vec<f64>,
    weight: Vec<f64>,
    rank: Vec<u32>,
    window: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

struct LatticeWindow {
    side: i64,
    n: u64,
}

impl LatticeWindow {
    /// Lexicographic index inside the window, if any.
    fn rank(&self, c: &[i64]) -> Option<u64> {
        let mut idx = 0u64;
        for &x in c {
            if x < 0 || x >= self.side {
                return None;
            }
            idx = idx * self.side as u64 + x as u64;
        }
        (idx < self.n).then_some(idx)
    }
}

impl SpatialVertices {
    /// Generates the window and buffer vertices with their weights.
    pub fn build<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Result<Self> {
        let dim = config.dim;
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::param("d", format!("must lie in 1..={MAX_DIM}")));
        }
        config.check_memory()?;
        let capacity = config.expected_vertices() as usize;
        let mut v = Self {
            kind: config.kind,
            dim,
            lambda: config.lambda,
            half_alpha: config.alpha / 2.0,
            pos: Vec::with_capacity(capacity * dim),
            weight: Vec::with_capacity(capacity),
            rank: Vec::with_capacity(capacity),
            window: Vec::new(),
            nodes: Vec::with_capacity(capacity / 4 + 1),
            root: 0,
        };
        let buffer = config.buffer_width();
        match config.kind {
            ModelKind::Lattice => {
                let side = config.lattice_side() as i64;
                let b = buffer.floor() as i64;
                let win = LatticeWindow { side, n: config.n };
                let mut lo = [0i64; MAX_DIM];
                let mut hi = [0i64; MAX_DIM];
                for k in 0..dim {
                    lo[k] = -b;
                    hi[k] = side - 1 + b;
                }
                v.window = vec![0; config.n as usize];
                v.root = v.build_lattice(lo, hi, &win, config, rng);
            }
            ModelKind::Continuum => {
                let side = config.window_side();
                let mut lo = [0.0; MAX_DIM];
                let mut hi = [0.0; MAX_DIM];
                for k in 0..dim {
                    lo[k] = -buffer;
                    hi[k] = side + buffer;
                }
                let volume: f64 = (0..dim).map(|k| hi[k] - lo[k]).product();
                let count = crate::numeric::sample_poisson(rng, volume);
                v.root = v.build_continuum(lo, hi, count, side, config, rng, 0);
            }
            other => return Err(Error::param("model", format!("model {other} is not simulated here"))),
        }
        Ok(v)
    }

    fn build_lattice<R: Rng + ?Sized>(
        &mut self,
        lo: [i64; MAX_DIM],
        hi: [i64; MAX_DIM],
        win: &LatticeWindow,
        config: &ModelConfig,
        rng: &mut R,
    ) -> u32 {
        let dim = self.dim;
        let extent = |k: usize| (hi[k] - lo[k] + 1) as usize;
        let count: usize = (0..dim).map(extent).product();
        if count <= LEAF {
            let start = self.weight.len();
            let mut c = lo;
            let mut wmax = 0.0f64;
            for _ in 0..count {
                let w = config.weight.sample(rng);
                wmax = wmax.max(w);
                let idx = self.weight.len() as u32;
                self.pos.extend(c[..dim].iter().map(|&x| x as f64));
                self.weight.push(w);
                match win.rank(&c[..dim]) {
                    Some(r) => {
                        self.rank.push(r as u32);
                        self.window[r as usize] = idx;
                    }
                    None => self.rank.push(NO_RANK),
                }
                // Odometer over the box, last axis fastest.
                for k in (0..dim).rev() {
                    if c[k] < hi[k] {
                        c[k] += 1;
                        break;
                    }
                    c[k] = lo[k];
                }
            }
            return self.push_leaf(start, lo.map(|x| x as f64), hi.map(|x| x as f64), wmax);
        }
        let axis = (0..dim).max_by_key(|&k| (extent(k), std::cmp::Reverse(k))).unwrap();
        let mid = lo[axis] + (hi[axis] - lo[axis]) / 2;
        let mut left_hi = hi;
        left_hi[axis] = mid;
        let mut right_lo = lo;
        right_lo[axis] = mid + 1;
        let left = self.build_lattice(lo, left_hi, win, config, rng);
        let right = self.build_lattice(right_lo, hi, win, config, rng);
        self.push_internal(left, right)
    }

    #[allow(clippy::too_many_arguments)]
    fn build_continuum<R: Rng + ?Sized>(
        &mut self,
        lo: [f64; MAX_DIM],
        hi: [f64; MAX_DIM],
        count: u64,
        side: f64,
        config: &ModelConfig,
        rng: &mut R,
        depth: u32,
    ) -> u32 {
        let dim = self.dim;
        if count as usize <= LEAF || depth >= 64 {
            let start = self.weight.len();
            let mut wmax = 0.0f64;
            let mut p = [0.0; MAX_DIM];
            for _ in 0..count {
                for k in 0..dim {
                    p[k] = lo[k] + (hi[k] - lo[k]) * rng.gen::<f64>();
                }
                let w = config.weight.sample(rng);
                wmax = wmax.max(w);
                let idx = self.weight.len() as u32;
                self.pos.extend_from_slice(&p[..dim]);
                self.weight.push(w);
                if p[..dim].iter().all(|&x| (0.0..=side).contains(&x)) {
                    self.rank.push(self.window.len() as u32);
                    self.window.push(idx);
                } else {
                    self.rank.push(NO_RANK);
                }
            }
            return self.push_leaf(start, lo, hi, wmax);
        }
        let axis = (0..dim).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a))).unwrap();
        let mid = 0.5 * (lo[axis] + hi[axis]);
        let left_count = Binomial::new(count, 0.5).expect("valid binomial").sample(rng);
        let mut left_hi = hi;
        left_hi[axis] = mid;
        let mut right_lo = lo;
        right_lo[axis] = mid;
        let left = self.build_continuum(lo, left_hi, left_count, side, config, rng, depth + 1);
        let right = self.build_continuum(right_lo, hi, count - left_count, side, config, rng, depth + 1);
        self.push_internal(left, right)
    }

    fn push_leaf(&mut self, start: usize, lo: [f64; MAX_DIM], hi: [f64; MAX_DIM], wmax: f64) -> u32 {
        self.nodes.push(Node {
            start: start as u32,
            end: self.weight.len() as u32,
            lo,
            hi,
            wmax,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        (self.nodes.len() - 1) as u32
    }

    fn push_internal(&mut self, left: u32, right: u32) -> u32 {
        let (l, r) = (self.nodes[left as usize], self.nodes[right as usize]);
        let mut lo = l.lo;
        let mut hi = l.hi;
        for k in 0..self.dim {
            lo[k] = lo[k].min(r.lo[k]);
            hi[k] = hi[k].max(r.hi[k]);
        }
        self.nodes.push(Node { start: l.start, end: r.end, lo, hi, wmax: l.wmax.max(r.wmax), left, right });
        (self.nodes.len() - 1) as u32
    }

    /// Number of simulated vertices, window included.
    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    /// `|Delta_n|`.
    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// Vertex index of the window vertex of rank `r`.
    pub fn window_vertex(&self, r: usize) -> usize {
        self.window[r] as usize
    }

    /// Window rank of vertex `i`, if it lies in the window.
    pub fn window_rank(&self, i: usize) -> Option<usize> {
        let r = self.rank[i];
        (r != NO_RANK).then_some(r as usize)
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.pos[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weight[i]
    }

    fn dist2(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.position(i), self.position(j));
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[inline]
    fn hazard(&self, wx: f64, wy: f64, d2: f64) -> f64 {
        let decay = if self.half_alpha == 1.0 { 1.0 / d2 } else { d2.powf(-self.half_alpha) };
        self.lambda * wx * wy * decay
    }

    /// Edge probability between vertices `i != j`.
    pub fn pair_probability(&self, i: usize, j: usize) -> f64 {
        let h = self.hazard(self.weight[i], self.weight[j], self.dist2(i, j));
        -(-h).exp_m1()
    }

    #[inline]
    fn owned_by(&self, x: usize, rank_x: u32, j: usize) -> bool {
        j != x && (self.rank[j] == NO_RANK || self.rank[j] > rank_x)
    }

    /// Samples one edge set. `sink(x, y)` gets each edge once, `x` a window
    /// vertex; `y` is either a buffer vertex or a window vertex of larger
    /// rank.
    pub fn sample_edges<R, F>(&self, mode: GeneratorMode, rng: &mut R, mut sink: F)
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize),
    {
        let mut stack = Vec::with_capacity(128);
        for r in 0..self.window.len() {
            let x = self.window[r] as usize;
            match mode {
                GeneratorMode::Naive => {
                    for j in 0..self.len() {
                        if self.owned_by(x, r as u32, j) && rng.gen::<f64>() < self.pair_probability(x, j) {
                            sink(x, j);
                        }
                    }
                }
                GeneratorMode::Fast => self.sweep_tree(x, r as u32, rng, &mut stack, &mut sink),
            }
        }
    }

    fn sweep_tree<R, F>(&self, x: usize, rank_x: u32, rng: &mut R, stack: &mut Vec<u32>, sink: &mut F)
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize),
    {
        let wx = self.weight[x];
        let px: [f64; MAX_DIM] = {
            let mut p = [0.0; MAX_DIM];
            p[..self.dim].copy_from_slice(self.position(x));
            p
        };
        let px = &px[..self.dim];
        stack.clear();
        stack.push(self.root);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let (start, end) = (node.start as usize, node.end as usize);
            if node.is_leaf() {
                for j in start..end {
                    if self.owned_by(x, rank_x, j) {
                        let p = -(-self.hazard(wx, self.weight[j], self.dist2(x, j))).exp_m1();
                        if rng.gen::<f64>() < p {
                            sink(x, j);
                        }
                    }
                }
                continue;
            }
            let d2 = node.min_dist2(px);
            if d2 > 0.0 {
                let bound = self.hazard(wx, node.wmax, d2);
                let pbar = -(-bound).exp_m1();
                if (end - start) as f64 * pbar <= SWEEP_BUDGET {
                    let mut i = start as u64;
                    loop {
                        i = i.saturating_add(skip_by_hazard(rng, bound));
                        if i >= end as u64 {
                            break;
                        }
                        let j = i as usize;
                        if self.owned_by(x, rank_x, j) {
                            let p = -(-self.hazard(wx, self.weight[j], self.dist2(x, j))).exp_m1();
                            if rng.gen::<f64>() * pbar < p {
                                sink(x, j);
                            }
                        }
                        i += 1;
                    }
                    continue;
                }
            }
            stack.push(node.right);
            stack.push(node.left);
        }
    }

    fn label(&self, i: usize) -> VertexLabel {
        let mut c = [0.0; MAX_DIM];
        c[..self.dim].copy_from_slice(self.position(i));
        match self.kind {
            ModelKind::Lattice => VertexLabel::Lattice(c.map(|x| x as i64)),
            _ => VertexLabel::Point(c),
        }
    }
}

pub(crate) fn generate<R: Rng + ?Sized>(
    config: &ModelConfig,
    rng: &mut R,
    mut edges: Option<&mut EdgeList>,
) -> Result<Generated> {
    let v = SpatialVertices::build(config, rng)?;
    let m = v.window_len();
    let mut degrees = vec![0u64; m];
    v.sample_edges(config.mode, rng, |x, y| {
        degrees[v.rank[x] as usize] += 1;
        if let Some(r) = v.window_rank(y) {
            degrees[r] += 1;
        }
        if let Some(list) = edges.as_deref_mut() {
            list.push(v.label(x), v.label(y), 1);
        }
    });
    let mut positions = Vec::with_capacity(m * v.dim);
    let mut weights = Vec::with_capacity(m);
    for r in 0..m {
        let x = v.window[r] as usize;
        positions.extend_from_slice(v.position(x));
        weights.push(v.weight[x]);
    }
    Ok(Generated { positions, weights, degrees, simulated: v.len() as u64, buffer: Some(config.buffer_width()) })
}
