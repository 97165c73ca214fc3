//! Simple undirected graphs with the random-walk stationary measure.
//!
//! Vertices are dense indices `0..n`. Tori use row-major encoding: the
//! vertex `(j_1, ..., j_d)` of the side-`s` torus has index
//! `j_1 s^{d-1} + ... + j_{d-1} s + j_d`.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Soft cap on graph size for dense spectral work.
pub const DENSE_SOFT_CAP: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    m: usize,
    pi: Vec<f64>,
    connected: bool,
    dropped_duplicates: usize,
}

/// Constants of the sub-exponential growth condition
/// `|B_v(r)| <= c0 * exp(r^(1 - alpha))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams {
    c0: f64,
    alpha: f64,
}

impl GrowthParams {
    pub fn new(c0: f64, alpha: f64) -> Result<Self> {
        if c0 > 0.0 && alpha > 0.0 && alpha < 1.0 && c0.is_finite() {
            Ok(GrowthParams { c0, alpha })
        } else {
            Err(Error::BadGrowthParams { c0, alpha })
        }
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bound(&self, r: usize) -> f64 {
        self.c0 * (r as f64).powf(1.0 - self.alpha).exp()
    }
}

/// A `(v, r)` pair where the growth bound fails.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthViolation {
    pub vertex: usize,
    pub radius: usize,
    pub ball_size: usize,
    pub bound: f64,
}

/// Which centers `growth_check` visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthSampling {
    Exhaustive,
    Sampled { centers: usize, seed: u64 },
}

impl Graph {
    /// Builds a simple graph. Duplicate edges are dropped and counted
    /// (see [`Graph::dropped_duplicates`]); self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut dropped = 0;
        for list in adj.iter_mut() {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            dropped += before - list.len();
        }
        // each duplicate was removed from both endpoint lists
        let dropped_duplicates = dropped / 2;
        let m = adj.iter().map(Vec::len).sum::<usize>() / 2;
        let pi = if m == 0 {
            vec![1.0 / n.max(1) as f64; n]
        } else {
            adj.iter().map(|l| l.len() as f64 / (2 * m) as f64).collect()
        };
        let connected = is_connected(&adj);
        Ok(Graph { n, adj, m, pi, connected, dropped_duplicates })
    }

    /// The `dim`-dimensional torus of side `side`.
    pub fn torus(side: usize, dim: usize) -> Result<Graph> {
        if side < 3 {
            return Err(Error::SideTooSmall(side));
        }
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let n = side.pow(dim as u32);
        let mut edges = Vec::with_capacity(n * dim);
        for v in 0..n {
            let mut stride = 1;
            for _ in 0..dim {
                let coord = (v / stride) % side;
                let next = if coord + 1 == side { v - coord * stride } else { v + stride };
                edges.push((v, next));
                stride *= side;
            }
        }
        Graph::from_edges(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Graph> {
        Graph::torus(n, 1)
    }

    pub fn complete(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph::from_edges(n, &edges).expect("complete graph edges are valid")
    }

    /// Star with one center (vertex 0) and `leaves` leaves.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
        Graph::from_edges(leaves + 1, &edges).expect("star edges are valid")
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Graph::from_edges(n, &edges).expect("path edges are valid")
    }

    /// Random connected graph: a uniform recursive tree plus each remaining
    /// pair independently with probability `extra_edge_prob`.
    pub fn random_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Graph {
        let mut rng = rng_from_seed(seed);
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.random_range(0..v), v));
        }
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < extra_edge_prob {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &edges).expect("random graph edges are valid")
    }

    /// Parses the edge-list text format: one `u v` pair per line, `#`
    /// comments and blank lines ignored, optional leading `n <count>`.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut declared_n = None;
        let mut edges = Vec::new();
        let mut seen_content = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !seen_content && fields.first() == Some(&"n") {
                if fields.len() != 2 {
                    return Err(parse_err("expected `n <count>`"));
                }
                declared_n = Some(fields[1].parse::<usize>().map_err(|_| parse_err("bad vertex count"))?);
                seen_content = true;
                continue;
            }
            seen_content = true;
            if fields.len() != 2 {
                return Err(parse_err("expected `u v`"));
            }
            let u = fields[0].parse::<usize>().map_err(|_| parse_err("bad vertex index"))?;
            let v = fields[1].parse::<usize>().map_err(|_| parse_err("bad vertex index"))?;
            edges.push((u, v));
        }
        let n = declared_n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
        Graph::from_edges(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Stationary measure of simple random walk, `d(v) / 2|E|`.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn dropped_duplicates(&self) -> usize {
        self.dropped_duplicates
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.connected && self.n > 0 {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    /// BFS distances from `v`, `usize::MAX` for unreachable vertices.
    pub fn distances_from(&self, v: usize) -> Vec<usize> {
        self.bfs(v, usize::MAX)
    }

    fn bfs(&self, v: usize, limit: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[v] = 0;
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= limit {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: usize, v: usize) -> Option<usize> {
        let d = self.distances_from(u)[v];
        (d != usize::MAX).then_some(d)
    }

    /// `{u : dist(v, u) <= r}`, sorted.
    pub fn ball(&self, v: usize, r: usize) -> Result<Vec<usize>> {
        self.check_vertex(v)?;
        let dist = self.bfs(v, r);
        Ok((0..self.n).filter(|&u| dist[u] <= r).collect())
    }

    /// Reports every sampled `(v, r)` with `|B_v(r)| > c0 exp(r^(1-alpha))`.
    pub fn growth_check(
        &self,
        params: GrowthParams,
        radii: &[usize],
        sampling: GrowthSampling,
    ) -> Vec<GrowthViolation> {
        let centers: Vec<usize> = match sampling {
            GrowthSampling::Exhaustive => (0..self.n).collect(),
            GrowthSampling::Sampled { centers, seed } => {
                let mut rng = rng_from_seed(seed);
                (0..centers.min(self.n)).map(|_| rng.random_range(0..self.n)).collect()
            }
        };
        let r_max = radii.iter().copied().max().unwrap_or(0);
        let mut out = Vec::new();
        for v in centers {
            let layers = self.layer_sizes(v, r_max);
            for &r in radii {
                let size: usize = layers.iter().take(r + 1).sum();
                let bound = params.bound(r);
                if size as f64 > bound {
                    out.push(GrowthViolation { vertex: v, radius: r, ball_size: size, bound });
                }
            }
        }
        out
    }

    /// Sizes of the BFS spheres around `v` at radii `0..=r_max`.
    fn layer_sizes(&self, v: usize, r_max: usize) -> Vec<usize> {
        let dist = self.bfs(v, r_max);
        let mut layers = vec![0; r_max + 1];
        for d in dist.into_iter().filter(|&d| d <= r_max) {
            layers[d] += 1;
        }
        layers
    }

    /// Sum of degrees over `set`.
    pub fn volume(&self, set: &[usize]) -> usize {
        let mask = self.mask(set);
        (0..self.n).filter(|&v| mask[v]).map(|v| self.degree(v)).sum()
    }

    /// Number of edges with exactly one endpoint in `set`.
    pub fn boundary_edges(&self, set: &[usize]) -> usize {
        let mask = self.mask(set);
        self.edges().filter(|&(u, v)| mask[u] != mask[v]).count()
    }

    /// `|E(S, S^c)| / Vol(S)`.
    pub fn conductance(&self, set: &[usize]) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        for &v in set {
            self.check_vertex(v)?;
        }
        let vol = self.volume(set);
        if vol == 0 {
            return Ok(0.0);
        }
        Ok(self.boundary_edges(set) as f64 / vol as f64)
    }

    pub(crate) fn mask(&self, set: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &v in set {
            mask[v] = true;
        }
        mask
    }

    /// Smallest `r` in `[r_n, 2 r_n]` with `|B(r+1) \ B(r)| / |B(r)| <= 8 / r^alpha`.
    pub fn low_conductance_ball(&self, v: usize, r_n: usize, alpha: f64) -> Result<usize> {
        self.check_vertex(v)?;
        let (lo, hi) = (r_n.max(1), 2 * r_n.max(1));
        let layers = self.layer_sizes(v, hi + 1);
        let mut ball: usize = layers.iter().take(lo).sum();
        for r in lo..=hi {
            ball += layers[r];
            let outer = layers[r + 1];
            if outer as f64 / ball as f64 <= 8.0 / (r as f64).powf(alpha) {
                return Ok(r);
            }
        }
        Err(Error::NotFound { lo, hi })
    }

    /// BFS 2-coloring; `V1` contains vertex 0. `None` if an odd cycle exists.
    pub fn bipartition(&self) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
        self.require_connected()?;
        let dist = self.distances_from(0);
        for (u, v) in self.edges() {
            if dist[u] % 2 == dist[v] % 2 {
                return Ok(None);
            }
        }
        let (even, odd): (Vec<usize>, Vec<usize>) = (0..self.n).partition(|&v| dist[v].is_multiple_of(2));
        Ok(Some((even, odd)))
    }
}

fn is_connected(adj: &[Vec<usize>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == adj.len()
}
