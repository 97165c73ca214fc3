//! Color configurations and the standard initial conditions.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::rng_from_seed;

/// An assignment of a color in `0..q` to every vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorConfig {
    q: usize,
    colors: Vec<usize>,
}

impl ColorConfig {
    pub fn new(q: usize, colors: Vec<usize>) -> Result<Self> {
        if q < 2 {
            return Err(Error::BadColorCount(q));
        }
        if let Some(&color) = colors.iter().find(|&&c| c >= q) {
            return Err(Error::ColorOutOfRange { color, q });
        }
        Ok(ColorConfig { q, colors })
    }

    pub(crate) fn from_raw(q: usize, colors: Vec<usize>) -> Self {
        debug_assert!(colors.iter().all(|&c| c < q));
        ColorConfig { q, colors }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn get(&self, v: usize) -> usize {
        self.colors[v]
    }

    /// Applies a permutation of the color set.
    pub fn relabel(&self, perm: &[usize]) -> ColorConfig {
        ColorConfig::from_raw(self.q, self.colors.iter().map(|&c| perm[c]).collect())
    }

    /// Base-`q` index with vertex 0 as the least significant digit.
    pub fn encode(&self) -> usize {
        self.colors.iter().rev().fold(0, |acc, &c| acc * self.q + c)
    }

    pub fn decode(q: usize, n: usize, mut index: usize) -> ColorConfig {
        let mut colors = Vec::with_capacity(n);
        for _ in 0..n {
            colors.push(index % q);
            index /= q;
        }
        ColorConfig::from_raw(q, colors)
    }

    /// `"q <q>"` followed by one color per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("q {}\n", self.q);
        for c in &self.colors {
            let _ = writeln!(out, "{c}");
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<ColorConfig> {
        let mut q = None;
        let mut colors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            match q {
                None => {
                    let rest = line.strip_prefix("q ").ok_or_else(|| err("expected `q <count>` header"))?;
                    q = Some(rest.trim().parse::<usize>().map_err(|_| err("bad color count"))?);
                }
                Some(_) => colors.push(line.parse::<usize>().map_err(|_| err("bad color"))?),
            }
        }
        let q = q.ok_or(Error::Parse { line: 0, msg: "missing `q` header".into() })?;
        ColorConfig::new(q, colors)
    }

    pub(crate) fn check_against(&self, g: &Graph, q: usize) -> Result<()> {
        if self.q != q {
            return Err(Error::ParamMismatch(format!("configuration has q = {}, model has q = {q}", self.q)));
        }
        if self.len() != g.n() {
            return Err(Error::ParamMismatch(format!(
                "configuration has {} entries, graph has {} vertices",
                self.len(),
                g.n()
            )));
        }
        Ok(())
    }
}

pub fn monochromatic(n: usize, q: usize, color: usize) -> Result<ColorConfig> {
    if q < 2 {
        return Err(Error::BadColorCount(q));
    }
    if color >= q {
        return Err(Error::ColorOutOfRange { color, q });
    }
    Ok(ColorConfig::from_raw(q, vec![color; n]))
}

/// Color 1 on the part containing vertex 0, color 0 on the other part.
pub fn alternating(g: &Graph, q: usize) -> Result<ColorConfig> {
    if q < 2 {
        return Err(Error::BadColorCount(q));
    }
    let (part, _) = g.bipartition()?.ok_or(Error::NotBipartite)?;
    let mut colors = vec![0; g.n()];
    for v in part {
        colors[v] = 1;
    }
    Ok(ColorConfig::from_raw(q, colors))
}

/// `x_v(j) = j . v mod q` on the side-`n` torus of dimension `d`.
pub fn lattice_pattern(n: usize, d: usize, q: usize, v: &[usize]) -> Result<ColorConfig> {
    if q < 2 {
        return Err(Error::BadColorCount(q));
    }
    if v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    if let Some(&component) = v.iter().find(|&&c| c >= q) {
        return Err(Error::ComponentOutOfRange { component, q });
    }
    if !n.is_multiple_of(q) {
        return Err(Error::NotMultiple { n, q });
    }
    let total = n.pow(d as u32);
    let colors = (0..total)
        .map(|index| {
            // row-major: last coordinate varies fastest
            let mut rest = index;
            let mut acc = 0;
            for i in (0..d).rev() {
                acc += (rest % n) * v[i];
                rest /= n;
            }
            acc % q
        })
        .collect();
    Ok(ColorConfig::from_raw(q, colors))
}

/// The rainbow pattern `v = (1, ..., 1)`.
pub fn rainbow(n: usize, d: usize, q: usize) -> Result<ColorConfig> {
    lattice_pattern(n, d, q, &vec![1; d])
}

/// The knight pattern `v = (1, ..., 1, 2)`.
pub fn knight(n: usize, d: usize, q: usize) -> Result<ColorConfig> {
    let mut v = vec![1; d];
    if let Some(last) = v.last_mut() {
        *last = 2 % q;
    }
    lattice_pattern(n, d, q, &v)
}

pub fn uniform_random(n: usize, q: usize, seed: u64) -> Result<ColorConfig> {
    if q < 2 {
        return Err(Error::BadColorCount(q));
    }
    let mut rng = rng_from_seed(seed);
    Ok(ColorConfig::from_raw(q, (0..n).map(|_| rng.random_range(0..q)).collect()))
}
