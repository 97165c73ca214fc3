//! Forward simulation of the continuous-time noisy voter model.
//!
//! Each vertex carries a rate-1 clock. When it rings the vertex copies a
//! uniformly chosen neighbor with probability `1 - theta`, or takes a
//! uniform color with probability `theta`. Clocks are realized as one
//! rate-`n` clock with a uniformly chosen vertex per ring.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::patterns::ColorConfig;
use crate::rng::{rng_from_seed, SimRng};

/// Hard cap on the number of update events in a single run.
pub const EVENT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    theta: f64,
    q: usize,
}

impl ModelParams {
    pub fn new(theta: f64, q: usize) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::BadTheta(theta));
        }
        if q < 2 {
            return Err(Error::BadColorCount(q));
        }
        Ok(ModelParams { theta, q })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Decay rate `1 - (1 - theta) lambda` attached to a walk eigenvalue.
    pub fn gamma(&self, lambda: f64) -> f64 {
        1.0 - (1.0 - self.theta) * lambda
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// The `q`-th root of unity `exp(2 pi i j / q)`.
pub fn root_of_unity(q: usize, j: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * (j % q) as f64 / q as f64)
}

/// State at time `t` of the chain started from `x0`.
pub fn run_forward(g: &Graph, p: &ModelParams, x0: &ColorConfig, t: f64, seed: u64) -> Result<ColorConfig> {
    run_forward_with(g, p, x0, t, &mut rng_from_seed(seed))
}

pub fn run_forward_with(g: &Graph, p: &ModelParams, x0: &ColorConfig, t: f64, rng: &mut SimRng) -> Result<ColorConfig> {
    x0.check_against(g, p.q())?;
    check_time(t)?;
    let n = g.n();
    let mut colors = x0.colors().to_vec();
    if n == 0 {
        return Ok(x0.clone());
    }
    let rate = n as f64;
    let mut clock = 0.0;
    let mut events = 0u64;
    loop {
        let gap: f64 = Exp1.sample(rng);
        clock += gap / rate;
        if clock > t {
            break;
        }
        events += 1;
        if events > EVENT_CAP {
            return Err(Error::EventCap(EVENT_CAP));
        }
        let v = rng.random_range(0..n);
        if rng.random::<f64>() < p.theta() {
            colors[v] = rng.random_range(0..p.q());
        } else {
            let nbrs = g.neighbors(v);
            // an isolated vertex has nobody to copy and keeps its color
            if !nbrs.is_empty() {
                colors[v] = colors[nbrs[rng.random_range(0..nbrs.len())]];
            }
        }
    }
    Ok(ColorConfig::from_raw(p.q(), colors))
}

/// Exact `E_x[sum_v w(v) omega^(k X_1(v))]` after one step of the discrete
/// chain that updates one uniformly chosen vertex.
pub fn one_step_expectation(
    g: &Graph,
    p: &ModelParams,
    x: &ColorConfig,
    k: usize,
    w: &[Complex64],
) -> Result<Complex64> {
    x.check_against(g, p.q())?;
    let q = p.q();
    if k == 0 || k >= q {
        return Err(Error::KOutOfRange { k, q });
    }
    if w.len() != g.n() {
        return Err(Error::SizeMismatch(format!("weight vector has {} entries, graph has {}", w.len(), g.n())));
    }
    let n = g.n() as f64;
    let powered: Vec<Complex64> = x.colors().iter().map(|&c| root_of_unity(q, k * c)).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for v in 0..g.n() {
        let nbrs = g.neighbors(v);
        // noise contributes (1/q) sum_omega omega^k = 0
        let copy = if nbrs.is_empty() {
            powered[v]
        } else {
            nbrs.iter().map(|&u| powered[u]).sum::<Complex64>() / nbrs.len() as f64
        };
        let value = powered[v] * (1.0 - 1.0 / n) + copy * ((1.0 - p.theta()) / n);
        total += w[v] * value;
    }
    Ok(total)
}
