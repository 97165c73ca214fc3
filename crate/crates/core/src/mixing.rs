//! Exact laws on small state spaces and the distinguishing statistics.
//!
//! Configurations are indexed in base `q` with vertex 0 as the least
//! significant digit (see [`ColorConfig::encode`]). The generator of the
//! chain is `n (P - I)` where `P` updates one uniformly chosen vertex, so
//! `e^{tQ} = sum_k Pois(nt; k) P^k`.

use num_complex::Complex64;

use crate::dual::{backward_sample, cftp_sample, coalescence_probs};
use crate::dynamics::{check_time, root_of_unity, ModelParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::patterns::ColorConfig;
use crate::rng::{derive_seed, replicate_seeded, Estimate};
use crate::spectral::{marginals, Marginals, Spectrum};

/// Largest state space the exact routines accept.
pub const STATE_CAP: usize = 1 << 22;

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

const STATIONARY_ITER_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    q: usize,
    n: usize,
    probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn point_mass(x: &ColorConfig) -> Result<ExactDistribution> {
        let size = state_space(x.q(), x.len())?;
        let mut probs = vec![0.0; size];
        probs[x.encode()] = 1.0;
        Ok(ExactDistribution { q: x.q(), n: x.len(), probs })
    }

    pub fn uniform(q: usize, n: usize) -> Result<ExactDistribution> {
        let size = state_space(q, n)?;
        Ok(ExactDistribution { q, n, probs: vec![1.0 / size as f64; size] })
    }

    /// Wraps a probability vector over the `q^n` configurations.
    pub fn from_probs(q: usize, n: usize, probs: Vec<f64>) -> Result<ExactDistribution> {
        if probs.len() != state_space(q, n)? {
            return Err(Error::ShapeMismatch);
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::SizeMismatch(format!("probabilities must be nonnegative and sum to 1, got {total}")));
        }
        Ok(ExactDistribution { q, n, probs })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: &ColorConfig) -> f64 {
        self.probs[x.encode()]
    }

    /// `P(X(v) = c)` for every vertex and color.
    pub fn vertex_marginals(&self) -> Marginals {
        let mut probs = vec![vec![0.0; self.q]; self.n];
        for (idx, &mass) in self.probs.iter().enumerate() {
            let mut rest = idx;
            for row in probs.iter_mut() {
                row[rest % self.q] += mass;
                rest /= self.q;
            }
        }
        Marginals { n: self.n, q: self.q, probs }
    }
}

fn state_space(q: usize, n: usize) -> Result<usize> {
    match q.checked_pow(n as u32) {
        Some(s) if s <= STATE_CAP => Ok(s),
        _ => Err(Error::StateSpaceTooLarge { q, n }),
    }
}

/// `dst = src P` for the one-update kernel.
struct Kernel<'a> {
    g: &'a Graph,
    theta: f64,
    q: usize,
    pow: Vec<usize>,
}

impl<'a> Kernel<'a> {
    fn new(g: &'a Graph, p: &ModelParams) -> Kernel<'a> {
        let pow = (0..g.n()).scan(1usize, |acc, _| {
            let cur = *acc;
            *acc *= p.q();
            Some(cur)
        });
        Kernel { g, theta: p.theta(), q: p.q(), pow: pow.collect() }
    }

    fn apply(&self, src: &[f64], dst: &mut [f64]) {
        let n = self.g.n();
        dst.fill(0.0);
        if n == 0 {
            dst.copy_from_slice(src);
            return;
        }
        let noise = self.theta / (n * self.q) as f64;
        let copy = (1.0 - self.theta) / n as f64;
        let mut digits = vec![0usize; n];
        for (x, &mass) in src.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut rest = x;
            for d in digits.iter_mut() {
                *d = rest % self.q;
                rest /= self.q;
            }
            for v in 0..n {
                let base = x - digits[v] * self.pow[v];
                for c in 0..self.q {
                    dst[base + c * self.pow[v]] += mass * noise;
                }
                let nbrs = self.g.neighbors(v);
                if nbrs.is_empty() {
                    dst[x] += mass * copy;
                } else {
                    let share = mass * copy / nbrs.len() as f64;
                    for &u in nbrs {
                        dst[base + digits[u] * self.pow[v]] += share;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialLaw {
    Config(ColorConfig),
    Uniform,
}

/// The law of `X_t` by uniformization, dropping Poisson terms once the
/// remaining tail mass is below `tail_tol`.
pub fn exact_distribution(
    g: &Graph,
    p: &ModelParams,
    init: &InitialLaw,
    t: f64,
    tail_tol: f64,
) -> Result<ExactDistribution> {
    check_time(t)?;
    let start = match init {
        InitialLaw::Config(x) => {
            x.check_against(g, p.q())?;
            ExactDistribution::point_mass(x)?
        }
        InitialLaw::Uniform => ExactDistribution::uniform(p.q(), g.n())?,
    };
    let rate = g.n() as f64 * t;
    if rate == 0.0 {
        return Ok(start);
    }
    let kernel = Kernel::new(g, p);
    let mut cur = start.probs.clone();
    let mut next = vec![0.0; cur.len()];
    let mut acc = vec![0.0; cur.len()];
    let ln_rate = rate.ln();
    let mut log_w = -rate;
    let mut total = 0.0;
    let mut k = 0u64;
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += w * c;
            }
            total += w;
        }
        // tail past k is at most w_{k+1} / (1 - rate / (k + 2)) once k + 2 > rate
        let next_log_w = log_w + ln_rate - ((k + 1) as f64).ln();
        let kk = (k + 2) as f64;
        if kk > rate && next_log_w.exp() / (1.0 - rate / kk) < tail_tol {
            break;
        }
        kernel.apply(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        log_w = next_log_w;
        k += 1;
    }
    for a in &mut acc {
        *a /= total;
    }
    Ok(ExactDistribution { q: p.q(), n: g.n(), probs: acc })
}

/// The stationary law by power iteration on the one-update kernel,
/// stopped once successive iterates are within `tol / 10` in total
/// variation.
pub fn exact_stationary(g: &Graph, p: &ModelParams, tol: f64) -> Result<ExactDistribution> {
    let mut cur = ExactDistribution::uniform(p.q(), g.n())?.probs;
    let kernel = Kernel::new(g, p);
    let mut next = vec![0.0; cur.len()];
    for _ in 0..STATIONARY_ITER_CAP {
        kernel.apply(&cur, &mut next);
        let diff: f64 = 0.5 * cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>();
        std::mem::swap(&mut cur, &mut next);
        if diff <= tol / 10.0 {
            let total: f64 = cur.iter().sum();
            cur.iter_mut().for_each(|x| *x /= total);
            return Ok(ExactDistribution { q: p.q(), n: g.n(), probs: cur });
        }
    }
    Err(Error::NoConvergence(STATIONARY_ITER_CAP))
}

pub fn tv_distance(a: &ExactDistribution, b: &ExactDistribution) -> Result<f64> {
    if a.q != b.q || a.n != b.n {
        return Err(Error::ShapeMismatch);
    }
    Ok((0.5 * a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0))
}

fn check_marginals(marg: &Marginals, x: &ColorConfig) -> Result<()> {
    if marg.n != x.len() || marg.q != x.q() || marg.probs.len() != marg.n {
        return Err(Error::ShapeMismatch);
    }
    Ok(())
}

/// `sum_v pi(v) sum_c (P(X_t(v) = c) - 1/q)(1{x(v) = c} - 1/q)`.
pub fn statistic_r_auto(marg: &Marginals, x: &ColorConfig, g: &Graph) -> Result<f64> {
    check_marginals(marg, x)?;
    if g.n() != x.len() {
        return Err(Error::ShapeMismatch);
    }
    let u = 1.0 / marg.q as f64;
    Ok((0..g.n())
        .map(|v| {
            let s: f64 = (0..marg.q)
                .map(|c| (marg.probs[v][c] - u) * (f64::from(u8::from(x.get(v) == c)) - u))
                .sum();
            g.pi()[v] * s
        })
        .sum())
}

/// `sum_{uv in E} (1{x(u) = x(v)} - P(X_t(v) = x(u)))`, each edge once
/// with `u < v`.
pub fn statistic_r_edge(g: &Graph, marg: &Marginals, x: &ColorConfig) -> Result<f64> {
    check_marginals(marg, x)?;
    if g.n() != x.len() {
        return Err(Error::ShapeMismatch);
    }
    Ok(g
        .edges()
        .map(|(u, v)| f64::from(u8::from(x.get(u) == x.get(v))) - marg.probs[v][x.get(u)])
        .sum())
}

/// Unbiased estimate of `A2(t)` from independent pairs `(X_t, X'_t)`:
/// `sum_v pi(v) (1{X_t(v) = X'_t(v)} - 1/q)`.
pub fn empirical_autocorr(
    g: &Graph,
    p: &ModelParams,
    x0: &ColorConfig,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<Estimate> {
    x0.check_against(g, p.q())?;
    check_time(t)?;
    if reps < 2 {
        return Err(Error::TooFewReplicates { need: 2, got: reps });
    }
    let u = 1.0 / p.q() as f64;
    let values = replicate_seeded(reps, seed, |_, s| -> Result<f64> {
        let a = backward_sample(g, p, x0, t, derive_seed(s, 0))?;
        let b = backward_sample(g, p, x0, t, derive_seed(s, 1))?;
        Ok((0..g.n()).map(|v| g.pi()[v] * (f64::from(u8::from(a.get(v) == b.get(v))) - u)).sum())
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&values))
}

/// Draws `reps` samples of `X_t` from `x0` through the dual.
pub fn sample_at(g: &Graph, p: &ModelParams, x0: &ColorConfig, t: f64, reps: usize, seed: u64) -> Result<Vec<ColorConfig>> {
    replicate_seeded(reps, seed, |_, s| backward_sample(g, p, x0, t, s)).into_iter().collect()
}

/// Draws `reps` exact stationary samples.
pub fn sample_stationary(g: &Graph, p: &ModelParams, reps: usize, seed: u64) -> Result<Vec<ColorConfig>> {
    replicate_seeded(reps, seed, |_, s| cftp_sample(g, p, s)).into_iter().collect()
}

/// Sample mean of `f` over `samples`.
pub fn mean_of(samples: &[ColorConfig], f: impl Fn(&ColorConfig) -> f64) -> Estimate {
    let values: Vec<f64> = samples.iter().map(f).collect();
    Estimate::from_samples(&values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

/// `Cov(X(u)^k, X(v)^k) = E[X(u)^k conj(X(v)^k)] - m_u conj(m_v)` with the
/// means `m_u, m_v` supplied exactly.
pub fn edge_covariance(
    samples: &[ColorConfig],
    u: usize,
    v: usize,
    k: usize,
    mean_u: Complex64,
    mean_v: Complex64,
) -> ComplexEstimate {
    let offset = mean_u * mean_v.conj();
    let z: Vec<Complex64> = samples
        .iter()
        .map(|x| root_of_unity(x.q(), k * x.get(u)) * root_of_unity(x.q(), k * x.get(v)).conj())
        .collect();
    let re = Estimate::from_samples(&z.iter().map(|c| c.re).collect::<Vec<_>>());
    let im = Estimate::from_samples(&z.iter().map(|c| c.im).collect::<Vec<_>>());
    ComplexEstimate {
        re: Estimate { value: re.value - offset.re, stderr: re.stderr },
        im: Estimate { value: im.value - offset.im, stderr: im.stderr },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceGap {
    pub u: usize,
    pub v: usize,
    pub k: usize,
    pub stationary: ComplexEstimate,
    pub at_t: ComplexEstimate,
    pub p_after: Estimate,
    /// Real part of `Cov_mu - Cov_x0 - p_after`; nonnegative in expectation.
    pub gap: Estimate,
    /// Imaginary part of `Cov_mu - Cov_x0`; zero in expectation.
    pub imag: Estimate,
}

fn combine(terms: &[(f64, Estimate)]) -> Estimate {
    Estimate {
        value: terms.iter().map(|(s, e)| s * e.value).sum(),
        stderr: terms.iter().map(|(s, e)| (s * e.stderr).powi(2)).sum::<f64>().sqrt(),
    }
}

/// Per-edge, per-`k` covariance gaps between the stationary law and the
/// law at time `t`, from `reps` independent samples of each and `reps`
/// two-walker runs per edge.
pub fn covariance_gaps(
    g: &Graph,
    p: &ModelParams,
    x0: &ColorConfig,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<CovarianceGap>> {
    if reps < 2 {
        return Err(Error::TooFewReplicates { need: 2, got: reps });
    }
    let spec = Spectrum::new(g)?;
    let marg = marginals(&spec, x0, p, t)?;
    let stationary = sample_stationary(g, p, reps, derive_seed(seed, 0))?;
    let at_t = sample_at(g, p, x0, t, reps, derive_seed(seed, 1))?;
    let q = p.q();
    let mean = |v: usize, k: usize| -> Complex64 { (0..q).map(|c| root_of_unity(q, k * c) * marg.probs[v][c]).sum() };
    let mut out = Vec::new();
    for (i, (u, v)) in g.edges().enumerate() {
        let p_after = coalescence_probs(g, p, u, v, t, reps, derive_seed(derive_seed(seed, 2), i as u64))?.p_after;
        for k in 1..q {
            let zero = Complex64::new(0.0, 0.0);
            let st = edge_covariance(&stationary, u, v, k, zero, zero);
            let xt = edge_covariance(&at_t, u, v, k, mean(u, k), mean(v, k));
            out.push(CovarianceGap {
                u,
                v,
                k,
                stationary: st,
                at_t: xt,
                p_after,
                gap: combine(&[(1.0, st.re), (-1.0, xt.re), (-1.0, p_after)]),
                imag: combine(&[(1.0, st.im), (-1.0, xt.im)]),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStatisticGap {
    pub stationary_mean: Estimate,
    pub mean_at_t: Estimate,
    /// `E_mu[R] - E_x0[R(X_t)]`.
    pub gap: Estimate,
    /// `(1/2) sum_{uv in E} P(u and v coalesce after t)`.
    pub half_late_coalescence: Estimate,
}

impl EdgeStatisticGap {
    /// `gap - half_late_coalescence` with its standard error.
    pub fn slack(&self) -> Estimate {
        combine(&[(1.0, self.gap), (-1.0, self.half_late_coalescence)])
    }
}

pub fn edge_statistic_gap(
    g: &Graph,
    p: &ModelParams,
    x0: &ColorConfig,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<EdgeStatisticGap> {
    if reps < 2 {
        return Err(Error::TooFewReplicates { need: 2, got: reps });
    }
    let spec = Spectrum::new(g)?;
    let marg = marginals(&spec, x0, p, t)?;
    let stationary = sample_stationary(g, p, reps, derive_seed(seed, 0))?;
    let at_t = sample_at(g, p, x0, t, reps, derive_seed(seed, 1))?;
    let stat = |x: &ColorConfig| statistic_r_edge(g, &marg, x).expect("shapes checked above");
    let stationary_mean = mean_of(&stationary, stat);
    let mean_at_t = mean_of(&at_t, stat);
    let mut late = Vec::new();
    for (i, (u, v)) in g.edges().enumerate() {
        late.push((0.5, coalescence_probs(g, p, u, v, t, reps, derive_seed(derive_seed(seed, 2), i as u64))?.p_after));
    }
    Ok(EdgeStatisticGap {
        stationary_mean,
        mean_at_t,
        gap: combine(&[(1.0, stationary_mean), (-1.0, mean_at_t)]),
        half_late_coalescence: combine(&late),
    })
}
