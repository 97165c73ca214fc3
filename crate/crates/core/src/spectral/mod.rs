//! Spectral description of the voter chain.
//!
//! The simple random walk is reversible with respect to `pi`, so its
//! transition operator `P` is self-adjoint on `L^2(pi)`. It is diagonalized
//! through the symmetric matrix `N = D^{-1/2} A D^{-1/2}`: if `phi` is a unit
//! eigenvector of `N` then `psi = phi / sqrt(pi)` is a `pi`-normalized
//! eigenfunction of `P` with the same eigenvalue.

mod jacobi;

use num_complex::Complex64;

pub use jacobi::{jacobi_eigen, SymmetricEigen};

use crate::dynamics::{check_time, one_step_expectation, root_of_unity, ModelParams};
use crate::error::{Error, Result};
use crate::graph::{Graph, DENSE_SOFT_CAP};
use crate::patterns::ColorConfig;
use crate::rng::Estimate;

/// Off-diagonal tolerance per vertex used by [`Spectrum::new`].
pub const DEFAULT_EIGEN_TOL: f64 = 1e-11;

const RATE_MERGE: f64 = 1e-12;
const WEIGHT_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    lambdas: Vec<f64>,
    psis: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

impl Spectrum {
    pub fn new(g: &Graph) -> Result<Spectrum> {
        eigendecompose(g, DEFAULT_EIGEN_TOL * g.n() as f64)
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// Eigenvalues of the walk, descending.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Eigenfunctions, orthonormal in `L^2(pi)`; `psis()[l]` goes with
    /// `lambdas()[l]`.
    pub fn psis(&self) -> &[Vec<f64>] {
        &self.psis
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// A copy with eigenvalue `l` shifted by `delta`. Only useful for
    /// checking that the verification suites notice a broken spectrum.
    pub fn with_shifted_eigenvalue(&self, l: usize, delta: f64) -> Spectrum {
        let mut s = self.clone();
        s.lambdas[l] += delta;
        s
    }

    /// `max_l max_v |P psi_l(v) - lambda_l psi_l(v)|`.
    pub fn max_residual(&self, g: &Graph) -> f64 {
        let mut worst = 0.0f64;
        for (lam, psi) in self.lambdas.iter().zip(&self.psis) {
            for v in 0..g.n() {
                let nbrs = g.neighbors(v);
                let pv = if nbrs.is_empty() {
                    psi[v]
                } else {
                    nbrs.iter().map(|&u| psi[u]).sum::<f64>() / nbrs.len() as f64
                };
                worst = worst.max((pv - lam * psi[v]).abs());
            }
        }
        worst
    }

    /// `max_{i,j} |<psi_i, psi_j>_pi - delta_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            for j in i..self.n() {
                let dot: f64 = (0..self.n()).map(|v| self.psis[i][v] * self.psis[j][v] * self.pi[v]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn check_size(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::SizeMismatch(format!(
                "configuration has {len} entries, spectrum has {} vertices",
                self.n()
            )));
        }
        Ok(())
    }

    fn check_index(&self, l: usize) -> Result<()> {
        if l >= self.n() {
            return Err(Error::SizeMismatch(format!("eigen index {l} with only {} eigenpairs", self.n())));
        }
        Ok(())
    }
}

/// Eigenpairs of the simple random walk on `g`, with the Jacobi sweeps run
/// until the off-diagonal Frobenius norm is at most `tol`.
pub fn eigendecompose(g: &Graph, tol: f64) -> Result<Spectrum> {
    g.require_connected()?;
    let n = g.n();
    if n > DENSE_SOFT_CAP {
        return Err(Error::TooLarge(n));
    }
    if g.edge_count() == 0 {
        return Ok(Spectrum { lambdas: vec![1.0; n], psis: vec![vec![1.0; n]; n], pi: g.pi().to_vec() });
    }
    let mut m = vec![0.0; n * n];
    for (u, v) in g.edges() {
        let w = 1.0 / ((g.degree(u) * g.degree(v)) as f64).sqrt();
        m[u * n + v] = w;
        m[v * n + u] = w;
    }
    let eig = jacobi_eigen(&m, n, tol)?;
    let sqrt_pi: Vec<f64> = g.pi().iter().map(|p| p.sqrt()).collect();
    let psis = eig
        .vectors
        .iter()
        .map(|phi| phi.iter().zip(&sqrt_pi).map(|(x, s)| x / s).collect())
        .collect();
    let lambdas = eig.values.iter().map(|l| l.clamp(-1.0, 1.0)).collect();
    Ok(Spectrum { lambdas, psis, pi: g.pi().to_vec() })
}

/// `Psi_l^(k)(x) = sum_v omega^(k x(v)) psi_l(v) pi(v)`, indexed
/// `[l][k - 1]` for `k = 1..q`.
pub fn projections(spec: &Spectrum, x: &ColorConfig) -> Result<Vec<Vec<Complex64>>> {
    spec.check_size(x.len())?;
    let q = x.q();
    Ok(spec
        .psis
        .iter()
        .map(|psi| {
            (1..q)
                .map(|k| {
                    (0..spec.n())
                        .map(|v| root_of_unity(q, k * x.get(v)) * (psi[v] * spec.pi[v]))
                        .sum()
                })
                .collect()
        })
        .collect())
}

fn projection(spec: &Spectrum, x: &ColorConfig, l: usize, k: usize) -> Complex64 {
    (0..spec.n())
        .map(|v| root_of_unity(x.q(), k * x.get(v)) * (spec.psis[l][v] * spec.pi[v]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// Point-wise autocorrelation `sum_l alpha_l e^(-gamma_l t)`.
    A1,
    /// Marginal autocorrelation `sum_l alpha_l e^(-2 gamma_l t)`.
    A2,
}

/// The autocorrelation of one initial condition as a mixture of
/// exponentials: `A2(t) = sum_l weights[l] exp(-2 rates[l] t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrCurve {
    rates: Vec<f64>,
    weights: Vec<f64>,
    theta: f64,
    q: usize,
    n: usize,
}

impl AutocorrCurve {
    /// Builds a curve from `(rate, weight)` terms, merging equal rates.
    pub fn from_terms(terms: impl IntoIterator<Item = (f64, f64)>, p: &ModelParams, n: usize) -> AutocorrCurve {
        let mut terms: Vec<(f64, f64)> = terms.into_iter().collect();
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut rates: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (r, w) in terms {
            match rates.last() {
                Some(&last) if (r - last).abs() <= RATE_MERGE => *weights.last_mut().unwrap() += w,
                _ => {
                    rates.push(r);
                    weights.push(w);
                }
            }
        }
        // squared projections onto orthogonal eigenspaces leave rounding dust
        let (rates, weights) = rates.into_iter().zip(weights).filter(|&(_, w)| w > WEIGHT_FLOOR).unzip();
        AutocorrCurve { rates, weights, theta: p.theta(), q: p.q(), n }
    }

    /// The curve of the uniform initial distribution, identically zero.
    pub fn zero(p: &ModelParams, n: usize) -> AutocorrCurve {
        AutocorrCurve { rates: Vec::new(), weights: Vec::new(), theta: p.theta(), q: p.q(), n }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Size of the graph the curve was computed on; 0 for closed-form
    /// curves that are not attached to a graph.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64, flavor: Flavor) -> Result<f64> {
        check_time(t)?;
        Ok(self.eval_unchecked(t, flavor))
    }

    fn eval_unchecked(&self, t: f64, flavor: Flavor) -> f64 {
        let s = match flavor {
            Flavor::A1 => t,
            Flavor::A2 => 2.0 * t,
        };
        self.rates.iter().zip(&self.weights).map(|(r, w)| w * (-r * s).exp()).sum()
    }
}

pub fn autocorr_curve(spec: &Spectrum, x0: &ColorConfig, p: &ModelParams) -> Result<AutocorrCurve> {
    if x0.q() != p.q() {
        return Err(Error::ParamMismatch(format!("configuration has q = {}, model has q = {}", x0.q(), p.q())));
    }
    let proj = projections(spec, x0)?;
    let q = p.q() as f64;
    let terms = spec
        .lambdas
        .iter()
        .zip(&proj)
        .map(|(&lam, row)| (p.gamma(lam), row.iter().map(|z| z.norm_sqr()).sum::<f64>() / q));
    Ok(AutocorrCurve::from_terms(terms, p, spec.n()))
}

pub fn eval_autocorr(curve: &AutocorrCurve, t: f64, flavor: Flavor) -> Result<f64> {
    curve.eval(t, flavor)
}

/// First time `A2` drops to `1/n`.
pub fn t_x0(curve: &AutocorrCurve, n: usize) -> f64 {
    let target = 1.0 / n.max(1) as f64;
    if curve.eval_unchecked(0.0, Flavor::A2) <= target {
        return 0.0;
    }
    let q = curve.q as f64;
    let mut lo = 0.0;
    let mut hi = ((q - 1.0) * n as f64 / q).ln() / (2.0 * curve.theta) + 1.0;
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if curve.eval_unchecked(mid, Flavor::A2) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `T_x0` is the larger term.
    Autocorrelation,
    /// `log(n) / (4 theta)` is the larger term.
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmixPrediction {
    pub value: f64,
    pub t_x0: f64,
    pub noise_term: f64,
    pub branch: Branch,
}

/// `max{T_x0, log(n) / (4 theta)}`.
pub fn predicted_tmix(curve: &AutocorrCurve, n: usize, theta: f64) -> TmixPrediction {
    let t = t_x0(curve, n);
    let noise_term = (n.max(1) as f64).ln() / (4.0 * theta);
    let (value, branch) = if t >= noise_term { (t, Branch::Autocorrelation) } else { (noise_term, Branch::Noise) };
    TmixPrediction { value, t_x0: t, noise_term, branch }
}

/// Closed-form spectral data of a lattice pattern on the `d`-torus.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpectrum {
    pub d: usize,
    pub theta: f64,
    /// `lambda_k[k - 1] = (1/d) sum_i cos(2 pi k v_i / q)`.
    pub lambda_k: Vec<f64>,
    pub lambda_star: f64,
    /// Noise level where the two branches of the mixing time cross.
    pub theta_v: f64,
    pub curve: AutocorrCurve,
}

impl LatticeSpectrum {
    /// Coefficient `c` in `t_mix ~ c log(side)`.
    pub fn tmix_coefficient(&self) -> f64 {
        let rate = (1.0 - (1.0 - self.theta) * self.lambda_star).min(2.0 * self.theta);
        self.d as f64 / (2.0 * rate)
    }

    pub fn tmix(&self, side: usize) -> f64 {
        self.tmix_coefficient() * (side as f64).ln()
    }
}

pub fn lattice_pattern_spectrum(d: usize, q: usize, v: &[usize], theta: f64) -> Result<LatticeSpectrum> {
    let p = ModelParams::new(theta, q)?;
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    if let Some(&component) = v.iter().find(|&&c| c >= q) {
        return Err(Error::ComponentOutOfRange { component, q });
    }
    let lambda_k: Vec<f64> = (1..q)
        .map(|k| {
            v.iter()
                .map(|&vi| (std::f64::consts::TAU * ((k * vi) % q) as f64 / q as f64).cos())
                .sum::<f64>()
                / d as f64
        })
        .collect();
    let lambda_star = lambda_k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let curve = AutocorrCurve::from_terms(lambda_k.iter().map(|&l| (p.gamma(l), 1.0 / q as f64)), &p, 0);
    Ok(LatticeSpectrum { d, theta, lambda_k, lambda_star, theta_v: 1.0 - 1.0 / (2.0 - lambda_star), curve })
}

/// Single-site marginals, `probs[v][c] = P(X_t(v) = c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub n: usize,
    pub q: usize,
    pub probs: Vec<Vec<f64>>,
}

impl Marginals {
    pub fn uniform(n: usize, q: usize) -> Marginals {
        Marginals { n, q, probs: vec![vec![1.0 / q as f64; q]; n] }
    }
}

/// A surviving dual walker reads `x0` after a rate-`(1 - theta)` walk;
/// a dead one (probability `1 - e^(-theta t)`) is uniform.
pub fn marginals(spec: &Spectrum, x0: &ColorConfig, p: &ModelParams, t: f64) -> Result<Marginals> {
    spec.check_size(x0.len())?;
    check_time(t)?;
    let (n, q) = (spec.n(), p.q());
    if x0.q() != q {
        return Err(Error::ParamMismatch(format!("configuration has q = {}, model has q = {q}", x0.q())));
    }
    let alive = (-p.theta() * t).exp();
    let walk_time = (1.0 - p.theta()) * t;
    let decay: Vec<f64> = spec.lambdas.iter().map(|l| (-(1.0 - l) * walk_time).exp()).collect();
    let mut probs = vec![vec![(1.0 - alive) / q as f64; q]; n];
    for c in 0..q {
        // H_s 1{x0 = c} = sum_l e^{-(1 - lambda_l) s} <1{x0 = c}, psi_l> psi_l
        let coeffs: Vec<f64> = spec
            .psis
            .iter()
            .zip(&decay)
            .map(|(psi, dk)| dk * (0..n).filter(|&v| x0.get(v) == c).map(|v| psi[v] * spec.pi[v]).sum::<f64>())
            .collect();
        for (v, row) in probs.iter_mut().enumerate() {
            let h: f64 = coeffs.iter().zip(&spec.psis).map(|(a, psi)| a * psi[v]).sum();
            row[c] += alive * h;
        }
    }
    for row in &mut probs {
        for x in row.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
    }
    Ok(Marginals { n, q, probs })
}

/// Distance between one step of the discrete chain applied to
/// `Psi_l^(k)` and `(1 - gamma_l / n) Psi_l^(k)`, at the state `x`.
/// `l` indexes `spec.lambdas()`.
pub fn eigenfunction_residual(
    g: &Graph,
    p: &ModelParams,
    spec: &Spectrum,
    l: usize,
    k: usize,
    x: &ColorConfig,
) -> Result<f64> {
    spec.check_index(l)?;
    spec.check_size(g.n())?;
    let w: Vec<Complex64> = (0..g.n()).map(|v| Complex64::new(spec.psis[l][v] * spec.pi[v], 0.0)).collect();
    let lhs = one_step_expectation(g, p, x, k, &w)?;
    let factor = 1.0 - p.gamma(spec.lambdas[l]) / g.n() as f64;
    Ok((lhs - projection(spec, x, l, k) * factor).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryVariance {
    pub value: Estimate,
    pub lower: f64,
    pub upper: f64,
}

/// `Var(Psi_l^(k)(Y)) = (1/gamma_l) sum_v pi(v)^2 psi_l(v)^2 (1 - (1 - theta) h(v))`
/// under the stationary measure, where `h(v)` is the average over the
/// neighbors `w` of `v` of the probability that walkers from `v` and `w`
/// coalesce before dying.
pub fn stationary_variance(
    g: &Graph,
    p: &ModelParams,
    spec: &Spectrum,
    l: usize,
    k: usize,
    h: &[Estimate],
) -> Result<StationaryVariance> {
    spec.check_index(l)?;
    spec.check_size(g.n())?;
    if k == 0 || k >= p.q() {
        return Err(Error::KOutOfRange { k, q: p.q() });
    }
    if h.len() != g.n() {
        return Err(Error::SizeMismatch(format!("{} coalescence estimates for {} vertices", h.len(), g.n())));
    }
    if let Some((vertex, e)) = h
        .iter()
        .enumerate()
        .find(|(_, e)| e.value < -e.stderr - 1e-12 || e.value > 1.0 + e.stderr + 1e-12)
    {
        return Err(Error::BadHG { vertex, value: e.value });
    }
    let gamma = p.gamma(spec.lambdas[l]);
    let mass: Vec<f64> = (0..g.n()).map(|v| (spec.pi[v] * spec.psis[l][v]).powi(2)).collect();
    let total: f64 = mass.iter().sum();
    let value: f64 = mass.iter().zip(h).map(|(m, e)| m * (1.0 - (1.0 - p.theta()) * e.value)).sum::<f64>() / gamma;
    // neighboring vertices share edge estimates, so errors add linearly
    let stderr: f64 = mass.iter().zip(h).map(|(m, e)| m * (1.0 - p.theta()) * e.stderr).sum::<f64>() / gamma;
    Ok(StationaryVariance {
        value: Estimate { value, stderr },
        lower: p.theta() * total / gamma,
        upper: total / gamma,
    })
}
