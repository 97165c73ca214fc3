//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

pub type Dense = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Scaling and squaring with a degree-20 Taylor polynomial.
pub fn expm(a: &Dense, t: f64) -> Dense {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * t;
    let mut s = 0;
    while norm / f64::from(1u32 << s.min(30)) > 0.5 {
        s += 1;
    }
    let scale = t / f64::from(1u32 << s);
    let m: Dense = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=20 {
        term = matmul(&term, &m);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

/// Full generator of the noisy voter chain, built state by state with the
/// colors stored as explicit vectors.
pub fn voter_generator(n: usize, edges: &[(usize, usize)], q: usize, theta: f64) -> Dense {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let states: Vec<Vec<usize>> = (0..q.pow(n as u32))
        .map(|mut i| {
            (0..n)
                .map(|_| {
                    let d = i % q;
                    i /= q;
                    d
                })
                .collect()
        })
        .collect();
    let index = |x: &[usize]| x.iter().rev().fold(0, |acc, &c| acc * q + c);
    let size = states.len();
    let mut gen = vec![vec![0.0; size]; size];
    for (i, x) in states.iter().enumerate() {
        for v in 0..n {
            for c in 0..q {
                let mut y = x.clone();
                y[v] = c;
                gen[i][index(&y)] += theta / q as f64;
            }
            for &u in &adj[v] {
                let mut y = x.clone();
                y[v] = x[u];
                gen[i][index(&y)] += (1.0 - theta) / adj[v].len() as f64;
            }
        }
        let out: f64 = gen[i].iter().sum();
        gen[i][i] -= out;
    }
    gen
}

/// `P(meet by t)` and `P(meet ever)` for two killed walkers started at
/// distance 1 on the cycle `C_n`, from the distance chain.
pub fn cycle_pair_meeting(n: usize, theta: f64, t: f64) -> (f64, f64) {
    let half = n / 2;
    // states 0 (met), 1..=half distances, half + 1 (dead)
    let size = half + 2;
    let mut g = vec![vec![0.0; size]; size];
    for d in 1..=half {
        let antipodal = d == half && n % 2 == 0;
        if antipodal {
            g[d][d - 1] += 2.0 * (1.0 - theta);
        } else {
            g[d][d - 1] += 1.0 - theta;
            // for odd n the outward move from the largest distance keeps it
            if d < half {
                g[d][d + 1] += 1.0 - theta;
            }
        }
        g[d][half + 1] += 2.0 * theta;
        let out: f64 = g[d].iter().sum();
        g[d][d] -= out;
    }
    let by_t = expm(&g, t)[1][0];
    let ever = expm(&g, 200.0 / theta)[1][0];
    (by_t, ever)
}

/// `(1/q) sum_{k=1}^{q-1} exp(-2 (1 - (1 - theta) lambda_k) t)` for the
/// pattern `j -> j v mod q` on a cycle.
pub fn cycle_pattern_autocorr(q: usize, v: usize, theta: f64, t: f64) -> f64 {
    (1..q)
        .map(|k| {
            let lam = (TAU * (k * v) as f64 / q as f64).cos();
            (-2.0 * (1.0 - (1.0 - theta) * lam) * t).exp()
        })
        .sum::<f64>()
        / q as f64
}

// Values below come from the same constructions run in double precision
// through an independent dense matrix exponential.

/// Law of the K_2 chain, q = 2, theta = 0.5, from x0 = (0, 1) at t = 1,
/// indexed with vertex 0 as the low digit.
pub const K2_LAW_T1: [f64; 4] = [0.32424927, 0.06418565, 0.28731581, 0.32424927];

/// Stationary probability that adjacent vertices agree on C_6, q = 2,
/// theta = 0.5.
pub const C6_STATIONARY_AGREE: f64 = 33.0 / 52.0;

/// TV distance to stationarity on C_6, q = 2, theta = 0.5, from the
/// all-zero configuration, at t = 0, 0.5, ..., 6.
pub const C6_MONO_TV: [f64; 13] = [
    0.935096153846154,
    0.6519302789936877,
    0.47868539968915425,
    0.37783212245689923,
    0.29272107189242813,
    0.22561995345811064,
    0.17386956272023216,
    0.13418467183609056,
    0.10374397118796937,
    0.0803420052200638,
    0.06230448166431604,
    0.048368829490100004,
    0.03758121911652419,
];

/// Late coalescence on an edge of C_16 at theta = 0.5, for
/// t = 0, 0.5, 1, 1.5, 2.
pub const C16_P_AFTER: [f64; 5] =
    [0.26794919487697294, 0.10865717223888255, 0.04662685039218378, 0.02101206095650282, 0.009863595956446536];
