//! Acceptance gate: every criterion prints one PASS/FAIL line with the
//! measured quantity. Pass criterion numbers as arguments to run a subset.

mod common;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::Rng;

use noisy_voter::dual::{all_dead_prob, backward_sample, cftp_sample, coalescence_probs, pi_restricted, stay_prob};
use noisy_voter::dynamics::run_forward_with;
use noisy_voter::mixing::{
    covariance_gaps, edge_statistic_gap, exact_distribution, exact_stationary, mean_of, sample_at,
    sample_stationary, statistic_r_auto, tv_distance, InitialLaw, DEFAULT_TAIL_TOL,
};
use noisy_voter::patterns::{alternating, knight, lattice_pattern, monochromatic, rainbow, uniform_random};
use noisy_voter::rng::{replicate, replicate_seeded, rng_from_seed};
use noisy_voter::spectral::{autocorr_curve, eigenfunction_residual, lattice_pattern_spectrum, marginals, t_x0};
use noisy_voter::{ColorConfig, Estimate, Flavor, Graph, ModelParams, Spectrum};

struct Outcome {
    pass: bool,
    detail: String,
}

fn params(theta: f64, q: usize) -> ModelParams {
    ModelParams::new(theta, q).unwrap()
}

fn spectral_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [12, 24, 60] {
        let g = Graph::torus(n, 1).unwrap();
        let spec = Spectrum::new(&g).unwrap();
        for q in [2, 3, 5] {
            if n % q != 0 {
                continue;
            }
            for v in 0..q {
                let x = lattice_pattern(n, 1, q, &[v]).unwrap();
                for theta in [0.2, 0.5, 0.9] {
                    let curve = autocorr_curve(&spec, &x, &params(theta, q)).unwrap();
                    for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
                        let exact = common::cycle_pattern_autocorr(q, v, theta, t);
                        worst = worst.max((curve.eval(t, Flavor::A2).unwrap() - exact).abs());
                    }
                }
            }
        }
    }
    Outcome { pass: worst <= 1e-8, detail: format!("max |A2 - closed form| = {worst:.2e} (tol 1e-8)") }
}

struct Instance {
    theta: f64,
    q: usize,
    curve: noisy_voter::AutocorrCurve,
}

fn random_instances() -> Vec<Instance> {
    let mut rng = rng_from_seed(2024);
    (0..50)
        .map(|i| {
            let n = rng.random_range(2..=40);
            let q = rng.random_range(2..=5);
            let theta = rng.random_range(0.02..=1.0);
            let g = Graph::random_connected(n, rng.random_range(0.0..0.3), 1000 + i);
            let x = uniform_random(n, q, 2000 + i).unwrap();
            let curve = autocorr_curve(&Spectrum::new(&g).unwrap(), &x, &params(theta, q)).unwrap();
            Instance { theta, q, curve }
        })
        .collect()
}

fn t_grid() -> Vec<f64> {
    (0..20).map(|i| 0.2 * i as f64).collect()
}

fn doubling_identity() -> Outcome {
    let mut worst = 0.0f64;
    for inst in random_instances() {
        for t in t_grid() {
            let a2 = inst.curve.eval(t, Flavor::A2).unwrap();
            let a1 = inst.curve.eval(2.0 * t, Flavor::A1).unwrap();
            worst = worst.max((a2 - a1).abs());
        }
    }
    Outcome { pass: worst <= 1e-12, detail: format!("max |A2(t) - A1(2t)| = {worst:.2e} over 50 instances (tol 1e-12)") }
}

fn submultiplicativity() -> Outcome {
    let mut worst = f64::INFINITY;
    for inst in random_instances() {
        let th = inst.theta;
        let top = (inst.q as f64 - 1.0) / inst.q as f64;
        for t in t_grid() {
            let at = inst.curve.eval(t, Flavor::A2).unwrap();
            worst = worst.min(top * (-2.0 * th * t).exp() - at);
            worst = worst.min(at - top * (-(4.0 - 2.0 * th) * t).exp());
            for s in t_grid() {
                let ats = inst.curve.eval(t + s, Flavor::A2).unwrap();
                worst = worst.min((-2.0 * th * s).exp() * at - ats);
                worst = worst.min(ats - (-(4.0 - 2.0 * th) * s).exp() * at);
            }
        }
    }
    Outcome { pass: worst >= -1e-12, detail: format!("min slack = {worst:.2e} (need >= -1e-12)") }
}

fn eigenfunction_property() -> Outcome {
    let mut rng = rng_from_seed(77);
    let mut cases: Vec<(Graph, usize, f64)> = (0..20)
        .map(|i| {
            let n = rng.random_range(2..=30);
            (Graph::random_connected(n, rng.random_range(0.0..0.3), 300 + i), rng.random_range(2..=4), rng.random_range(0.05..1.0))
        })
        .collect();
    cases.push((Graph::cycle(8).unwrap(), 3, 0.4));
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (i, (g, q, theta)) in cases.iter().enumerate() {
        let spec = Spectrum::new(g).unwrap();
        let p = params(*theta, *q);
        for j in 0..3 {
            let x = uniform_random(g.n(), *q, (i * 10 + j) as u64).unwrap();
            for l in 0..g.n() {
                for k in 1..*q {
                    worst = worst.max(eigenfunction_residual(g, &p, &spec, l, k, &x).unwrap());
                    checked += 1;
                }
            }
        }
    }
    Outcome { pass: worst <= 1e-9, detail: format!("max residual = {worst:.2e} over {checked} (l, k, x) (tol 1e-9)") }
}

fn lattice_numbers() -> Outcome {
    let knt = lattice_pattern_spectrum(2, 5, &[1, 2], 0.5).unwrap();
    let rbw = lattice_pattern_spectrum(2, 5, &[1, 1], 0.5).unwrap();
    let closed_err = (knt.lambda_star + 0.25)
        .abs()
        .max((knt.theta_v - 5.0 / 9.0).abs())
        .max((rbw.theta_v - (10.0 - 5f64.sqrt()) / 19.0).abs());
    let side = 20;
    let g = Graph::torus(side, 2).unwrap();
    let spec = Spectrum::new(&g).unwrap();
    let xk = knight(side, 2, 5).unwrap();
    let xr = rainbow(side, 2, 5).unwrap();
    let mut ok = closed_err <= 1e-12;
    let mut worst_margin = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    for i in 1..=9 {
        let theta = i as f64 / 10.0;
        let p = params(theta, 5);
        let tk = t_x0(&autocorr_curve(&spec, &xk, &p).unwrap(), g.n());
        let tr = t_x0(&autocorr_curve(&spec, &xr, &p).unwrap(), g.n());
        let delta = 5f64.sqrt() * (1.0 - theta) / (5.0 - theta);
        let ratio = tk / tr;
        ok &= tk < tr && ratio <= 1.0 - delta + 0.15;
        worst_margin = worst_margin.min(1.0 - delta + 0.15 - ratio);
        worst_ratio = worst_ratio.max(ratio);
    }
    Outcome {
        pass: ok,
        detail: format!(
            "closed-form error {closed_err:.1e}; max T_knt/T_rbw = {worst_ratio:.4}, min margin to 1 - delta + 0.15 = {worst_margin:.4}"
        ),
    }
}

fn exact_tv() -> Outcome {
    let g = Graph::cycle(8).unwrap();
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_marg = 0.0f64;
    for theta in [0.3, 0.7] {
        let p = params(theta, 2);
        let mu = exact_stationary(&g, &p, 1e-13).unwrap();
        let spec = Spectrum::new(&g).unwrap();
        for x0 in [monochromatic(8, 2, 0).unwrap(), alternating(&g, 2).unwrap()] {
            let mut prev = f64::INFINITY;
            for i in 0..=32 {
                let t = 0.25 * i as f64;
                let law = exact_distribution(&g, &p, &InitialLaw::Config(x0.clone()), t, DEFAULT_TAIL_TOL).unwrap();
                let d = tv_distance(&law, &mu).unwrap();
                worst_rise = worst_rise.max(d - prev);
                prev = d;
                let exact = law.vertex_marginals();
                let spectral = marginals(&spec, &x0, &p, t).unwrap();
                for (a, b) in exact.probs.iter().flatten().zip(spectral.probs.iter().flatten()) {
                    worst_marg = worst_marg.max((a - b).abs());
                }
            }
        }
    }
    Outcome {
        pass: worst_rise <= 0.0 && worst_marg <= 1e-8,
        detail: format!("largest step increase of d_tv = {worst_rise:.2e}; max marginal gap = {worst_marg:.2e} (tol 1e-8)"),
    }
}

fn cftp_correctness() -> Outcome {
    let g = Graph::cycle(6).unwrap();
    let p = params(0.5, 2);
    let reps = 1_000_000;
    let codes = replicate_seeded(reps, 7, |_, s| cftp_sample(&g, &p, s).unwrap().encode());
    let mut counts = [0usize; 64];
    for c in codes {
        counts[c] += 1;
    }
    let mu = exact_stationary(&g, &p, 1e-13).unwrap();
    let tv: f64 = 0.5 * counts.iter().zip(mu.probs()).map(|(&c, m)| (c as f64 / reps as f64 - m).abs()).sum::<f64>();
    Outcome { pass: tv <= 0.01, detail: format!("TV(empirical, exact) = {tv:.5} over 1e6 samples (tol 0.01)") }
}

fn window_counts(samples: &[ColorConfig], window: &[usize]) -> HashMap<Vec<usize>, usize> {
    let mut out = HashMap::new();
    for x in samples {
        *out.entry(window.iter().map(|&v| x.get(v)).collect()).or_insert(0) += 1;
    }
    out
}

fn duality() -> Outcome {
    let reps = 100_000;
    let mut worst = 0.0f64;
    let mut cases = 0;
    let graphs = [(Graph::complete(2), vec![0, 1]), (Graph::cycle(6).unwrap(), vec![0, 1, 2])];
    for (gi, (g, window)) in graphs.iter().enumerate() {
        for q in [2, 3] {
            let x0 = ColorConfig::new(q, (0..g.n()).map(|v| v % q).collect()).unwrap();
            for theta in [0.3, 0.7] {
                let p = params(theta, q);
                for t in [0.5, 1.0] {
                    let seed = (gi * 1000 + q * 100 + (theta * 10.0) as usize * 10) as u64 + t as u64;
                    let fwd = replicate(reps, seed, |_, rng| run_forward_with(g, &p, &x0, t, rng).unwrap());
                    let bwd = replicate_seeded(reps, seed ^ 0xabcdef, |_, s| backward_sample(g, &p, &x0, t, s).unwrap());
                    let (cf, cb) = (window_counts(&fwd, window), window_counts(&bwd, window));
                    let keys: std::collections::HashSet<_> = cf.keys().chain(cb.keys()).collect();
                    for key in keys {
                        let a = Estimate::from_hits(*cf.get(key).unwrap_or(&0), reps);
                        let b = Estimate::from_hits(*cb.get(key).unwrap_or(&0), reps);
                        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
                        if se > 0.0 {
                            worst = worst.max((a.value - b.value).abs() / se);
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    Outcome { pass: worst <= 4.0, detail: format!("max |forward - backward| = {worst:.2} sigma over {cases} cases (tol 4)") }
}

fn statistic_means() -> Outcome {
    let n = 12;
    let g = Graph::cycle(n).unwrap();
    let p = params(0.5, 3);
    let x0 = rainbow(n, 1, 3).unwrap();
    let spec = Spectrum::new(&g).unwrap();
    let curve = autocorr_curve(&spec, &x0, &p).unwrap();
    let reps = 100_000;
    let stationary = sample_stationary(&g, &p, reps, 91).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, t) in [0.5, 1.0].into_iter().enumerate() {
        let marg = marginals(&spec, &x0, &p, t).unwrap();
        let f = |x: &ColorConfig| statistic_r_auto(&marg, x, &g).unwrap();
        let at_t = mean_of(&sample_at(&g, &p, &x0, t, reps, 50 + i as u64).unwrap(), f);
        let under_mu = mean_of(&stationary, f);
        let target = curve.eval(t, Flavor::A2).unwrap();
        let z1 = (at_t.value - target) / at_t.stderr;
        let z2 = under_mu.value / under_mu.stderr;
        ok &= z1.abs() <= 4.0 && z2.abs() <= 4.0;
        parts.push(format!("t={t}: E_x0 {:.5} vs A2 {target:.5} ({z1:+.2} sigma), E_mu {:+.5} ({z2:+.2} sigma)", at_t.value, under_mu.value));
    }
    Outcome { pass: ok, detail: parts.join("; ") }
}

fn covariance_gap() -> Outcome {
    let g = Graph::cycle(10).unwrap();
    let reps = 100_000;
    let mut worst_edge = f64::INFINITY;
    let mut worst_sum = f64::INFINITY;
    let mut seed = 500;
    for q in [2, 3] {
        let x0 = uniform_random(10, q, 41).unwrap();
        for theta in [0.3, 0.7] {
            let p = params(theta, q);
            for t in [0.5, 1.0] {
                seed += 1;
                for gap in covariance_gaps(&g, &p, &x0, t, reps, seed).unwrap() {
                    worst_edge = worst_edge.min(gap.gap.value / gap.gap.stderr.max(1e-300));
                }
                let agg = edge_statistic_gap(&g, &p, &x0, t, reps, seed + 1000).unwrap().slack();
                worst_sum = worst_sum.min(agg.value / agg.stderr.max(1e-300));
            }
        }
    }
    Outcome {
        pass: worst_edge >= -4.0 && worst_sum >= -4.0,
        detail: format!("min per-edge gap = {worst_edge:+.2} sigma, min aggregate slack = {worst_sum:+.2} sigma (need >= -4)"),
    }
}

fn two_walker() -> Outcome {
    let g = Graph::complete(2);
    let reps = 1_000_000;
    let mut worst = 0.0f64;
    for theta in [0.3, 0.5] {
        for t in [0.5, 1.0] {
            let e = coalescence_probs(&g, &params(theta, 2), 0, 1, t, reps, (theta * 100.0 + t * 10.0) as u64).unwrap();
            worst = worst.max((e.p_meet.value - (1.0 - theta)).abs() / e.p_meet.stderr);
            worst = worst.max((e.p_after.value - (1.0 - theta) * (-2.0 * t).exp()).abs() / e.p_after.stderr);
        }
    }
    Outcome { pass: worst <= 4.0, detail: format!("max deviation = {worst:.2} sigma (tol 4)") }
}

fn rainbow_constant() -> Outcome {
    let n = 60;
    let g = Graph::cycle(n).unwrap();
    let spec = Spectrum::new(&g).unwrap();
    let horizon = 2.0 * (n as f64).ln();
    let grid: Vec<f64> = (0..=40).map(|i| horizon * i as f64 / 40.0).collect();
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for q in [3, 4, 5] {
        let c = (1.0 / 7.0f64).min(PI * PI / (16.0 * q as f64)) * (-4.0 * PI).exp() / q as f64;
        let mut configs: Vec<ColorConfig> = (0..1000).map(|i| uniform_random(n, q, 7000 + i).unwrap()).collect();
        configs.push(monochromatic(n, q, 0).unwrap());
        configs.extend((0..q).map(|v| lattice_pattern(n, 1, q, &[v]).unwrap()));
        for theta in [0.2, 0.5, 0.8] {
            let p = params(theta, q);
            let rate = 1.0 - (1.0 - theta) * (TAU / q as f64).cos();
            for x in &configs {
                let curve = autocorr_curve(&spec, x, &p).unwrap();
                for &t in &grid {
                    let bound = c * (-2.0 * rate * t).exp();
                    worst = worst.min(curve.eval(t, Flavor::A2).unwrap() / bound);
                }
                count += 1;
            }
        }
    }
    Outcome { pass: worst >= 1.0, detail: format!("min A2 / bound = {worst:.3e} over {count} curves (need >= 1)") }
}

fn escape_bound() -> Outcome {
    let p = params(0.5, 2);
    let mut worst = f64::INFINITY;
    let reps = 100_000;
    let mut seed = 900;
    for g in [Graph::cycle(40).unwrap(), Graph::torus(10, 2).unwrap()] {
        for r in [3, 5] {
            let ball = g.ball(0, r).unwrap();
            let phi = g.conductance(&ball).unwrap();
            let start = pi_restricted(&g, &ball).unwrap();
            for t in [1.0, 3.0] {
                seed += 1;
                let e = stay_prob(&g, &p, &ball, t, &start, reps, seed).unwrap();
                let bound = (-phi * (1.0 - p.theta()) * t).exp();
                worst = worst.min((e.value - bound) / e.stderr.max(1e-300));
            }
        }
    }
    Outcome { pass: worst >= -4.0, detail: format!("min (stay - bound) = {worst:+.2} sigma (need >= -4)") }
}

fn survival_bound() -> Outcome {
    let g = Graph::cycle(20).unwrap();
    let p = params(0.5, 2);
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for t in [5.0, 10.0, 15.0] {
        let e = all_dead_prob(&g, &p, t, 100_000, t as u64).unwrap();
        let bound = 1.0 - 20.0 * (-0.5 * t).exp();
        let z = if e.stderr > 0.0 { (e.value - bound) / e.stderr } else if e.value >= bound { f64::INFINITY } else { f64::NEG_INFINITY };
        worst = worst.min(z);
        parts.push(format!("t={t}: {:.4} vs {bound:.4}", e.value));
    }
    Outcome { pass: worst >= -4.0, detail: parts.join("; ") }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("spectral autocorrelation vs lattice closed form", spectral_identity),
        ("A2(t) = A1(2t)", doubling_identity),
        ("submultiplicative sandwich", submultiplicativity),
        ("eigenfunctions of the voter chain", eigenfunction_property),
        ("knight and rainbow numbers", lattice_numbers),
        ("exact TV monotone, marginals match", exact_tv),
        ("CFTP matches the exact stationary law", cftp_correctness),
        ("forward and backward window laws agree", duality),
        ("autocorrelation statistic means", statistic_means),
        ("covariance gap and edge statistic gap", covariance_gap),
        ("two-walker closed forms on K_2", two_walker),
        ("rainbow lower-bound constant", rainbow_constant),
        ("escape probability bound", escape_bound),
        ("all-walkers-dead bound", survival_bound),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        if !outcome.pass {
            failures += 1;
        }
        println!("{} {id:>2} {name}: {} [{secs:.1}s]", if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
