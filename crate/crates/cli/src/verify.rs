use std::time::Instant;

use clap::ValueEnum;

use noisy_voter::dual::{backward_sample, cftp_sample_from, coalescence_probs, EventHistory};
use noisy_voter::dynamics::run_forward;
use noisy_voter::mixing::{
    covariance_gaps, exact_distribution, exact_stationary, mean_of, sample_at, sample_stationary, statistic_r_auto,
    tv_distance, InitialLaw, DEFAULT_TAIL_TOL,
};
use noisy_voter::patterns::{alternating, lattice_pattern, monochromatic, rainbow, uniform_random};
use noisy_voter::rng::replicate_seeded;
use noisy_voter::spectral::{
    autocorr_curve, eigenfunction_residual, lattice_pattern_spectrum, marginals, Spectrum,
};
use noisy_voter::{ColorConfig, Estimate, Flavor, Graph, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Graph,
    Patterns,
    Dynamics,
    Dual,
    Spectral,
    Mixing,
    All,
}

/// Soft budget for `verify all`; exceeding it only prints a warning.
const BUDGET_SECS: u64 = 600;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
        Check { name, pass, detail: detail.into() }
    }
}

fn params(theta: f64, q: usize) -> ModelParams {
    ModelParams::new(theta, q).expect("builtin parameters are valid")
}

/// z-score of the difference between two independent estimates.
fn z_diff(a: Estimate, b: Estimate) -> f64 {
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    if se == 0.0 {
        if a.value == b.value { 0.0 } else { f64::INFINITY }
    } else {
        (a.value - b.value) / se
    }
}

/// Runs `suite` and prints one line per check. Returns whether all passed.
/// With `inject_fault`, the spectral suite sees the second eigenvalue of
/// every spectrum shifted by 1e-3.
pub fn run(suite: Suite, inject_fault: bool) -> anyhow::Result<bool> {
    let start = Instant::now();
    let suites = match suite {
        Suite::All => vec![Suite::Graph, Suite::Patterns, Suite::Dynamics, Suite::Dual, Suite::Spectral, Suite::Mixing],
        s => vec![s],
    };
    let mut failed = Vec::new();
    let mut total = 0;
    for s in suites {
        let label = format!("{s:?}").to_lowercase();
        let checks = match s {
            Suite::Graph => graph_suite()?,
            Suite::Patterns => patterns_suite()?,
            Suite::Dynamics => dynamics_suite()?,
            Suite::Dual => dual_suite()?,
            Suite::Spectral => spectral_suite(inject_fault)?,
            Suite::Mixing => mixing_suite()?,
            Suite::All => unreachable!(),
        };
        for c in checks {
            total += 1;
            println!("{} {label}::{}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            if !c.pass {
                failed.push(format!("{label}::{}", c.name));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > BUDGET_SECS as f64 {
        eprintln!("warning: verification took {secs:.0} s, over the {BUDGET_SECS} s budget");
    }
    if failed.is_empty() {
        println!("{total} checks passed in {secs:.1} s");
    } else {
        println!("{} of {total} checks failed: {}", failed.len(), failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn regression_graphs() -> anyhow::Result<Vec<Graph>> {
    Ok(vec![
        Graph::cycle(9)?,
        Graph::torus(5, 2)?,
        Graph::star(6),
        Graph::path(7),
        Graph::random_connected(20, 0.15, 7),
    ])
}

fn graph_suite() -> anyhow::Result<Vec<Check>> {
    let graphs = regression_graphs()?;
    let mut ball_bad = 0;
    let mut boundary_bad = 0;
    for g in &graphs {
        for v in 0..g.n() {
            let diam = *g.distances_from(v).iter().max().unwrap_or(&0);
            for r in 0..=diam {
                let (a, b) = (g.ball(v, r)?, g.ball(v, r + 1)?);
                ball_bad += usize::from(!a.iter().all(|u| b.binary_search(u).is_ok()));
            }
            ball_bad += usize::from(g.ball(v, diam)?.len() != g.n());
            let inside = g.ball(v, 1)?;
            let outside: Vec<usize> = (0..g.n()).filter(|u| inside.binary_search(u).is_err()).collect();
            boundary_bad += usize::from(g.boundary_edges(&inside) != g.boundary_edges(&outside));
        }
    }
    let mut intra = 0;
    let mut parted = 0;
    for g in &graphs {
        if let Some((a, b)) = g.bipartition()? {
            parted += 1;
            for part in [&a, &b] {
                for &u in part.iter() {
                    intra += part.iter().filter(|&&w| g.has_edge(u, w)).count();
                }
            }
        }
    }
    let torus = Graph::torus(20, 2)?;
    let mut out_of_range = 0;
    let mut found = 0;
    for r_n in 1..5 {
        for alpha in [0.25, 0.5] {
            if let Ok(r) = torus.low_conductance_ball(0, r_n, alpha) {
                found += 1;
                out_of_range += usize::from(r < r_n || r > 2 * r_n);
            }
        }
    }
    Ok(vec![
        Check::new("ball_nesting", ball_bad == 0, format!("{ball_bad} violations over {} graphs", graphs.len())),
        Check::new("boundary_symmetry", boundary_bad == 0, format!("{boundary_bad} mismatches")),
        Check::new(
            "bipartition_parts",
            intra == 0 && parted == 2,
            format!("{intra} intra-part edges, {parted} bipartite graphs (expected 2)"),
        ),
        Check::new("low_conductance_range", out_of_range == 0, format!("{out_of_range} of {found} radii out of range")),
    ])
}

fn patterns_suite() -> anyhow::Result<Vec<Check>> {
    let mut zero_bad = 0;
    let mut swap_bad = 0;
    let mut const_bad = 0;
    for d in 1..=3 {
        let side = 6;
        for q in [2, 3] {
            let zero = lattice_pattern(side, d, q, &vec![0; d])?;
            zero_bad += usize::from(zero != monochromatic(zero.len(), q, 0)?);
        }
        let g = Graph::torus(side, d)?;
        let lat = lattice_pattern(side, d, 2, &vec![1; d])?;
        let alt = alternating(&g, 2)?;
        swap_bad += usize::from(lat != alt && lat != alt.relabel(&[1, 0]));
        let (a, b) = g.bipartition()?.expect("even torus is bipartite");
        for part in [a, b] {
            const_bad += usize::from(part.iter().any(|&v| alt.get(v) != alt.get(part[0])));
        }
    }
    Ok(vec![
        Check::new("zero_vector_is_monochromatic", zero_bad == 0, format!("{zero_bad} mismatches")),
        Check::new("q2_ones_is_alternating", swap_bad == 0, format!("{swap_bad} mismatches")),
        Check::new("alternating_constant_on_parts", const_bad == 0, format!("{const_bad} non-constant parts")),
    ])
}

fn dynamics_suite() -> anyhow::Result<Vec<Check>> {
    let g = Graph::random_connected(8, 0.3, 3);
    let p = params(0.4, 3);
    let mut equiv_bad = 0;
    for seed in 0..20u64 {
        let x0 = uniform_random(8, 3, seed)?;
        let h = EventHistory::generate(&g, &p, 2.0, seed)?;
        for perm in [[1, 2, 0], [0, 2, 1]] {
            let hp = h.relabel_noise(&perm);
            equiv_bad += usize::from(h.replay_forward(&g, &x0).relabel(&perm) != hp.replay_forward(&g, &x0.relabel(&perm)));
        }
    }

    let cycle = Graph::cycle(5)?;
    let p1 = params(1.0, 3);
    let x0 = ColorConfig::new(3, vec![0, 1, 2, 0, 1])?;
    let t = 0.7;
    let reps = 20_000;
    let runs: Vec<ColorConfig> = replicate_seeded(reps, 11, |_, s| run_forward(&cycle, &p1, &x0, t, s))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let e = (-t).exp();
    let mut worst_z: f64 = 0.0;
    for v in 0..5 {
        for c in 0..3 {
            let hits = runs.iter().filter(|y| y.get(v) == c).count();
            let target = (1.0 - e) / 3.0 + e * f64::from(u8::from(x0.get(v) == c));
            let est = Estimate::from_hits(hits, reps);
            worst_z = worst_z.max((est.value - target).abs() / est.stderr);
        }
    }

    let mut worst_res: f64 = 0.0;
    for (g, q) in [(Graph::cycle(8)?, 3), (Graph::random_connected(12, 0.2, 5), 4)] {
        let spec = Spectrum::new(&g)?;
        let p = params(0.35, q);
        let x = uniform_random(g.n(), q, 2)?;
        for l in 0..g.n() {
            for k in 1..q {
                worst_res = worst_res.max(eigenfunction_residual(&g, &p, &spec, l, k, &x)?);
            }
        }
    }
    Ok(vec![
        Check::new("color_permutation_equivariance", equiv_bad == 0, format!("{equiv_bad} of 40 histories differ")),
        Check::new("pure_noise_marginals", worst_z <= 4.0, format!("max deviation {worst_z:.2} sigma")),
        Check::new("one_step_eigenvalue", worst_res <= 1e-9, format!("max residual {worst_res:.2e}")),
    ])
}

fn dual_suite() -> anyhow::Result<Vec<Check>> {
    let g = Graph::cycle(6)?;
    let p = params(0.3, 2);
    let x0 = ColorConfig::new(2, vec![0, 0, 1, 1, 0, 1])?;
    let (t, reps) = (0.8, 40_000);
    let window = |y: &ColorConfig| y.get(0) + 2 * y.get(1) + 4 * y.get(2);
    let fwd: Vec<usize> = replicate_seeded(reps, 21, |_, s| run_forward(&g, &p, &x0, t, s).map(|y| window(&y)))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let bwd: Vec<usize> = replicate_seeded(reps, 22, |_, s| backward_sample(&g, &p, &x0, t, s).map(|y| window(&y)))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let mut worst_z: f64 = 0.0;
    for w in 0..8 {
        let a = Estimate::from_hits(fwd.iter().filter(|&&x| x == w).count(), reps);
        let b = Estimate::from_hits(bwd.iter().filter(|&&x| x == w).count(), reps);
        worst_z = worst_z.max(z_diff(a, b).abs());
    }

    let star = Graph::star(5);
    let mut cftp_bad = 0;
    for seed in 0..20u64 {
        let base = cftp_sample_from(&star, &p, seed, 1)?;
        for e in 2..6 {
            cftp_bad += usize::from(cftp_sample_from(&star, &p, seed, e)? != base);
        }
    }

    let k3 = Graph::complete(3);
    let p3 = params(0.4, 3);
    let samples = sample_stationary(&k3, &p3, 30_000, 5)?;
    let mut exch_z: f64 = 0.0;
    let pairs: Vec<Estimate> = (0..3)
        .map(|c| Estimate::from_hits(samples.iter().filter(|y| y.get(0) == c && y.get(1) == c).count(), samples.len()))
        .collect();
    let singles: Vec<Estimate> =
        (0..3).map(|c| Estimate::from_hits(samples.iter().filter(|y| y.get(2) == c).count(), samples.len())).collect();
    for c in 1..3 {
        exch_z = exch_z.max(z_diff(pairs[c], pairs[0]).abs()).max(z_diff(singles[c], singles[0]).abs());
    }

    let c10 = Graph::cycle(10)?;
    let p10 = params(0.25, 2);
    let mut order_bad = 0;
    let mut prev: Option<Estimate> = None;
    for t in [0.0, 0.5, 1.0, 2.0] {
        let e = coalescence_probs(&c10, &p10, 0, 3, t, 20_000, 9)?;
        order_bad += usize::from(e.p_after.value > e.p_meet.value || e.p_meet.value > 1.0);
        if let Some(prev) = prev {
            order_bad += usize::from(e.p_after.value > prev.value);
        }
        prev = Some(e.p_after);
    }
    Ok(vec![
        Check::new("forward_backward_window", worst_z <= 4.0, format!("max deviation {worst_z:.2} sigma over 8 outcomes")),
        Check::new("cftp_epoch_consistency", cftp_bad == 0, format!("{cftp_bad} of 80 reruns differ")),
        Check::new("cluster_color_exchangeability", exch_z <= 4.0, format!("max deviation {exch_z:.2} sigma")),
        Check::new("p_after_ordering", order_bad == 0, format!("{order_bad} violations over 4 times")),
    ])
}

fn spectral_suite(inject_fault: bool) -> anyhow::Result<Vec<Check>> {
    let spectrum = |g: &Graph| -> anyhow::Result<Spectrum> {
        let s = Spectrum::new(g)?;
        Ok(if inject_fault { s.with_shifted_eigenvalue(1, 1e-3) } else { s })
    };
    let graphs = regression_graphs()?;
    let mut worst_eig: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    for g in &graphs {
        let s = spectrum(g)?;
        worst_eig = worst_eig.max(s.max_residual(g));
        worst_orth = worst_orth.max(s.orthonormality_error());
    }

    let mut worst_closed: f64 = 0.0;
    for (n, q) in [(12, 2), (12, 3), (15, 5)] {
        let g = Graph::cycle(n)?;
        let s = spectrum(&g)?;
        for theta in [0.2, 0.7] {
            let p = params(theta, q);
            let curve = autocorr_curve(&s, &rainbow(n, 1, q)?, &p)?;
            let closed = lattice_pattern_spectrum(1, q, &[1], theta)?.curve;
            for t in [0.1, 1.0, 3.0] {
                worst_closed = worst_closed.max((curve.eval(t, Flavor::A2)? - closed.eval(t, Flavor::A2)?).abs());
            }
        }
    }

    let mut worst_res: f64 = 0.0;
    let mut worst_sandwich: f64 = 0.0;
    let mut worst_global: f64 = 0.0;
    let mut worst_flavor: f64 = 0.0;
    let mut worst_extreme: f64 = 0.0;
    let grid = [0.0, 0.3, 1.0, 2.5];
    for (i, g) in graphs.iter().enumerate() {
        let s = spectrum(g)?;
        let q = 2 + i % 3;
        let theta = 0.15 + 0.15 * i as f64;
        let p = params(theta, q);
        let x = uniform_random(g.n(), q, i as u64)?;
        for l in 0..g.n() {
            for k in 1..q {
                worst_res = worst_res.max(eigenfunction_residual(g, &p, &s, l, k, &x)?);
            }
        }
        let curve = autocorr_curve(&s, &x, &p)?;
        let mono = autocorr_curve(&s, &monochromatic(g.n(), q, 0)?, &p)?;
        let scale = (q - 1) as f64 / q as f64;
        for &t in &grid {
            let a = curve.eval(t, Flavor::A2)?;
            worst_flavor = worst_flavor.max((a - curve.eval(2.0 * t, Flavor::A1)?).abs());
            worst_global = worst_global
                .max(scale * (-(4.0 - 2.0 * theta) * t).exp() - mono.eval(t, Flavor::A2)?)
                .max(a - scale * (-2.0 * theta * t).exp());
            worst_extreme = worst_extreme.max(a - mono.eval(t, Flavor::A2)?);
            for &dt in &grid {
                let ratio = curve.eval(t + dt, Flavor::A2)? - a * (-2.0 * theta * dt).exp();
                let floor = a * (-(4.0 - 2.0 * theta) * dt).exp() - curve.eval(t + dt, Flavor::A2)?;
                worst_sandwich = worst_sandwich.max(ratio).max(floor);
            }
        }
        if g.bipartition()?.is_some() {
            let p2 = params(theta, 2);
            let alt = autocorr_curve(&s, &alternating(g, 2)?, &p2)?;
            let other = autocorr_curve(&s, &uniform_random(g.n(), 2, 40 + i as u64)?, &p2)?;
            for &t in &grid {
                worst_extreme = worst_extreme.max(alt.eval(t, Flavor::A2)? - other.eval(t, Flavor::A2)?);
            }
        }
    }

    let g = Graph::cycle(12)?;
    let p = params(0.5, 3);
    let x0 = uniform_random(12, 3, 1)?;
    let curve = autocorr_curve(&spectrum(&g)?, &x0, &p)?;
    let mut emp_z: f64 = 0.0;
    for (i, t) in [0.3, 1.0].into_iter().enumerate() {
        let e = noisy_voter::mixing::empirical_autocorr(&g, &p, &x0, t, 20_000, 30 + i as u64)?;
        emp_z = emp_z.max((e.value - curve.eval(t, Flavor::A2)?).abs() / e.stderr);
    }
    Ok(vec![
        Check::new("eigenpair_residual", worst_eig <= 1e-9, format!("max residual {worst_eig:.2e}")),
        Check::new("eigenvector_orthonormality", worst_orth <= 1e-9, format!("max error {worst_orth:.2e}")),
        Check::new("rainbow_closed_form", worst_closed <= 1e-8, format!("max error {worst_closed:.2e}")),
        Check::new("eigenfunction_property", worst_res <= 1e-9, format!("max residual {worst_res:.2e}")),
        Check::new("a2_equals_a1_doubled", worst_flavor <= 1e-12, format!("max error {worst_flavor:.2e}")),
        Check::new("submultiplicativity", worst_sandwich <= 1e-12, format!("max violation {worst_sandwich:.2e}")),
        Check::new("global_bounds", worst_global <= 1e-12, format!("max violation {worst_global:.2e}")),
        Check::new("extremality", worst_extreme <= 1e-12, format!("max violation {worst_extreme:.2e}")),
        Check::new("spectral_vs_empirical", emp_z <= 4.0, format!("max deviation {emp_z:.2} sigma")),
    ])
}

fn mixing_suite() -> anyhow::Result<Vec<Check>> {
    let mut worst_marg: f64 = 0.0;
    let mut tv_increase: f64 = 0.0;
    for (seed, (g, q)) in [(Graph::cycle(6)?, 2), (Graph::random_connected(5, 0.3, 4), 3), (Graph::star(4), 2)]
        .into_iter()
        .enumerate()
    {
        let p = params(0.3 + 0.2 * seed as f64, q);
        let x0 = uniform_random(g.n(), q, seed as u64)?;
        let spec = Spectrum::new(&g)?;
        let mu = exact_stationary(&g, &p, 1e-13)?;
        let mut prev = f64::INFINITY;
        for i in 0..8 {
            let t = 0.4 * i as f64;
            let law = exact_distribution(&g, &p, &InitialLaw::Config(x0.clone()), t, DEFAULT_TAIL_TOL)?;
            let spectral = marginals(&spec, &x0, &p, t)?;
            for (a, b) in law.vertex_marginals().probs.iter().flatten().zip(spectral.probs.iter().flatten()) {
                worst_marg = worst_marg.max((a - b).abs());
            }
            let d = tv_distance(&law, &mu)?;
            tv_increase = tv_increase.max(d - prev);
            prev = d;
        }
    }

    let star = Graph::star(3);
    let p = params(0.4, 2);
    let reps = 1_000_000;
    let mu = exact_stationary(&star, &p, 1e-13)?;
    let samples = sample_stationary(&star, &p, reps, 3)?;
    let mut counts = vec![0usize; mu.probs().len()];
    for y in &samples {
        counts[y.encode()] += 1;
    }
    let tv: f64 =
        0.5 * counts.iter().zip(mu.probs()).map(|(&c, m)| (c as f64 / reps as f64 - m).abs()).sum::<f64>();
    let tv_tol = 3.0 * (counts.len() as f64 / (2.0 * reps as f64)).sqrt();

    let g = Graph::cycle(10)?;
    let p = params(0.5, 2);
    let x0 = monochromatic(10, 2, 0)?;
    let spec = Spectrum::new(&g)?;
    let curve = autocorr_curve(&spec, &x0, &p)?;
    let stationary = sample_stationary(&g, &p, 20_000, 41)?;
    let mut r_z: f64 = 0.0;
    for (i, t) in [0.5, 1.0].into_iter().enumerate() {
        let marg = marginals(&spec, &x0, &p, t)?;
        let f = |x: &ColorConfig| statistic_r_auto(&marg, x, &g).expect("shapes agree");
        let at_t = mean_of(&sample_at(&g, &p, &x0, t, 20_000, 42 + i as u64)?, f);
        let under_mu = mean_of(&stationary, f);
        r_z = r_z.max((at_t.value - curve.eval(t, Flavor::A2)?).abs() / at_t.stderr);
        r_z = r_z.max(under_mu.value.abs() / under_mu.stderr);
    }

    let g = Graph::cycle(8)?;
    let p = params(0.4, 3);
    let x0 = uniform_random(8, 3, 6)?;
    let mut gap_z = f64::INFINITY;
    let mut imag_z: f64 = 0.0;
    for gap in covariance_gaps(&g, &p, &x0, 0.5, 20_000, 7)? {
        gap_z = gap_z.min(gap.gap.value / gap.gap.stderr.max(1e-300));
        imag_z = imag_z.max(gap.imag.value.abs() / gap.imag.stderr.max(1e-300));
    }
    Ok(vec![
        Check::new("spectral_marginals_match_exact", worst_marg <= 1e-8, format!("max error {worst_marg:.2e}")),
        Check::new("tv_nonincreasing", tv_increase <= 1e-12, format!("max increase {tv_increase:.2e}")),
        Check::new("cftp_matches_exact_stationary", tv <= tv_tol, format!("TV {tv:.5} vs tolerance {tv_tol:.5}")),
        Check::new("r_auto_means", r_z <= 4.0, format!("max deviation {r_z:.2} sigma")),
        Check::new(
            "covariance_gap_nonnegative",
            gap_z >= -4.0 && imag_z <= 4.0,
            format!("min gap {gap_z:+.2} sigma, max imaginary part {imag_z:.2} sigma"),
        ),
    ])
}
