mod common;

use noisy_voter::dual::{coalescence_h, coalescence_probs, estimate_t_corr};
use noisy_voter::mixing::{
    exact_distribution, exact_stationary, sample_stationary, tv_distance, ExactDistribution, InitialLaw,
    DEFAULT_TAIL_TOL,
};
use noisy_voter::patterns::{monochromatic, uniform_random};
use noisy_voter::spectral::{marginals, stationary_variance};
use noisy_voter::{ColorConfig, Estimate, Graph, ModelParams, Spectrum};

fn params(theta: f64, q: usize) -> ModelParams {
    ModelParams::new(theta, q).unwrap()
}

#[test]
fn dense_generator_matches_uniformization() {
    for (seed, q) in [(1u64, 2usize), (2, 3)] {
        let g = Graph::random_connected(5, 0.3, seed);
        let edges: Vec<_> = g.edges().collect();
        let p = params(0.35, q);
        let x0 = uniform_random(5, q, seed).unwrap();
        let gen = common::voter_generator(5, &edges, q, 0.35);
        for t in [0.3, 1.7] {
            let row = &common::expm(&gen, t)[x0.encode()];
            let law = exact_distribution(&g, &p, &InitialLaw::Config(x0.clone()), t, DEFAULT_TAIL_TOL).unwrap();
            for (a, b) in row.iter().zip(law.probs()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn k2_law_and_marginals() {
    let g = Graph::complete(2);
    let p = params(0.5, 2);
    let x0 = ColorConfig::new(2, vec![0, 1]).unwrap();
    let law = exact_distribution(&g, &p, &InitialLaw::Config(x0.clone()), 1.0, DEFAULT_TAIL_TOL).unwrap();
    let oracle = &common::expm(&common::voter_generator(2, &[(0, 1)], 2, 0.5), 1.0)[x0.encode()];
    for i in 0..4 {
        assert!((law.probs()[i] - oracle[i]).abs() < 1e-9);
        assert!((law.probs()[i] - common::K2_LAW_T1[i]).abs() < 1e-8);
    }
    let spectral = marginals(&Spectrum::new(&g).unwrap(), &x0, &p, 1.0).unwrap();
    let exact = law.vertex_marginals();
    for v in 0..2 {
        for c in 0..2 {
            assert!((spectral.probs[v][c] - exact.probs[v][c]).abs() < 1e-9);
        }
    }
}

#[test]
fn stationary_agreement_on_c6() {
    let g = Graph::cycle(6).unwrap();
    let mu = exact_stationary(&g, &params(0.5, 2), 1e-13).unwrap();
    let agree: f64 = (0..64).filter(|i| i & 1 == (i >> 1) & 1).map(|i| mu.probs()[i]).sum();
    assert!((agree - common::C6_STATIONARY_AGREE).abs() < 1e-10);
}

#[test]
fn c6_tv_profile() {
    let g = Graph::cycle(6).unwrap();
    let p = params(0.5, 2);
    let mu = exact_stationary(&g, &p, 1e-13).unwrap();
    let x0 = monochromatic(6, 2, 0).unwrap();
    let mut prev = f64::INFINITY;
    for (i, frozen) in common::C6_MONO_TV.iter().enumerate() {
        let t = 0.5 * i as f64;
        let law = exact_distribution(&g, &p, &InitialLaw::Config(x0.clone()), t, DEFAULT_TAIL_TOL).unwrap();
        let d = tv_distance(&law, &mu).unwrap();
        assert!((d - frozen).abs() < 1e-9, "t = {t}: {d} vs {frozen}");
        assert!(d < prev);
        prev = d;
    }
    assert!(prev < 0.05);
}

#[test]
fn pure_noise_tv_closed_form() {
    let g = Graph::cycle(4).unwrap();
    let p = params(1.0, 2);
    let x0 = ColorConfig::new(2, vec![0, 1, 1, 0]).unwrap();
    let uniform = ExactDistribution::uniform(2, 4).unwrap();
    for t in [0.2, 1.0, 2.5] {
        let law = exact_distribution(&g, &p, &InitialLaw::Config(x0.clone()), t, DEFAULT_TAIL_TOL).unwrap();
        let e = (-t).exp();
        let (hit, miss) = ((1.0 - e) / 2.0 + e, (1.0 - e) / 2.0);
        // product law: j sites disagree with x0
        let tv: f64 = (0..=4)
            .map(|j| {
                let binom = [1.0, 4.0, 6.0, 4.0, 1.0][j];
                binom * (hit.powi(4 - j as i32) * miss.powi(j as i32) - 1.0 / 16.0).abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!((tv_distance(&law, &uniform).unwrap() - tv).abs() < 1e-9);
    }
}

#[test]
fn uniform_start_is_average_of_point_masses() {
    let g = Graph::path(3);
    let p = params(0.4, 2);
    let avg: Vec<f64> = {
        let mut acc = vec![0.0; 8];
        for idx in 0..8 {
            let x = ColorConfig::decode(2, 3, idx);
            let law = exact_distribution(&g, &p, &InitialLaw::Config(x), 0.8, DEFAULT_TAIL_TOL).unwrap();
            for (a, b) in acc.iter_mut().zip(law.probs()) {
                *a += b / 8.0;
            }
        }
        acc
    };
    let law = exact_distribution(&g, &p, &InitialLaw::Uniform, 0.8, DEFAULT_TAIL_TOL).unwrap();
    for (a, b) in avg.iter().zip(law.probs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn pair_chain_matches_two_walkers() {
    let g = Graph::cycle(16).unwrap();
    let p = params(0.5, 2);
    for (i, t) in [0.0, 0.5, 1.0, 1.5, 2.0].into_iter().enumerate() {
        let (by_t, ever) = common::cycle_pair_meeting(16, 0.5, t);
        assert!((ever - by_t - common::C16_P_AFTER[i]).abs() < 1e-9);
        let e = coalescence_probs(&g, &p, 3, 4, t, 200_000, 40 + i as u64).unwrap();
        assert!(e.p_after.within(ever - by_t, 4.0), "t = {t}: {:?}", e.p_after);
        assert!(e.p_meet.within(ever, 4.0));
    }
}

#[test]
fn t_corr_on_c16() {
    let g = Graph::cycle(16).unwrap();
    let p = params(0.5, 2);
    let grid = [0.0, 0.25, 0.5, 1.0];
    let est = estimate_t_corr(&g, &p, &grid, 50_000, 12).unwrap();
    // 16 p_after(0) is about 4.29 > sqrt(16), and it drops below 4 right away
    assert_eq!(est.t, 0.25);
    for (i, &t) in grid.iter().enumerate() {
        let (by_t, ever) = common::cycle_pair_meeting(16, 0.5, t);
        assert!(est.profile[i].within(16.0 * (ever - by_t), 4.0));
    }
}

#[test]
fn variance_identity_on_k2() {
    let g = Graph::complete(2);
    let p = params(0.5, 2);
    let spec = Spectrum::new(&g).unwrap();
    let h = coalescence_h(&g, &p, 200_000, 3).unwrap();
    let var = stationary_variance(&g, &p, &spec, 1, 1, &h).unwrap();
    assert!(var.lower <= var.value.value && var.value.value <= var.upper);
    // Psi for lambda = -1 is (Y(0)^1 - Y(1)^1) / 2 in {0, +-1}
    let samples = sample_stationary(&g, &p, 1_000_000, 8).unwrap();
    let sq: Vec<f64> = samples.iter().map(|y| f64::from(u8::from(y.get(0) != y.get(1)))).collect();
    let emp = Estimate::from_samples(&sq);
    let se = (emp.stderr.powi(2) + var.value.stderr.powi(2)).sqrt();
    assert!((emp.value - var.value.value).abs() <= 4.0 * se, "{emp:?} vs {:?}", var.value);
}
