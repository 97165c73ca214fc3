use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde_json::json;

use noisy_voter::dual::{backward_sample, cftp_sample, coupled_sample};
use noisy_voter::dynamics::run_forward;
use noisy_voter::mixing::{
    empirical_autocorr, exact_distribution, exact_stationary, tv_distance, ExactDistribution, InitialLaw,
    DEFAULT_TAIL_TOL,
};
use noisy_voter::rng::replicate_seeded;
use noisy_voter::spectral::{autocorr_curve, lattice_pattern_spectrum, predicted_tmix, Branch};
use noisy_voter::{AutocorrCurve, ColorConfig, Flavor, Spectrum};

use crate::config::{RunConfig, SampleMode, Start};

const STATIONARY_TOL: f64 = 1e-12;

/// Floats in CSV output: 17 significant digits, no locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_summary(cfg: &RunConfig, command: &str, results: serde_json::Value) -> anyhow::Result<()> {
    let doc = json!({ "command": command, "config": cfg, "results": results });
    write_file(&cfg.out, "summary.json", &(serde_json::to_string_pretty(&doc)? + "\n"))
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Autocorrelation => "autocorrelation",
        Branch::Noise => "noise",
    }
}

pub fn autocorr(cfg: &RunConfig) -> anyhow::Result<()> {
    let (spec, g) = cfg.graph()?;
    let p = cfg.params()?;
    cfg.check_times()?;
    let start = cfg.start(spec, &g, p.q())?;
    let curve = match &start {
        Start::Config(x) => autocorr_curve(&Spectrum::new(&g)?, x, &p)?,
        Start::Uniform => AutocorrCurve::zero(&p, g.n()),
    };
    let mut csv = String::from("gamma_per_chain_time,weight\n");
    for (r, w) in curve.rates().iter().zip(curve.weights()) {
        let _ = writeln!(csv, "{},{}", num(*r), num(*w));
    }
    write_file(&cfg.out, "curve.csv", &csv)?;

    let empirical = cfg.replicates > 0;
    if empirical && matches!(start, Start::Uniform) {
        bail!("empirical autocorrelation needs a concrete initial condition");
    }
    let mut csv = String::from("t_chain_time,a1,a2");
    csv.push_str(if empirical { ",a2_empirical,a2_empirical_stderr\n" } else { "\n" });
    for (i, &t) in cfg.times.iter().enumerate() {
        let _ = write!(csv, "{},{},{}", num(t), num(curve.eval(t, Flavor::A1)?), num(curve.eval(t, Flavor::A2)?));
        if let (true, Start::Config(x)) = (empirical, &start) {
            let seed = noisy_voter::rng::derive_seed(cfg.seed, i as u64);
            let e = empirical_autocorr(&g, &p, x, t, cfg.replicates, seed)?;
            let _ = write!(csv, ",{},{}", num(e.value), num(e.stderr));
        }
        csv.push('\n');
    }
    write_file(&cfg.out, "eval.csv", &csv)?;

    let pred = predicted_tmix(&curve, g.n(), p.theta());
    write_summary(
        cfg,
        "autocorr",
        json!({
            "n": g.n(),
            "t_x0": pred.t_x0,
            "noise_term": pred.noise_term,
            "predicted_tmix": pred.value,
            "branch": branch_name(pred.branch),
        }),
    )
}

pub fn tmix_table(cfg: &RunConfig) -> anyhow::Result<()> {
    let table = cfg.tmix_table.as_ref().context("config is missing `tmix_table`")?;
    if table.patterns.is_empty() || table.thetas.is_empty() {
        bail!("`tmix_table` needs at least one pattern and one theta");
    }
    let mut csv = String::from("v,theta,lambda_star,theta_v,tmix_coefficient_per_log_side\n");
    let mut crossovers = Vec::new();
    for v in &table.patterns {
        let label = v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
        let mut theta_v = None;
        for &theta in &table.thetas {
            let s = lattice_pattern_spectrum(table.d, table.q, v, theta)?;
            theta_v = Some(s.theta_v);
            let _ = writeln!(
                csv,
                "{label},{},{},{},{}",
                num(theta),
                num(s.lambda_star),
                num(s.theta_v),
                num(s.tmix_coefficient())
            );
        }
        crossovers.push(json!({ "v": v, "theta_v": theta_v }));
    }
    write_file(&cfg.out, "table.csv", &csv)?;
    write_summary(cfg, "tmix-table", json!({ "crossovers": crossovers }))
}

fn empirical_law(samples: &[ColorConfig], q: usize, n: usize) -> anyhow::Result<ExactDistribution> {
    let size = ExactDistribution::uniform(q, n)?.probs().len();
    let mut counts = vec![0.0; size];
    for y in samples {
        counts[y.encode()] += 1.0 / samples.len() as f64;
    }
    Ok(ExactDistribution::from_probs(q, n, counts)?)
}

pub fn tv_profile(cfg: &RunConfig) -> anyhow::Result<()> {
    let (spec, g) = cfg.graph()?;
    let p = cfg.params()?;
    cfg.check_times()?;
    let start = cfg.start(spec, &g, p.q())?;
    let (init, curve) = match start {
        Start::Config(x) => {
            let c = autocorr_curve(&Spectrum::new(&g)?, &x, &p)?;
            (InitialLaw::Config(x), c)
        }
        Start::Uniform => {
            g.require_connected()?;
            (InitialLaw::Uniform, AutocorrCurve::zero(&p, g.n()))
        }
    };
    let mu = exact_stationary(&g, &p, STATIONARY_TOL)?;
    let cftp = if cfg.replicates > 0 {
        let samples: Vec<ColorConfig> = replicate_seeded(cfg.replicates, cfg.seed, |_, s| cftp_sample(&g, &p, s))
            .into_iter()
            .collect::<Result<_, _>>()?;
        Some(empirical_law(&samples, p.q(), g.n())?)
    } else {
        None
    };
    let pred = predicted_tmix(&curve, g.n(), p.theta());
    let mut csv = String::from("t_chain_time,d_tv_exact,past_predicted_tmix");
    csv.push_str(if cftp.is_some() { ",d_tv_cftp\n" } else { "\n" });
    for &t in &cfg.times {
        let law = exact_distribution(&g, &p, &init, t, DEFAULT_TAIL_TOL)?;
        let _ = write!(csv, "{},{},{}", num(t), num(tv_distance(&law, &mu)?), u8::from(t >= pred.value));
        if let Some(emp) = &cftp {
            let _ = write!(csv, ",{}", num(tv_distance(&law, emp)?));
        }
        csv.push('\n');
    }
    write_file(&cfg.out, "profile.csv", &csv)?;
    let mut results = json!({
        "n": g.n(),
        "predicted_tmix": pred.value,
        "branch": branch_name(pred.branch),
    });
    if let Some(emp) = &cftp {
        results["cftp_tv_to_stationary"] = json!(tv_distance(emp, &mu)?);
    }
    write_summary(cfg, "tv-profile", results)
}

fn pack(x: &ColorConfig) -> String {
    if x.q() <= 10 {
        x.colors().iter().map(|c| char::from(b'0' + *c as u8)).collect()
    } else {
        x.colors().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(".")
    }
}

pub fn sample(cfg: &RunConfig) -> anyhow::Result<()> {
    let s = cfg.sample.as_ref().context("config is missing `sample`")?;
    let (spec, g) = cfg.graph()?;
    let p = cfg.params()?;
    let needs_start = s.mode != SampleMode::Cftp;
    let x0 = if needs_start {
        match cfg.start(spec, &g, p.q())? {
            Start::Config(x) => Some(x),
            Start::Uniform => bail!("sampling from time t needs a concrete initial condition"),
        }
    } else {
        None
    };
    let mode = match s.mode {
        SampleMode::Forward => "forward",
        SampleMode::Backward => "backward",
        SampleMode::Cftp => "cftp",
        SampleMode::Coupled => "coupled",
    };
    let mut csv = format!("# seed={} mode={mode} t={} n={} q={}\n", cfg.seed, num(s.t), g.n(), p.q());
    let rows: Vec<String> = replicate_seeded(s.reps, cfg.seed, |k, seed| -> noisy_voter::Result<String> {
        Ok(match s.mode {
            SampleMode::Forward => format!("{k},{}", pack(&run_forward(&g, &p, x0.as_ref().unwrap(), s.t, seed)?)),
            SampleMode::Backward => format!("{k},{}", pack(&backward_sample(&g, &p, x0.as_ref().unwrap(), s.t, seed)?)),
            SampleMode::Cftp => format!("{k},{}", pack(&cftp_sample(&g, &p, seed)?)),
            SampleMode::Coupled => {
                let c = coupled_sample(&g, &p, x0.as_ref().unwrap(), s.t, seed)?;
                let agree: String =
                    c.x_t.colors().iter().zip(c.y.colors()).map(|(a, b)| if a == b { '1' } else { '0' }).collect();
                format!("{k},{},{},{agree}", pack(&c.x_t), pack(&c.y))
            }
        })
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    csv.push_str(if s.mode == SampleMode::Coupled { "replicate,x_t,y,agree\n" } else { "replicate,config\n" });
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    write_file(&cfg.out, "samples.csv", &csv)?;
    write_summary(cfg, "sample", json!({ "rows": s.reps }))
}
