use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use noisy_voter::patterns::{self, ColorConfig};
use noisy_voter::{Graph, ModelParams};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Torus { side: usize, dim: usize },
    Cycle { n: usize },
    Complete { n: usize },
    Star { leaves: usize },
    Path { n: usize },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self) -> anyhow::Result<Graph> {
        Ok(match self {
            GraphSpec::Torus { side, dim } => Graph::torus(*side, *dim)?,
            GraphSpec::Cycle { n } => Graph::cycle(*n)?,
            GraphSpec::Complete { n } => Graph::complete(*n),
            GraphSpec::Star { leaves } => Graph::star(*leaves),
            GraphSpec::Path { n } => Graph::path(*n),
            GraphSpec::EdgeList { path } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Graph::parse_edge_list(&text)?
            }
        })
    }

    /// `(side, dim)` when the graph is a torus, for the lattice patterns.
    fn lattice_shape(&self) -> Option<(usize, usize)> {
        match *self {
            GraphSpec::Torus { side, dim } => Some((side, dim)),
            GraphSpec::Cycle { n } => Some((n, 1)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Monochromatic {
        #[serde(default)]
        color: usize,
    },
    Alternating,
    Rainbow,
    Knight,
    Lattice { v: Vec<usize> },
    Random { seed: u64 },
    File { path: PathBuf },
    Uniform,
}

/// A concrete initial condition or the uniform distribution.
pub enum Start {
    Config(ColorConfig),
    Uniform,
}

impl InitSpec {
    pub fn build(&self, graph: &GraphSpec, g: &Graph, q: usize) -> anyhow::Result<Start> {
        let lattice = || graph.lattice_shape().context("lattice patterns need a torus or cycle graph");
        let x = match self {
            InitSpec::Monochromatic { color } => patterns::monochromatic(g.n(), q, *color)?,
            InitSpec::Alternating => patterns::alternating(g, q)?,
            InitSpec::Rainbow => {
                let (side, dim) = lattice()?;
                patterns::rainbow(side, dim, q)?
            }
            InitSpec::Knight => {
                let (side, dim) = lattice()?;
                patterns::knight(side, dim, q)?
            }
            InitSpec::Lattice { v } => {
                let (side, dim) = lattice()?;
                patterns::lattice_pattern(side, dim, q, v)?
            }
            InitSpec::Random { seed } => patterns::uniform_random(g.n(), q, *seed)?,
            InitSpec::File { path } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ColorConfig::parse_text(&text)?
            }
            InitSpec::Uniform => return Ok(Start::Uniform),
        };
        if x.q() != q || x.len() != g.n() {
            bail!("initial condition has {} sites and q = {}, expected {} sites and q = {q}", x.len(), x.q(), g.n());
        }
        Ok(Start::Config(x))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Forward,
    Backward,
    Cftp,
    Coupled,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub mode: SampleMode,
    #[serde(default)]
    pub t: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub d: usize,
    pub q: usize,
    pub patterns: Vec<Vec<usize>>,
    pub thetas: Vec<f64>,
}

/// One experiment. Command-line flags override `seed`, `out` and
/// `threads`; the resolved document is written back into `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    #[serde(default)]
    pub times: Vec<f64>,
    /// Monte-Carlo replicates for the optional empirical columns.
    #[serde(default)]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmix_table: Option<TableSpec>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph: None,
            theta: None,
            q: None,
            init: None,
            times: Vec::new(),
            replicates: 0,
            seed: 0,
            out: default_out(),
            threads: None,
            sample: None,
            tmix_table: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
        // summary.json wraps the config under "config"; accept it directly
        let value: serde_json::Value = serde_json::from_str(text)?;
        let inner = match value.get("config") {
            Some(c) if value.get("command").is_some() => c.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(inner)?)
    }

    pub fn graph(&self) -> anyhow::Result<(&GraphSpec, Graph)> {
        let spec = self.graph.as_ref().context("config is missing `graph`")?;
        Ok((spec, spec.build()?))
    }

    pub fn params(&self) -> anyhow::Result<ModelParams> {
        let theta = self.theta.context("config is missing `theta`")?;
        let q = self.q.context("config is missing `q`")?;
        Ok(ModelParams::new(theta, q)?)
    }

    pub fn start(&self, spec: &GraphSpec, g: &Graph, q: usize) -> anyhow::Result<Start> {
        self.init.as_ref().context("config is missing `init`")?.build(spec, g, q)
    }

    pub fn check_times(&self) -> anyhow::Result<()> {
        if self.times.is_empty() {
            bail!("config needs a non-empty `times` list");
        }
        if let Some(t) = self.times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            bail!("time {t} is not a finite nonnegative number");
        }
        Ok(())
    }
}
