//! The backward dual: coalescing random walks with killing.
//!
//! Reading the update history from time `t` downwards, the walker started at
//! `v` sits still until its vertex is updated. A noise update kills it (the
//! noise color becomes the color of its whole cluster); a copy update moves
//! it to the copied neighbor. Walkers that meet merge for good.
//!
//! Update histories are generated in backward time ("depth" below the top)
//! in epochs `[0, 1), [1, 2), [2, 4), [4, 8), ...`, each from its own
//! seed-derived stream. Extending a history further into the past therefore
//! never changes the part already generated, which is what coupling from
//! the past requires.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::dynamics::{check_time, ModelParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::patterns::ColorConfig;
use crate::rng::{derive_seed, replicate, replicate_seeded, rng_from_seed, Estimate, SimRng};

/// Epoch `EPOCH_CAP` ends at depth `2^40`.
pub const EPOCH_CAP: u32 = 40;

const NONE: usize = usize::MAX;
const EPOCH_DOMAIN: u64 = 0x5eed_e90c;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Resample to the given color.
    Noise(usize),
    /// Copy the neighbor at this index of the vertex's adjacency list.
    Copy(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub vertex: usize,
    pub kind: EventKind,
}

fn epoch_bounds(epoch: u32) -> (f64, f64) {
    if epoch == 0 {
        (0.0, 1.0)
    } else {
        ((1u64 << (epoch - 1)) as f64, (1u64 << epoch) as f64)
    }
}

/// Lazily generated update events in increasing depth.
struct BackwardStream<'a> {
    g: &'a Graph,
    p: ModelParams,
    seed: u64,
    epoch: u32,
    hi: f64,
    depth: f64,
    rng: SimRng,
}

impl<'a> BackwardStream<'a> {
    fn new(g: &'a Graph, p: &ModelParams, seed: u64) -> Self {
        Self::starting_at(g, p, seed, 0)
    }

    fn starting_at(g: &'a Graph, p: &ModelParams, seed: u64, epoch: u32) -> Self {
        let (lo, hi) = epoch_bounds(epoch);
        BackwardStream {
            g,
            p: *p,
            seed,
            epoch,
            hi,
            depth: lo,
            rng: rng_from_seed(derive_seed(seed ^ EPOCH_DOMAIN, epoch as u64)),
        }
    }

    /// Next `(depth, vertex, kind)`, or `EpochCap` once the history would
    /// extend past depth `2^EPOCH_CAP`.
    fn next_event(&mut self) -> Result<(f64, usize, EventKind)> {
        let n = self.g.n();
        loop {
            let gap: f64 = Exp1.sample(&mut self.rng);
            self.depth += gap / n as f64;
            if self.depth < self.hi {
                break;
            }
            if self.epoch >= EPOCH_CAP {
                return Err(Error::EpochCap(self.hi));
            }
            *self = BackwardStream::starting_at(self.g, &self.p, self.seed, self.epoch + 1);
        }
        let v = self.rng.random_range(0..n);
        let kind = if self.rng.random::<f64>() < self.p.theta() {
            EventKind::Noise(self.rng.random_range(0..self.p.q()))
        } else {
            let d = self.g.degree(v).max(1);
            EventKind::Copy(self.rng.random_range(0..d))
        };
        Ok((self.depth, v, kind))
    }
}

/// The update events in `[0, horizon]`, latest first.
#[derive(Debug, Clone, PartialEq)]
pub struct EventHistory {
    pub horizon: f64,
    pub events: Vec<Event>,
}

impl EventHistory {
    pub fn generate(g: &Graph, p: &ModelParams, horizon: f64, seed: u64) -> Result<EventHistory> {
        check_time(horizon)?;
        let mut events = Vec::new();
        if g.n() > 0 {
            let mut stream = BackwardStream::new(g, p, seed);
            loop {
                let (depth, vertex, kind) = stream.next_event()?;
                if depth > horizon {
                    break;
                }
                events.push(Event { time: horizon - depth, vertex, kind });
            }
        }
        Ok(EventHistory { horizon, events })
    }

    /// Runs the forward dynamics from `x0` through these events.
    pub fn replay_forward(&self, g: &Graph, x0: &ColorConfig) -> ColorConfig {
        let mut colors = x0.colors().to_vec();
        for e in self.events.iter().rev() {
            match e.kind {
                EventKind::Noise(c) => colors[e.vertex] = c,
                EventKind::Copy(j) => {
                    if let Some(&u) = g.neighbors(e.vertex).get(j) {
                        colors[e.vertex] = colors[u];
                    }
                }
            }
        }
        ColorConfig::from_raw(x0.q(), colors)
    }

    /// Runs the coalescing walkers down through these events and reads
    /// `x0` for the clusters that reach time 0.
    pub fn replay_backward(&self, g: &Graph, x0: &ColorConfig) -> ColorConfig {
        let mut walkers = WalkerSystem::new(g.n());
        for e in &self.events {
            walkers.apply(g, e.vertex, e.kind);
        }
        ColorConfig::from_raw(x0.q(), walkers.resolve(Some(x0)))
    }

    /// Applies a color permutation to every noise event.
    pub fn relabel_noise(&self, perm: &[usize]) -> EventHistory {
        let events = self
            .events
            .iter()
            .map(|e| Event {
                kind: match e.kind {
                    EventKind::Noise(c) => EventKind::Noise(perm[c]),
                    k => k,
                },
                ..*e
            })
            .collect();
        EventHistory { horizon: self.horizon, events }
    }
}

/// Coalescing walkers with killing, one per starting vertex; walker ids are
/// the starting vertices. Clusters are tracked by union-find with the
/// lowest walker id as representative.
#[derive(Debug, Clone)]
pub struct WalkerSystem {
    parent: Vec<usize>,
    position: Vec<usize>,
    alive: Vec<bool>,
    death_color: Vec<usize>,
    occupant: Vec<usize>,
    live: usize,
}

impl WalkerSystem {
    pub fn new(n: usize) -> Self {
        WalkerSystem {
            parent: (0..n).collect(),
            position: (0..n).collect(),
            alive: vec![true; n],
            death_color: vec![NONE; n],
            occupant: (0..n).collect(),
            live: n,
        }
    }

    pub fn live_clusters(&self) -> usize {
        self.live
    }

    pub fn cluster_of(&mut self, w: usize) -> usize {
        let mut x = w;
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn position_of(&mut self, w: usize) -> usize {
        let r = self.cluster_of(w);
        self.position[r]
    }

    pub fn is_alive(&mut self, w: usize) -> bool {
        let r = self.cluster_of(w);
        self.alive[r]
    }

    /// Processes one update event at `vertex`.
    pub fn apply(&mut self, g: &Graph, vertex: usize, kind: EventKind) {
        let c = self.occupant[vertex];
        if c == NONE {
            return;
        }
        match kind {
            EventKind::Noise(color) => {
                self.alive[c] = false;
                self.death_color[c] = color;
                self.occupant[vertex] = NONE;
                self.live -= 1;
            }
            EventKind::Copy(j) => {
                let Some(&target) = g.neighbors(vertex).get(j) else {
                    return;
                };
                self.occupant[vertex] = NONE;
                let other = self.occupant[target];
                if other == NONE {
                    self.occupant[target] = c;
                    self.position[c] = target;
                } else {
                    let (keep, drop) = if c < other { (c, other) } else { (other, c) };
                    self.parent[drop] = keep;
                    self.occupant[target] = keep;
                    self.position[keep] = target;
                    self.live -= 1;
                }
            }
        }
    }

    /// Colors of all starting vertices: the death color of a dead cluster,
    /// or `x0` at the current position of a live one.
    ///
    /// # Panics
    /// If a cluster is still alive and `x0` is `None`.
    pub fn resolve(&mut self, x0: Option<&ColorConfig>) -> Vec<usize> {
        (0..self.parent.len())
            .map(|w| {
                let r = self.cluster_of(w);
                if self.alive[r] {
                    x0.expect("live cluster needs an initial condition").get(self.position[r])
                } else {
                    self.death_color[r]
                }
            })
            .collect()
    }
}

/// A sample of `X_t` from `x0`, drawn through the dual.
pub fn backward_sample(g: &Graph, p: &ModelParams, x0: &ColorConfig, t: f64, seed: u64) -> Result<ColorConfig> {
    x0.check_against(g, p.q())?;
    check_time(t)?;
    if g.n() == 0 {
        return Ok(x0.clone());
    }
    let mut walkers = WalkerSystem::new(g.n());
    let mut stream = BackwardStream::new(g, p, seed);
    while walkers.live_clusters() > 0 {
        let (depth, v, kind) = stream.next_event()?;
        if depth > t {
            break;
        }
        walkers.apply(g, v, kind);
    }
    Ok(ColorConfig::from_raw(p.q(), walkers.resolve(Some(x0))))
}

/// An exact sample from the stationary measure by coupling from the past.
pub fn cftp_sample(g: &Graph, p: &ModelParams, seed: u64) -> Result<ColorConfig> {
    cftp_sample_from(g, p, seed, 1)
}

/// CFTP that materializes the first `initial_epochs` epochs of history
/// before running the walkers. The result does not depend on
/// `initial_epochs`.
pub fn cftp_sample_from(g: &Graph, p: &ModelParams, seed: u64, initial_epochs: u32) -> Result<ColorConfig> {
    let initial_epochs = initial_epochs.clamp(1, EPOCH_CAP);
    let mut walkers = WalkerSystem::new(g.n());
    if g.n() == 0 {
        return Ok(ColorConfig::from_raw(p.q(), Vec::new()));
    }
    let (_, first_depth) = epoch_bounds(initial_epochs - 1);
    let history = EventHistory::generate(g, p, first_depth, seed)?;
    for e in &history.events {
        if walkers.live_clusters() == 0 {
            break;
        }
        walkers.apply(g, e.vertex, e.kind);
    }
    if walkers.live_clusters() > 0 {
        let mut stream = BackwardStream::starting_at(g, p, seed, initial_epochs);
        while walkers.live_clusters() > 0 {
            let (_, v, kind) = stream.next_event()?;
            walkers.apply(g, v, kind);
        }
    }
    Ok(ColorConfig::from_raw(p.q(), walkers.resolve(None)))
}

/// `X_t` from `x0` and a stationary `Y` read off one shared history.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSample {
    pub x_t: ColorConfig,
    pub y: ColorConfig,
    /// Whether the vertex's cluster was still alive at time 0.
    pub survived: Vec<bool>,
}

impl CoupledSample {
    pub fn disagreements(&self) -> usize {
        self.x_t.colors().iter().zip(self.y.colors()).filter(|(a, b)| a != b).count()
    }
}

pub fn coupled_sample(g: &Graph, p: &ModelParams, x0: &ColorConfig, t: f64, seed: u64) -> Result<CoupledSample> {
    x0.check_against(g, p.q())?;
    check_time(t)?;
    let n = g.n();
    let mut walkers = WalkerSystem::new(n);
    let mut stream = BackwardStream::new(g, p, seed);
    let mut pending = None;
    while walkers.live_clusters() > 0 {
        let (depth, v, kind) = stream.next_event()?;
        if depth > t {
            pending = Some((v, kind));
            break;
        }
        walkers.apply(g, v, kind);
    }
    let x_t = ColorConfig::from_raw(p.q(), walkers.resolve(Some(x0)));
    let survived: Vec<bool> = (0..n).map(|w| walkers.is_alive(w)).collect();
    if let Some((v, kind)) = pending {
        walkers.apply(g, v, kind);
    }
    while walkers.live_clusters() > 0 {
        let (_, v, kind) = stream.next_event()?;
        walkers.apply(g, v, kind);
    }
    let y = ColorConfig::from_raw(p.q(), walkers.resolve(None));
    Ok(CoupledSample { x_t, y, survived })
}

/// Meeting time of two walkers from `u` and `v` (moving at rate
/// `1 - theta`, killed at rate `theta`), or `None` if one dies first.
pub fn meeting_time(g: &Graph, theta: f64, u: usize, v: usize, rng: &mut SimRng) -> Option<f64> {
    let (mut a, mut b) = (u, v);
    let mut s = 0.0;
    while a != b {
        let gap: f64 = Exp1.sample(rng);
        s += gap / 2.0;
        if rng.random::<f64>() < theta {
            return None;
        }
        let w = if rng.random::<bool>() { &mut a } else { &mut b };
        let nbrs = g.neighbors(*w);
        if !nbrs.is_empty() {
            *w = nbrs[rng.random_range(0..nbrs.len())];
        }
    }
    Some(s)
}

fn meeting_times(g: &Graph, p: &ModelParams, u: usize, v: usize, reps: usize, seed: u64) -> Vec<Option<f64>> {
    replicate(reps, seed, |_, rng| meeting_time(g, p.theta(), u, v, rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalescenceEstimate {
    /// `P(u and v coalesce before dying)`.
    pub p_meet: Estimate,
    /// `P(u and v coalesce, but only after time t)`.
    pub p_after: Estimate,
}

pub fn coalescence_probs(
    g: &Graph,
    p: &ModelParams,
    u: usize,
    v: usize,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<CoalescenceEstimate> {
    g.check_vertex(u)?;
    g.check_vertex(v)?;
    check_time(t)?;
    if u == v {
        return Err(Error::SameVertex(u));
    }
    if reps == 0 {
        return Err(Error::TooFewReplicates { need: 1, got: 0 });
    }
    let taus = meeting_times(g, p, u, v, reps, seed);
    let met = taus.iter().filter(|tau| tau.is_some()).count();
    let after = taus.iter().filter(|tau| matches!(tau, Some(s) if *s > t)).count();
    Ok(CoalescenceEstimate {
        p_meet: Estimate::from_hits(met, reps),
        p_after: Estimate::from_hits(after, reps),
    })
}

/// `h_G(v) = (1/d(v)) sum_{w ~ v} P(v and w coalesce before dying)` for
/// every vertex.
pub fn coalescence_h(g: &Graph, p: &ModelParams, reps: usize, seed: u64) -> Result<Vec<Estimate>> {
    if reps == 0 {
        return Err(Error::TooFewReplicates { need: 1, got: 0 });
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let per_edge: Vec<Estimate> = edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| {
            let taus = meeting_times(g, p, u, v, reps, derive_seed(seed, i as u64));
            Estimate::from_hits(taus.iter().filter(|t| t.is_some()).count(), reps)
        })
        .collect();
    let mut sums = vec![(0.0, 0.0); g.n()];
    for (&(u, v), e) in edges.iter().zip(&per_edge) {
        for w in [u, v] {
            sums[w].0 += e.value;
            sums[w].1 += e.stderr * e.stderr;
        }
    }
    Ok((0..g.n())
        .map(|v| {
            let d = g.degree(v).max(1) as f64;
            Estimate { value: sums[v].0 / d, stderr: sums[v].1.sqrt() / d }
        })
        .collect())
}

/// Edge budget above which `estimate_t_corr` samples edges.
pub const T_CORR_EXHAUSTIVE_EDGES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TCorrEstimate {
    pub t: f64,
    /// `sum_{uv in E} P(u and v coalesce after t)` at the returned time.
    pub sum: Estimate,
    /// The same sum at every grid time.
    pub profile: Vec<Estimate>,
}

/// First grid time where the edge sum of late-coalescence probabilities
/// drops below `sqrt(n)`. Every grid time uses the same meeting times.
pub fn estimate_t_corr(g: &Graph, p: &ModelParams, t_grid: &[f64], reps: usize, seed: u64) -> Result<TCorrEstimate> {
    g.require_connected()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadGrid);
    }
    for &t in t_grid {
        check_time(t)?;
    }
    if reps == 0 {
        return Err(Error::TooFewReplicates { need: 1, got: 0 });
    }
    let all: Vec<(usize, usize)> = g.edges().collect();
    let (edges, scale) = if all.len() <= T_CORR_EXHAUSTIVE_EDGES {
        (all.clone(), 1.0)
    } else {
        let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
        let picked: Vec<_> = (0..T_CORR_EXHAUSTIVE_EDGES).map(|_| all[rng.random_range(0..all.len())]).collect();
        (picked, all.len() as f64 / T_CORR_EXHAUSTIVE_EDGES as f64)
    };
    let taus: Vec<Vec<Option<f64>>> = edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| meeting_times(g, p, u, v, reps, derive_seed(seed, i as u64)))
        .collect();
    let profile: Vec<Estimate> = t_grid
        .iter()
        .map(|&t| {
            let (mut value, mut var) = (0.0, 0.0);
            for edge_taus in &taus {
                let e = Estimate::from_hits(edge_taus.iter().filter(|tau| matches!(tau, Some(s) if *s > t)).count(), reps);
                value += e.value;
                var += e.stderr * e.stderr;
            }
            Estimate { value: value * scale, stderr: var.sqrt() * scale }
        })
        .collect();
    let threshold = (g.n() as f64).sqrt();
    let idx = profile.iter().position(|e| e.value < threshold).ok_or(Error::GridExhausted)?;
    Ok(TCorrEstimate { t: t_grid[idx], sum: profile[idx], profile })
}

/// `pi` restricted to `set` and renormalized.
pub fn pi_restricted(g: &Graph, set: &[usize]) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mask = g.mask(set);
    let vol: f64 = (0..g.n()).filter(|&v| mask[v]).map(|v| g.pi()[v]).sum();
    if vol <= 0.0 {
        return Err(Error::BadStart);
    }
    Ok((0..g.n()).map(|v| if mask[v] { g.pi()[v] / vol } else { 0.0 }).collect())
}

/// Probability that a walk moving at rate `1 - theta` (no killing), started
/// from `start`, stays inside `set` throughout `[0, t]`.
pub fn stay_prob(
    g: &Graph,
    p: &ModelParams,
    set: &[usize],
    t: f64,
    start: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Estimate> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    for &v in set {
        g.check_vertex(v)?;
    }
    check_time(t)?;
    let mask = g.mask(set);
    if start.len() != g.n() || start.iter().enumerate().any(|(v, &w)| w < 0.0 || (w > 0.0 && !mask[v])) {
        return Err(Error::BadStart);
    }
    let total: f64 = start.iter().sum();
    if total <= 0.0 {
        return Err(Error::BadStart);
    }
    if reps == 0 {
        return Err(Error::TooFewReplicates { need: 1, got: 0 });
    }
    let rate = 1.0 - p.theta();
    if rate == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    let cumulative: Vec<f64> = start
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();
    let stayed = replicate(reps, seed, |_, rng| {
        let r: f64 = rng.random();
        let mut v = cumulative.partition_point(|&c| c <= r).min(g.n() - 1);
        while start[v] == 0.0 {
            v -= 1;
        }
        let mut s = 0.0;
        loop {
            let gap: f64 = Exp1.sample(rng);
            s += gap / rate;
            if s > t {
                return true;
            }
            let nbrs = g.neighbors(v);
            if nbrs.is_empty() {
                continue;
            }
            v = nbrs[rng.random_range(0..nbrs.len())];
            if !mask[v] {
                return false;
            }
        }
    });
    Ok(Estimate::from_hits(stayed.into_iter().filter(|&b| b).count(), reps))
}

/// Probability that every walker of the full coalescing system has died
/// within backward time `t`.
pub fn all_dead_prob(g: &Graph, p: &ModelParams, t: f64, reps: usize, seed: u64) -> Result<Estimate> {
    check_time(t)?;
    if reps == 0 {
        return Err(Error::TooFewReplicates { need: 1, got: 0 });
    }
    if g.n() == 0 {
        return Ok(Estimate::exact(1.0));
    }
    let outcomes = replicate_seeded(reps, seed, |_, s| -> Result<bool> {
        let mut walkers = WalkerSystem::new(g.n());
        let mut stream = BackwardStream::new(g, p, s);
        while walkers.live_clusters() > 0 {
            let (depth, v, kind) = stream.next_event()?;
            if depth > t {
                return Ok(false);
            }
            walkers.apply(g, v, kind);
        }
        Ok(true)
    });
    let mut hits = 0;
    for o in outcomes {
        hits += usize::from(o?);
    }
    Ok(Estimate::from_hits(hits, reps))
}
