//! Bernoulli bond percolation on windows and the ray-decoration process on
//! fixed-end trees.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use bitvec::prelude::*;
use num_traits::Zero;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::graphs::{
    ball, measure_ratio, Address, FamilyKind, GraphFamily, HoroAddr, VertexRef, Window, WindowKind,
};
use crate::network::{self, ConductanceResult, Network};
use crate::rng::{self, KeyedHash};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p = {p} is not in [0, 1]")))
    }
}

/// One uniform per window edge; thresholding at `p` gives the coupled
/// configurations for every `p`.
#[derive(Clone, Debug)]
pub struct EdgeCoupling {
    pub window: Arc<Window>,
    pub seed: u64,
    pub trial: u64,
    pub uniforms: Vec<f64>,
}

impl EdgeCoupling {
    pub fn new(window: Arc<Window>, seed: u64, trial: u64) -> Self {
        let uniforms = rng::edge_uniforms(seed, trial, window.edges.len());
        EdgeCoupling {
            window,
            seed,
            trial,
            uniforms,
        }
    }

    pub fn config(&self, p: f64) -> Result<Config> {
        check_p(p)?;
        Ok(Config {
            window: self.window.clone(),
            p,
            seed: self.seed,
            trial: self.trial,
            open: self.uniforms.iter().map(|&u| u < p).collect(),
        })
    }
}

/// A percolation sample over the edges of a window.
#[derive(Clone, Debug)]
pub struct Config {
    pub window: Arc<Window>,
    pub p: f64,
    pub seed: u64,
    pub trial: u64,
    pub open: BitVec,
}

pub fn sample_config(window: Arc<Window>, p: f64, seed: u64) -> Result<Config> {
    sample_config_trial(window, p, seed, 0)
}

pub fn sample_config_trial(window: Arc<Window>, p: f64, seed: u64, trial: u64) -> Result<Config> {
    EdgeCoupling::new(window, seed, trial).config(p)
}

impl Config {
    /// Configuration with every edge in the given state.
    pub fn constant(window: Arc<Window>, open: bool) -> Config {
        let n = window.edges.len();
        Config {
            window,
            p: if open { 1.0 } else { 0.0 },
            seed: 0,
            trial: 0,
            open: BitVec::repeat(open, n),
        }
    }

    pub fn is_open(&self, edge: usize) -> bool {
        self.open[edge]
    }

    pub fn open_count(&self) -> usize {
        self.open.count_ones()
    }

    /// Vertices of the open cluster of `start` in BFS order.
    pub fn cluster_of(&self, start: usize) -> Vec<usize> {
        open_bfs(&self.window, start, |e| self.open[e])
    }

    /// Run lengths of alternating closed/open edges, starting with closed.
    pub fn run_lengths(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut state = false;
        let mut len = 0;
        for bit in self.open.iter().by_vals() {
            if bit == state {
                len += 1;
            } else {
                runs.push(len);
                state = bit;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ConfigDoc {
            version: CONFIG_FORMAT_VERSION,
            family: self.window.family.kind.clone(),
            center: self.window.center.clone(),
            kind: self.window.kind,
            p: self.p,
            seed: self.seed,
            trial: self.trial,
            n_edges: self.open.len(),
            open_runs: self.run_lengths(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Restores a configuration exported by [`to_json`](Self::to_json)
    /// onto the matching window.
    pub fn from_json(window: Arc<Window>, text: &str) -> Result<Config> {
        let doc: ConfigDoc = serde_json::from_str(text)?;
        if doc.version != CONFIG_FORMAT_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported config format version {}",
                doc.version
            )));
        }
        if doc.family != window.family.kind
            || doc.center != window.center
            || doc.kind != window.kind
            || doc.n_edges != window.edges.len()
        {
            return Err(Error::Parameter("config does not match the window".into()));
        }
        let mut open = BitVec::with_capacity(doc.n_edges);
        let mut state = false;
        for run in doc.open_runs {
            open.extend(std::iter::repeat_n(state, run));
            state = !state;
        }
        if open.len() != doc.n_edges {
            return Err(Error::Parameter(
                "run lengths do not cover the edges".into(),
            ));
        }
        Ok(Config {
            window,
            p: doc.p,
            seed: doc.seed,
            trial: doc.trial,
            open,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    version: u32,
    family: FamilyKind,
    center: VertexRef,
    kind: WindowKind,
    p: f64,
    seed: u64,
    trial: u64,
    n_edges: usize,
    open_runs: Vec<usize>,
}

fn open_bfs(win: &Window, start: usize, open: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut seen = vec![false; win.len()];
    seen[start] = true;
    let mut out = vec![start];
    let mut head = 0;
    while head < out.len() {
        let x = out[head];
        head += 1;
        for &(y, e) in win.adjacent(x) {
            if !seen[y] && open(e) {
                seen[y] = true;
                out.push(y);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Smallest vertex index in the cluster.
    pub root: usize,
    pub size: usize,
    pub boundary_touch: bool,
    pub min_level: i64,
    pub max_level: i64,
}

#[derive(Clone, Debug)]
pub struct ClusterDecomposition {
    /// Canonical root (smallest member index) of each vertex's cluster.
    pub root: Vec<usize>,
    /// Position of each vertex's cluster in `clusters`.
    pub cluster_index: Vec<usize>,
    /// Clusters ordered by root.
    pub clusters: Vec<ClusterStats>,
}

impl ClusterDecomposition {
    pub fn connected(&self, u: usize, v: usize) -> bool {
        self.root[u] == self.root[v]
    }

    pub fn cluster_of(&self, v: usize) -> &ClusterStats {
        &self.clusters[self.cluster_index[v]]
    }
}

pub fn clusters(cfg: &Config) -> ClusterDecomposition {
    let win = &cfg.window;
    let n = win.len();
    let mut uf = UnionFind::<usize>::new(n);
    for (e, edge) in win.edges.iter().enumerate() {
        if cfg.open[e] {
            uf.union(edge.u, edge.v);
        }
    }
    let labels = uf.into_labeling();
    let mut min_member: HashMap<usize, usize> = HashMap::new();
    for (v, &l) in labels.iter().enumerate() {
        min_member.entry(l).or_insert(v);
    }
    let root: Vec<usize> = labels.iter().map(|l| min_member[l]).collect();
    let mut cluster_index = vec![usize::MAX; n];
    let mut clusters: Vec<ClusterStats> = Vec::new();
    for v in 0..n {
        let r = root[v];
        let k = if r == v {
            clusters.push(ClusterStats {
                root: v,
                size: 0,
                boundary_touch: false,
                min_level: i64::MAX,
                max_level: i64::MIN,
            });
            clusters.len() - 1
        } else {
            cluster_index[r]
        };
        cluster_index[v] = k;
        let c = &mut clusters[k];
        let level = win.vertices[v].level;
        c.size += 1;
        c.boundary_touch |= win.is_boundary(v);
        c.min_level = c.min_level.min(level);
        c.max_level = c.max_level.max(level);
    }
    ClusterDecomposition {
        root,
        cluster_index,
        clusters,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub se: f64,
    pub hits: u64,
    pub trials: u64,
}

impl Estimate {
    fn from_hits(hits: u64, trials: u64) -> Self {
        let p_hat = hits as f64 / trials as f64;
        Estimate {
            p_hat,
            se: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            hits,
            trials,
        }
    }
}

/// Smallest ball around `x` containing `y`, enlarged by `margin`.
fn covering_ball(g: &GraphFamily, x: &VertexRef, y: &VertexRef, margin: u32) -> Result<Window> {
    g.validate(y)?;
    let mut r = 0;
    loop {
        let w = ball(g, x, r)?;
        if let Some(i) = w.index_of(y) {
            let d = w.distance(i);
            return if margin == 0 {
                Ok(w)
            } else {
                ball(g, x, d + margin)
            };
        }
        r += 1;
    }
}

/// Monte Carlo estimate of `P_p(x ↔ y)` inside a ball around `x`.
///
/// Connections leaving the ball are not seen, so this is a lower-bound
/// estimator with free boundary conditions. Trial `t` uses the edge stream
/// `(seed, t)`.
pub fn connectivity_estimate(
    g: &GraphFamily,
    p: f64,
    x: &VertexRef,
    y: &VertexRef,
    trials: u64,
    seed: u64,
    margin: u32,
) -> Result<Estimate> {
    check_p(p)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let win = covering_ball(g, x, y, margin)?;
    let target = win.index_of(y).expect("covering ball contains y");
    let rows = decay_hits(&win, p, &[target], trials, seed);
    Ok(Estimate::from_hits(rows[0], trials))
}

/// Number of trials in which the center connects to each target.
fn decay_hits(win: &Window, p: f64, targets: &[usize], trials: u64, seed: u64) -> Vec<u64> {
    let n_edges = win.edges.len();
    (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; targets.len()],
            |mut acc, t| {
                let uniforms = rng::edge_uniforms(seed, t, n_edges);
                let cluster = open_bfs(win, 0, |e| uniforms[e] < p);
                let mut member = vec![false; win.len()];
                for v in cluster {
                    member[v] = true;
                }
                for (k, &tgt) in targets.iter().enumerate() {
                    acc[k] += member[tgt] as u64;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; targets.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub target: VertexRef,
    pub distance: u32,
    pub p_hat: f64,
    pub se: f64,
    pub n_trials: u64,
    /// Running minimum of `p_hat` up to this row.
    pub running_min: f64,
}

/// Connectivity from `o` to each target, with all targets sharing the
/// trial configurations.
pub fn decay_curve(
    g: &GraphFamily,
    p: f64,
    o: &VertexRef,
    targets: &[VertexRef],
    trials: u64,
    seed: u64,
    margin: u32,
) -> Result<Vec<DecayRow>> {
    check_p(p)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let Some(far) = targets.last() else {
        return Ok(Vec::new());
    };
    let mut win = covering_ball(g, o, far, 0)?;
    let mut idx = Vec::with_capacity(targets.len());
    let max_d = targets
        .iter()
        .map(|t| {
            win.index_of(t)
                .map(|i| win.distance(i))
                .ok_or_else(|| Error::Precondition("targets must be sorted by distance".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    for w in max_d.windows(2) {
        if w[0] > w[1] {
            return Err(Error::Precondition(
                "targets must be sorted by distance".into(),
            ));
        }
    }
    if margin > 0 {
        win = ball(g, o, max_d.last().unwrap() + margin)?;
    }
    for t in targets {
        idx.push(win.index_of(t).unwrap());
    }
    let hits = decay_hits(&win, p, &idx, trials, seed);
    let mut running = f64::INFINITY;
    Ok(targets
        .iter()
        .zip(max_d)
        .zip(hits)
        .map(|((t, d), h)| {
            let est = Estimate::from_hits(h, trials);
            running = running.min(est.p_hat);
            DecayRow {
                target: t.clone(),
                distance: d,
                p_hat: est.p_hat,
                se: est.se,
                n_trials: trials,
                running_min: running,
            }
        })
        .collect())
}

/// Exact partial sums `Σ_{x ∈ C(o), d(o,x) ≤ R} m(x)/m(o)` for each radius.
pub fn tilted_mass(cfg: &Config, o: usize, radii: &[u32]) -> Result<Vec<Rational>> {
    let win = &cfg.window;
    if o >= win.len() {
        return Err(Error::Precondition("vertex is not in the window".into()));
    }
    if let WindowKind::Ball { radius } = win.kind {
        let reach = radius.saturating_sub(win.distance(o));
        if let Some(&r) = radii.iter().find(|&&r| r > reach) {
            return Err(Error::Precondition(format!(
                "radius {r} exceeds the window around the vertex ({reach})"
            )));
        }
    }
    let dist = if o == 0 {
        win.distances().iter().map(|&d| Some(d)).collect()
    } else {
        win.distances_from(o)
    };
    let g = &win.family;
    let ov = &win.vertices[o];
    let mut sums = vec![Rational::zero(); radii.len()];
    for x in cfg.cluster_of(o) {
        let d = dist[x].expect("cluster members are reachable");
        let ratio = measure_ratio(g, ov, &win.vertices[x]);
        for (k, &r) in radii.iter().enumerate() {
            if d <= r {
                sums[k] += &ratio;
            }
        }
    }
    Ok(sums)
}

/// The ray-decoration process on a fixed-end tree, evaluated lazily.
///
/// In `ω₁` every vertex keeps the edge to exactly one of its offspring,
/// chosen uniformly. An offspring edge `(x, y)` outside `ω₁` joins `ω₂`
/// with probability `2^-(n+1)`, where `n` is the distance from `x` up to the
/// top of its `ω₁` ray.
#[derive(Clone, Copy, Debug)]
pub struct RayDecoration {
    b: u32,
    hash: KeyedHash,
}

const RAY_CHOICE_SALT: u64 = 0;
const RAY_INSERT_SALT: u64 = 1;
const RAY_HASH_TAG: u64 = 0x7261_7964_6563_6f72;
/// Ray tops further than this are treated as this far (probability `b^-4096`).
const RAY_CLIMB_CAP: u32 = 4096;

impl RayDecoration {
    pub fn new(g: &GraphFamily, seed: u64) -> Result<Self> {
        match g.kind {
            FamilyKind::FixedEndTree { b } => Ok(RayDecoration {
                b,
                hash: KeyedHash::new(seed, RAY_HASH_TAG),
            }),
            ref other => Err(Error::Unsupported(format!(
                "ray decoration needs a fixed-end tree, got {other}"
            ))),
        }
    }

    fn key(h: &HoroAddr) -> Address {
        Address::Horo(h.clone())
    }

    /// Offspring index kept by `x` in `ω₁`.
    pub fn choice(&self, x: &HoroAddr) -> u32 {
        self.hash.index(&Self::key(x), RAY_CHOICE_SALT, self.b)
    }

    /// Whether the edge from `y` to its parent is in `ω₁`.
    pub fn in_omega1(&self, y: &HoroAddr) -> bool {
        self.choice(&y.parent()) == y.child_index()
    }

    /// Distance from `x` to the top of its `ω₁` ray; the path climbed is
    /// passed to `visit`.
    pub fn ray_height(&self, x: &HoroAddr, mut visit: impl FnMut(&HoroAddr)) -> u32 {
        let mut cur = x.clone();
        let mut n = 0;
        while n < RAY_CLIMB_CAP && self.in_omega1(&cur) {
            cur = cur.parent();
            visit(&cur);
            n += 1;
        }
        n
    }

    /// Whether the edge from `y` to its parent is in `ω₂`.
    pub fn in_omega2(&self, y: &HoroAddr) -> bool {
        if self.in_omega1(y) {
            return true;
        }
        let n = self.ray_height(&y.parent(), |_| {});
        self.insertion_draw(y) < insertion_probability(n)
    }

    fn insertion_draw(&self, y: &HoroAddr) -> f64 {
        self.hash.unit(&Self::key(y), RAY_INSERT_SALT)
    }
}

pub fn insertion_probability(n: u32) -> f64 {
    0.5f64.powi(n as i32 + 1)
}

fn horo(v: &VertexRef) -> &HoroAddr {
    match &v.address {
        Address::Horo(h) => h,
        _ => unreachable!("fixed-end tree vertices carry horocycle addresses"),
    }
}

#[derive(Clone, Debug)]
pub struct RaySample {
    pub omega1: BitVec,
    pub omega2: BitVec,
    /// Ray height `n` of the upper endpoint, for offspring edges not in `ω₁`.
    pub heights: Vec<Option<u32>>,
    /// Edges whose ray top lies outside the window.
    pub censored: BitVec,
}

impl RaySample {
    /// `ω₁` offspring edges of each window vertex whose offspring all lie
    /// in the window.
    pub fn omega1_out_degrees(&self, win: &Window) -> Vec<Option<usize>> {
        (0..win.len())
            .map(|v| {
                let down: Vec<usize> = win
                    .adjacent(v)
                    .iter()
                    .filter(|&&(y, _)| win.vertices[y].level < win.vertices[v].level)
                    .map(|&(_, e)| e)
                    .collect();
                let full = down.len() == win.family.degree(&win.vertices[v]) - 1;
                full.then(|| down.iter().filter(|&&e| self.omega1[e]).count())
            })
            .collect()
    }
}

/// `ω₁` and `ω₂` restricted to the edges of a ball in a fixed-end tree.
pub fn ray_decoration_sample(win: &Window, seed: u64) -> Result<RaySample> {
    let process = RayDecoration::new(&win.family, seed)?;
    if !matches!(win.kind, WindowKind::Ball { .. }) {
        return Err(Error::Precondition(
            "ray decoration needs a ball window".into(),
        ));
    }
    let m = win.edges.len();
    let mut omega1 = BitVec::repeat(false, m);
    let mut omega2 = BitVec::repeat(false, m);
    let mut censored = BitVec::repeat(false, m);
    let mut heights = vec![None; m];
    for (e, edge) in win.edges.iter().enumerate() {
        let (a, b) = (&win.vertices[edge.u], &win.vertices[edge.v]);
        let (parent, child) = if a.level > b.level { (a, b) } else { (b, a) };
        let child = horo(child);
        if process.in_omega1(child) {
            omega1.set(e, true);
            omega2.set(e, true);
            continue;
        }
        let mut outside = false;
        let n = process.ray_height(horo(parent), |h| {
            outside |= win
                .index_of(&VertexRef {
                    orbit: 0,
                    level: h.level(),
                    address: Address::Horo(h.clone()),
                })
                .is_none();
        });
        heights[e] = Some(n);
        censored.set(e, outside);
        omega2.set(e, process.insertion_draw(child) < insertion_probability(n));
    }
    Ok(RaySample {
        omega1,
        omega2,
        heights,
        censored,
    })
}

/// Effective conductance from the origin to tree distance `R` inside the
/// `ω₂` cluster of the origin (unit conductances), for each radius.
pub fn ray_cluster_conductance(
    g: &GraphFamily,
    seed: u64,
    radii: &[u32],
) -> Result<Vec<ConductanceResult>> {
    let process = RayDecoration::new(g, seed)?;
    if radii.contains(&0) {
        return Err(Error::Parameter("radii must be positive".into()));
    }
    let r_max = radii.iter().copied().max().unwrap_or(0);
    // Explore the ω₂ cluster of the origin within tree distance r_max.
    let origin = HoroAddr::origin();
    let mut index: HashMap<HoroAddr, usize> = HashMap::from([(origin.clone(), 0)]);
    let mut nodes = vec![origin];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let x = nodes[i].clone();
        if x.distance_to_origin() >= r_max {
            continue;
        }
        let mut nbrs: Vec<HoroAddr> = Vec::new();
        if process.in_omega2(&x) {
            nbrs.push(x.parent());
        }
        for c in 0..process.b {
            let y = x.child(c);
            if process.in_omega2(&y) {
                nbrs.push(y);
            }
        }
        for y in nbrs {
            let j = match index.get(&y) {
                Some(&j) => j,
                None => {
                    let j = nodes.len();
                    index.insert(y.clone(), j);
                    nodes.push(y);
                    queue.push_back(j);
                    j
                }
            };
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    radii
        .iter()
        .map(|&r| {
            let keep = |k: usize| nodes[k].distance_to_origin() <= r;
            let mut net = Network::new(nodes.len());
            for &(u, v) in &edges {
                if keep(u) && keep(v) {
                    net.add_edge(u, v, 1.0);
                }
            }
            let sinks: Vec<usize> = (0..nodes.len())
                .filter(|&k| nodes[k].distance_to_origin() == r)
                .collect();
            network::effective_conductance(
                &net,
                0,
                &sinks,
                network::DEFAULT_TOLERANCE,
                network::DEFAULT_MAX_ITERATIONS,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::graphs::ball;

    fn win(kind: FamilyKind, r: u32) -> Arc<Window> {
        let g = GraphFamily::new(kind).unwrap();
        Arc::new(ball(&g, &g.origin(), r).unwrap())
    }

    #[test]
    fn extremes_of_p() {
        let w = win(FamilyKind::EuclideanLattice { dim: 2 }, 4);
        assert_eq!(sample_config(w.clone(), 0.0, 1).unwrap().open_count(), 0);
        assert_eq!(
            sample_config(w.clone(), 1.0, 1).unwrap().open_count(),
            w.edges.len()
        );
        assert!(sample_config(w, 1.5, 1).is_err());
    }

    #[test]
    fn path_with_closed_middle_edge() {
        let w = win(FamilyKind::EuclideanLattice { dim: 1 }, 2);
        // Vertices 0, +1, -1, +2, -2; edges sorted by index.
        let mut cfg = Config::constant(w.clone(), true);
        let e = w.edges.iter().position(|e| (e.u, e.v) == (0, 1)).unwrap();
        cfg.open.set(e, false);
        let dec = clusters(&cfg);
        let mut sizes: Vec<usize> = dec.clusters.iter().map(|c| c.size).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn config_json_round_trip() {
        let w = win(FamilyKind::OrientedTree { n1: 1, n2: 2 }, 3);
        let cfg = sample_config(w.clone(), 0.4, 11).unwrap();
        let back = Config::from_json(w, &cfg.to_json().unwrap()).unwrap();
        assert_eq!(back.open, cfg.open);
    }

    #[test]
    fn isolated_origin_has_unit_mass() {
        let w = win(FamilyKind::OrientedTree { n1: 1, n2: 2 }, 3);
        let cfg = Config::constant(w, false);
        assert_eq!(tilted_mass(&cfg, 0, &[0, 1, 3]).unwrap(), vec![int(1); 3]);
    }

    #[test]
    fn full_tree_mass_at_radius_one() {
        // o, U neighbor at level 0, forward at +1 (m = 2), two backward (1/2).
        let w = win(FamilyKind::OrientedTree { n1: 1, n2: 2 }, 2);
        let cfg = Config::constant(w, true);
        assert_eq!(tilted_mass(&cfg, 0, &[1]).unwrap(), vec![int(5)]);
    }

    #[test]
    fn ray_decoration_rejects_other_families() {
        let w = win(FamilyKind::Grandparent { b: 2 }, 1);
        assert!(matches!(
            ray_decoration_sample(&w, 1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn omega1_keeps_one_offspring() {
        let w = win(FamilyKind::FixedEndTree { b: 2 }, 6);
        let s = ray_decoration_sample(&w, 3).unwrap();
        for d in s.omega1_out_degrees(&w).into_iter().flatten() {
            assert_eq!(d, 1);
        }
        for e in 0..w.edges.len() {
            assert!(!s.omega1[e] || s.omega2[e]);
        }
    }
}
