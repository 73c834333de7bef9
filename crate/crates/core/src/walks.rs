//! Random walks on percolation configurations.
//!
//! The square-root-biased walk moves along an open edge `(x, y)` with
//! probability `√(m(x)m(y)) / Σ_{z∼x} √(m(z)m(x))`, where the sum runs over
//! all neighbors, and stays put with the remaining mass. It is reversible
//! with respect to `π(x) = Σ_{z∼x} √(m(z)m(x))`. Exact kernels are elements
//! of `Q(√q)`; simulation runs in floating point.

use std::cmp::Ordering;
use std::sync::Arc;

use num_traits::Zero;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{int, QuadField, Rational, Surd};
use crate::graphs::{sqrt_measure_product, sqrt_measure_ratio, Window, WindowKind};
use crate::network::{self, ConductanceResult, Network};
use crate::percolation::Config;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Simple random walk on the ambient graph; closed steps become stays.
    DelayedSrw,
    SqrtBiased,
    /// Simple random walk on the ambient graph, ignoring the configuration.
    PlainSrw,
}

/// Transition probabilities from one vertex, by window index.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub moves: Vec<(usize, Surd)>,
    pub stay: Surd,
}

impl Distribution {
    pub fn total(&self) -> Surd {
        self.moves
            .iter()
            .fold(self.stay.clone(), |acc, (_, w)| acc + w.clone())
    }

    pub fn prob(&self, y: usize, from: usize) -> Surd {
        if y == from {
            return self.stay.clone();
        }
        self.moves
            .iter()
            .filter(|(z, _)| *z == y)
            .fold(self.stay.scale(&Rational::zero()), |acc, (_, w)| {
                acc + w.clone()
            })
    }
}

fn field_of(win: &Window) -> QuadField {
    QuadField::new(win.family.modular_base.clone())
}

/// Interior vertex whose window adjacency covers all of its edges.
fn check_interior(win: &Window, v: usize) -> Result<()> {
    if v >= win.len() {
        return Err(Error::Precondition(format!(
            "vertex {v} is not in the window"
        )));
    }
    let covered: u32 = win
        .adjacent(v)
        .iter()
        .map(|&(_, e)| win.edges[e].multiplicity)
        .sum();
    if win.is_boundary(v) || covered as usize != win.family.degree(&win.vertices[v]) {
        return Err(Error::Precondition(format!(
            "vertex {v} has edges outside the window"
        )));
    }
    Ok(())
}

fn normalized(field: &QuadField, weighted: Vec<(usize, Surd)>, total: &Surd) -> Distribution {
    let inv = total.recip();
    let moves: Vec<(usize, Surd)> = weighted
        .into_iter()
        .map(|(y, w)| (y, w * inv.clone()))
        .collect();
    let moved = moves
        .iter()
        .fold(field.zero(), |acc, (_, w)| acc + w.clone());
    Distribution {
        stay: field.one() - moved,
        moves,
    }
}

pub fn kernel(kind: KernelKind, cfg: &Config, v: usize) -> Result<Distribution> {
    let win = &cfg.window;
    check_interior(win, v)?;
    let field = field_of(win);
    let g = &win.family;
    let x = &win.vertices[v];
    let mut total = field.zero();
    let mut weighted = Vec::new();
    for &(y, e) in win.adjacent(v) {
        let mult = int(win.edges[e].multiplicity as i64);
        let w = match kind {
            KernelKind::SqrtBiased => {
                sqrt_measure_product(g, &field, x, &win.vertices[y])?.scale(&mult)
            }
            KernelKind::DelayedSrw | KernelKind::PlainSrw => field.from_rational(mult),
        };
        total = total + w.clone();
        if kind == KernelKind::PlainSrw || cfg.open[e] {
            weighted.push((y, w));
        }
    }
    Ok(normalized(&field, weighted, &total))
}

pub fn biased_kernel(cfg: &Config, v: usize) -> Result<Distribution> {
    kernel(KernelKind::SqrtBiased, cfg, v)
}

/// `ν(x) = Σ_{z∼x} √(m(z)/m(x))` over all neighbors in the infinite graph.
fn nu(win: &Window, field: &QuadField, x: &crate::graphs::VertexRef) -> Result<Surd> {
    let mut acc = field.zero();
    for z in win.family.neighbors_unchecked(x) {
        acc = acc + sqrt_measure_ratio(&win.family, field, x, &z)?;
    }
    Ok(acc)
}

/// `q←(x,y) = ν(y)m(y) / (ν(x)m(x)) · q(y,x)`, evaluated from the formula.
pub fn reversed_kernel(cfg: &Config, v: usize) -> Result<Distribution> {
    let win = &cfg.window;
    check_interior(win, v)?;
    let field = field_of(win);
    let g = &win.family;
    let x = &win.vertices[v];
    let pi_x = nu(win, &field, x)?.scale(&g.stabilizer_measure(x));
    let inv_pi_x = pi_x.recip();
    let mut moves = Vec::new();
    for &(y, e) in win.adjacent(v) {
        if !cfg.open[e] {
            continue;
        }
        let yv = &win.vertices[y];
        // q(y, x): the forward kernel out of y, whose neighbors may leave the window.
        let mut denom = field.zero();
        for z in g.neighbors_unchecked(yv) {
            denom = denom + sqrt_measure_product(g, &field, yv, &z)?;
        }
        let mult = int(win.edges[e].multiplicity as i64);
        let q_yx = sqrt_measure_product(g, &field, yv, x)?.scale(&mult) * denom.recip();
        let pi_y = nu(win, &field, yv)?.scale(&g.stabilizer_measure(yv));
        moves.push((y, pi_y * inv_pi_x.clone() * q_yx));
    }
    let moved = moves
        .iter()
        .fold(field.zero(), |acc, (_, w)| acc + w.clone());
    Ok(Distribution {
        stay: field.one() - moved,
        moves,
    })
}

/// `π(x) = ν(x) m(x) = Σ_{z∼x} √(m(z) m(x))`.
pub fn stationary_weight(win: &Window, v: usize) -> Result<Surd> {
    let field = field_of(win);
    let x = &win.vertices[v];
    let mut acc = field.zero();
    for z in win.family.neighbors_unchecked(x) {
        acc = acc + sqrt_measure_product(&win.family, &field, x, &z)?;
    }
    Ok(acc)
}

/// Copy of `cfg` with every edge that touches a boundary vertex closed.
pub fn restrict_to_interior(cfg: &Config) -> Config {
    let win = &cfg.window;
    let mut out = cfg.clone();
    for (e, edge) in win.edges.iter().enumerate() {
        if win.is_boundary(edge.u) || win.is_boundary(edge.v) {
            out.open.set(e, false);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct StationarityReport {
    /// `max_y |Σ_x π(x) q(x,y) − π(y)|` over interior `y`.
    pub max_stationary_deviation: Surd,
    /// `max |π(x) q(x,y) − π(y) q(y,x)|` over open interior edges.
    pub max_detailed_balance_deviation: Surd,
    /// `max |π(x) q(x,y) − mult · √(m(x)m(y))|` over open interior edges.
    pub max_conductance_deviation: Surd,
    pub vertices: usize,
}

fn max_surd(a: Surd, b: Surd) -> Surd {
    if b.partial_cmp(&a) == Some(Ordering::Greater) {
        b
    } else {
        a
    }
}

/// Stationarity of `π` for the biased kernel on the interior of the
/// window, with edges touching the boundary treated as closed.
pub fn stationarity_check(cfg: &Config) -> Result<StationarityReport> {
    let restricted = restrict_to_interior(cfg);
    let win = &cfg.window;
    let field = field_of(win);
    let interior: Vec<usize> = win.interior().collect();
    if interior.is_empty() {
        return Err(Error::Precondition(
            "window has no interior vertices".into(),
        ));
    }
    let mut pi = vec![None; win.len()];
    let mut kernels = vec![None; win.len()];
    for &x in &interior {
        pi[x] = Some(stationary_weight(win, x)?);
        kernels[x] = Some(biased_kernel(&restricted, x)?);
    }
    let mut inflow = vec![field.zero(); win.len()];
    let mut worst_db = field.zero();
    let mut worst_c = field.zero();
    for &x in &interior {
        let px = pi[x].as_ref().unwrap();
        let kx = kernels[x].as_ref().unwrap();
        inflow[x] = inflow[x].clone() + px.clone() * kx.stay.clone();
        for (y, w) in &kx.moves {
            let flow = px.clone() * w.clone();
            inflow[*y] = inflow[*y].clone() + flow.clone();
            let py = pi[*y]
                .as_ref()
                .expect("open restricted edges stay in the interior");
            let back = kernels[*y].as_ref().unwrap().prob(x, *y);
            worst_db = max_surd(worst_db, (flow.clone() - py.clone() * back).abs());
            let mult: u32 = win
                .adjacent(x)
                .iter()
                .filter(|&&(z, _)| z == *y)
                .map(|&(_, e)| win.edges[e].multiplicity)
                .sum();
            let c = sqrt_measure_product(&win.family, &field, &win.vertices[x], &win.vertices[*y])?
                .scale(&int(mult as i64));
            worst_c = max_surd(worst_c, (flow - c).abs());
        }
    }
    let mut worst = field.zero();
    for &y in &interior {
        let dev = (inflow[y].clone() - pi[y].clone().unwrap()).abs();
        worst = max_surd(worst, dev);
    }
    Ok(StationarityReport {
        max_stationary_deviation: worst,
        max_detailed_balance_deviation: worst_db,
        max_conductance_deviation: worst_c,
        vertices: interior.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Stop at the first step onto a boundary vertex.
    Halt,
    /// Treat edges touching the boundary as closed.
    Reflect,
}

/// Floating-point transition tables, built on demand per vertex.
pub struct Sampler {
    cfg: Config,
    reversed: bool,
    tables: Vec<Option<Vec<(usize, f64)>>>,
}

impl Sampler {
    pub fn new(cfg: &Config, policy: BoundaryPolicy, reversed: bool) -> Self {
        let cfg = match policy {
            BoundaryPolicy::Halt => cfg.clone(),
            BoundaryPolicy::Reflect => restrict_to_interior(cfg),
        };
        let n = cfg.window.len();
        Sampler {
            cfg,
            reversed,
            tables: vec![None; n],
        }
    }

    /// Cumulative move probabilities out of `x`; the remainder is a stay.
    fn table(&mut self, x: usize) -> Result<&[(usize, f64)]> {
        if self.tables[x].is_none() {
            let d = if self.reversed {
                reversed_kernel(&self.cfg, x)?
            } else {
                biased_kernel(&self.cfg, x)?
            };
            let mut acc = 0.0;
            let cum = d
                .moves
                .iter()
                .map(|(y, w)| {
                    acc += w.to_f64();
                    (*y, acc)
                })
                .collect();
            self.tables[x] = Some(cum);
        }
        Ok(self.tables[x].as_deref().unwrap())
    }

    /// Next position from `x` given a uniform `u ∈ [0, 1)`.
    pub fn step(&mut self, x: usize, u: f64) -> Result<usize> {
        Ok(self
            .table(x)?
            .iter()
            .find(|&&(_, c)| u < c)
            .map_or(x, |&(y, _)| y))
    }
}

/// Positions `w(n)` for `n ∈ [−backward_len, forward_len]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: usize,
    pub seed: u64,
    /// `w(0), w(1), …`.
    pub forward: Vec<usize>,
    /// `w(0), w(−1), …`.
    pub backward: Vec<usize>,
    pub truncated_forward: bool,
    pub truncated_backward: bool,
}

impl Trajectory {
    pub fn get(&self, n: i64) -> Option<usize> {
        if n >= 0 {
            self.forward.get(n as usize).copied()
        } else {
            self.backward.get(n.unsigned_abs() as usize).copied()
        }
    }

    pub fn min_index(&self) -> i64 {
        -(self.backward.len() as i64 - 1)
    }

    pub fn max_index(&self) -> i64 {
        self.forward.len() as i64 - 1
    }
}

fn run(
    sampler: &mut Sampler,
    start: usize,
    steps: u64,
    stream: u64,
    seed: u64,
) -> Result<(Vec<usize>, bool)> {
    let mut rng = rng::stream(seed, stream);
    let win = sampler.cfg.window.clone();
    let mut path = Vec::with_capacity(steps as usize + 1);
    path.push(start);
    let mut x = start;
    for _ in 0..steps {
        x = sampler.step(x, rng::unit(rng.next_u64()))?;
        path.push(x);
        if win.is_boundary(x) {
            return Ok((path, true));
        }
    }
    Ok((path, false))
}

/// Two-sided square-root-biased walk: forward steps use the biased kernel
/// on the forward stream, backward steps the reversed kernel on the
/// backward stream.
pub fn simulate_two_sided(
    cfg: &Config,
    start: usize,
    steps_forward: u64,
    steps_backward: u64,
    seed: u64,
    policy: BoundaryPolicy,
) -> Result<Trajectory> {
    check_interior(&cfg.window, start)?;
    let mut fwd = Sampler::new(cfg, policy, false);
    let mut bwd = Sampler::new(cfg, policy, true);
    let (forward, truncated_forward) =
        run(&mut fwd, start, steps_forward, rng::FORWARD_STREAM, seed)?;
    let (backward, truncated_backward) =
        run(&mut bwd, start, steps_backward, rng::BACKWARD_STREAM, seed)?;
    Ok(Trajectory {
        start,
        seed,
        forward,
        backward,
        truncated_forward,
        truncated_backward,
    })
}

/// `α_m^n = (1/(n−m)) · #{k ∈ [m, n) : w(k) ∈ C}`, exactly.
pub fn frequency(traj: &Trajectory, in_set: &[bool], m: i64, n: i64) -> Result<Rational> {
    if m >= n || m < traj.min_index() || n - 1 > traj.max_index() {
        return Err(Error::Precondition(format!(
            "index window [{m}, {n}) is outside the trajectory [{}, {}]",
            traj.min_index(),
            traj.max_index()
        )));
    }
    let hits = (m..n).filter(|&k| in_set[traj.get(k).unwrap()]).count();
    Ok(Rational::new((hits as i64).into(), (n - m).into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeight {
    Unit,
    SqrtStabilizer,
}

/// Electrical network of the open edges of `cfg` among vertices within
/// window distance `r` of `o`; returns the network and the sphere at `r`.
pub fn cluster_network(
    cfg: &Config,
    o: usize,
    r: u32,
    weight: EdgeWeight,
) -> Result<(Network, Vec<usize>)> {
    let win: &Arc<Window> = &cfg.window;
    if o >= win.len() {
        return Err(Error::Precondition("vertex is not in the window".into()));
    }
    if let WindowKind::Ball { radius } = win.kind {
        if win.distance(o) + r > radius {
            return Err(Error::Precondition(format!(
                "radius {r} exceeds the window around the vertex"
            )));
        }
    }
    if r == 0 {
        return Err(Error::Parameter("radius must be positive".into()));
    }
    let dist = win.distances_from(o);
    let inside = |v: usize| dist[v].is_some_and(|d| d <= r);
    let field = field_of(win);
    let mut net = Network::new(win.len());
    for (e, edge) in win.edges.iter().enumerate() {
        if !cfg.open[e] || !inside(edge.u) || !inside(edge.v) {
            continue;
        }
        let c = match weight {
            EdgeWeight::Unit => 1.0,
            EdgeWeight::SqrtStabilizer => sqrt_measure_product(
                &win.family,
                &field,
                &win.vertices[edge.u],
                &win.vertices[edge.v],
            )?
            .to_f64(),
        };
        net.add_edge(edge.u, edge.v, c * edge.multiplicity as f64);
    }
    let sphere = (0..win.len()).filter(|&v| dist[v] == Some(r)).collect();
    Ok((net, sphere))
}

/// Effective conductance from `o` to the wired sphere at distance `r`
/// inside the open cluster of `o`.
pub fn effective_conductance(
    cfg: &Config,
    o: usize,
    r: u32,
    weight: EdgeWeight,
) -> Result<ConductanceResult> {
    let (net, sphere) = cluster_network(cfg, o, r, weight)?;
    network::effective_conductance(
        &net,
        o,
        &sphere,
        network::DEFAULT_TOLERANCE,
        network::DEFAULT_MAX_ITERATIONS,
    )
}

/// Float view of a distribution, `(target, probability)` with the stay last.
pub fn to_float(d: &Distribution, from: usize) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = d.moves.iter().map(|(y, w)| (*y, w.to_f64())).collect();
    out.push((from, d.stay.to_f64()));
    out
}
