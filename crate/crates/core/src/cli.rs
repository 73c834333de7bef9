//! The `perclab` command line.
//!
//! Every invocation is reduced to a [`RunSpec`]: the subcommand plus a flat
//! `key = value` parameter map (config file first, flags on top, defaults
//! filled in as they are read). Reports embed the effective `RunSpec`, and
//! `perclab replay REPORT` re-executes it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::exact::{format_rational, parse_rational, Rational};
use crate::graphs::{
    ball, geodesic_targets, slab_component, FamilyKind, GraphFamily, OrbitWeights, Window,
};
use crate::percolation::{self, EdgeCoupling};
use crate::report::{envelope, RationalValue};
use crate::{rng, thresholds, tmtp, walks};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

/// Effective description of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub subcommand: String,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub format: Format,
    pub output_path: Option<String>,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(m) => CliError::Usage(m),
            other => CliError::Failure(other),
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn normalize_key(k: &str) -> String {
    k.trim().replace('_', "-")
}

/// Parses a `key=value` config file. Blank lines and `#` comments are
/// skipped.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Usage(format!("config line {}: malformed entry {line:?}", i + 1));
        let (k, v) = line.split_once('=').ok_or_else(bad)?;
        let (k, v) = (normalize_key(k), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(bad());
        }
        out.insert(k, v.to_string());
    }
    Ok(out)
}

/// Merges a config file (if any) under the flag values.
pub fn load_runspec(
    subcommand: &str,
    config_path: Option<&str>,
    flags: BTreeMap<String, String>,
) -> CliResult<RunSpec> {
    let mut params = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    params.extend(flags);
    let mut spec = RunSpec {
        subcommand: subcommand.to_string(),
        ..RunSpec::default()
    };
    if let Some(v) = params.remove("seed") {
        spec.seed = Some(parse_value("seed", &v)?);
    }
    if let Some(v) = params.remove("trials") {
        spec.trials = Some(parse_value("trials", &v)?);
    }
    if let Some(v) = params.remove("format") {
        spec.format = v.parse().map_err(CliError::Usage)?;
    }
    if let Some(v) = params.remove("out") {
        spec.output_path = Some(v);
    }
    spec.params = params;
    Ok(spec)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}")))
}

/// Typed access to the parameters of a run; defaults are written back so
/// the emitted `RunSpec` is complete.
struct Ctx {
    spec: RunSpec,
}

impl Ctx {
    fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> CliResult<T> {
        match self.spec.params.get(key) {
            Some(v) => parse_value(key, v),
            None => {
                self.spec
                    .params
                    .insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    fn req<T: FromStr>(&mut self, key: &str) -> CliResult<T> {
        match self.spec.params.get(key) {
            Some(v) => parse_value(key, v),
            None => Err(CliError::Usage(format!(
                "missing required parameter --{key}"
            ))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str, default: &str) -> CliResult<Vec<T>> {
        let raw = self.get(key, default.to_string())?;
        raw.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_value(key, s.trim()))
            .collect()
    }

    fn seed(&mut self) -> u64 {
        *self.spec.seed.get_or_insert_with(rand::random)
    }

    fn trials(&mut self, default: u64) -> CliResult<u64> {
        let t = *self.spec.trials.get_or_insert(default);
        if t == 0 {
            return Err(CliError::Usage("trials must be positive".into()));
        }
        Ok(t)
    }

    fn family_kind(&mut self, prefix: &str) -> CliResult<FamilyKind> {
        let name: String = self.req(&format!("{prefix}family"))?;
        let kind = match name.as_str() {
            "fixed-end-tree" => FamilyKind::FixedEndTree { b: self.req("b")? },
            "oriented-tree" => FamilyKind::OrientedTree {
                n1: self.req("n1")?,
                n2: self.req("n2")?,
            },
            "grandparent" => FamilyKind::Grandparent { b: self.req("b")? },
            "diestel-leader" => FamilyKind::DiestelLeader {
                k: self.req("k")?,
                n: self.req("n")?,
            },
            "subdivided-tree" => FamilyKind::SubdividedFixedEndTree { b: self.req("b")? },
            "lattice" => FamilyKind::EuclideanLattice {
                dim: self.req("dim")?,
            },
            "checkerboard" => FamilyKind::CheckerboardLattice {
                dim: self.req("dim")?,
            },
            "product" if prefix.is_empty() => FamilyKind::ProductWithZ {
                base: Box::new(self.family_kind("base-")?),
                dim: self.req("dim")?,
            },
            other => return Err(CliError::Usage(format!("unknown family {other:?}"))),
        };
        Ok(kind)
    }

    fn family(&mut self) -> CliResult<GraphFamily> {
        let kind = self.family_kind("")?;
        Ok(GraphFamily::new(kind)?)
    }

    fn weights(&mut self, g: &GraphFamily) -> CliResult<OrbitWeights> {
        let spec: String = self.get("weights", "mu".to_string())?;
        match spec.as_str() {
            "mu" => Ok(tmtp::solve_mu(g)?.weights),
            "uniform" => Ok(OrbitWeights::uniform(g)),
            list => {
                let a = list
                    .split(',')
                    .map(|s| {
                        parse_rational(s)
                            .ok_or_else(|| CliError::Usage(format!("bad weight {s:?}")))
                    })
                    .collect::<CliResult<Vec<Rational>>>()?;
                Ok(OrbitWeights::new(g, a)?)
            }
        }
    }

    fn probability(&mut self, key: &str, default: Option<f64>) -> CliResult<f64> {
        let p: f64 = match default {
            Some(d) => self.get(key, d)?,
            None => self.req(key)?,
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Usage(format!("{key} = {p} is not in [0, 1]")));
        }
        Ok(p)
    }

    fn ball_window(&mut self, g: &GraphFamily, default_radius: u32) -> CliResult<Arc<Window>> {
        let r = self.get("radius", default_radius)?;
        Ok(Arc::new(ball(g, &g.origin(), r)?))
    }
}

/// Result of a subcommand: the JSON payload, optional table rows for CSV
/// output, and whether a checked property failed.
struct Outcome {
    result: Value,
    rows: Option<Vec<Value>>,
    failed: Option<String>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Outcome {
            result,
            rows: None,
            failed: None,
        }
    }

    fn with_rows(result: Value, rows: Vec<Value>) -> Self {
        Outcome {
            result,
            rows: Some(rows),
            failed: None,
        }
    }

    fn check(mut self, ok: bool, what: &str) -> Self {
        if !ok {
            self.failed = Some(what.to_string());
        }
        self
    }
}

fn rv(r: &Rational) -> Value {
    serde_json::to_value(RationalValue::from(r)).unwrap()
}

fn surd_value(s: &crate::exact::Surd) -> Value {
    json!({ "exact": s.to_string(), "value": s.to_f64() })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

// ---------------------------------------------------------------- graph

fn graph_info(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let neighbors: Vec<Value> = (0..g.orbit_count)
        .map(|i| {
            let o = g.representative(i);
            json!({
                "orbit": i,
                "representative": to_value(&o),
                "neighbors": to_value(&g.neighbors_unchecked(&o)),
            })
        })
        .collect();
    Ok(Outcome::new(json!({
        "family": to_value(&g.kind),
        "orbit_count": g.orbit_count,
        "modular_base": rv(&g.modular_base),
        "unimodular": g.is_unimodular(),
        "orbit_degrees": g.orbit_degrees,
        "orbit_m": g.orbit_m.iter().map(rv).collect::<Vec<_>>(),
        "orbits": neighbors,
    })))
}

fn window_summary(w: &Window, emit: bool) -> CliResult<Value> {
    let mut v = json!({
        "kind": to_value(&w.kind),
        "vertices": w.len(),
        "edges": w.edges.len(),
        "boundary": w.boundary.len(),
        "sphere_sizes": w.sphere_sizes(),
        "min_level": w.vertices.iter().map(|v| v.level).min(),
        "max_level": w.vertices.iter().map(|v| v.level).max(),
    });
    if emit {
        let doc: Value = serde_json::from_str(&w.to_json()?).map_err(Error::from)?;
        v["window"] = doc;
    }
    Ok(v)
}

fn graph_ball(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let emit = c.get("emit-window", false)?;
    let w = c.ball_window(&g, 3)?;
    let rows = w
        .sphere_sizes()
        .iter()
        .enumerate()
        .map(|(r, s)| json!({"distance": r, "sphere_size": s}))
        .collect();
    Ok(Outcome::with_rows(window_summary(&w, emit)?, rows))
}

fn graph_slab(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let n = c.req("n-levels")?;
    let depth = c.get("depth", 8u32)?;
    let emit = c.get("emit-window", false)?;
    let w = slab_component(&g, &g.origin(), n, depth)?;
    let rows = w
        .sphere_sizes()
        .iter()
        .enumerate()
        .map(|(r, s)| json!({"distance": r, "sphere_size": s}))
        .collect();
    Ok(Outcome::with_rows(window_summary(&w, emit)?, rows))
}

// ---------------------------------------------------------------- tmtp

fn transports(c: &mut Ctx, g: &GraphFamily) -> CliResult<Vec<tmtp::Transport>> {
    let name: String = c.get("transport", "suite".to_string())?;
    Ok(match name.as_str() {
        "suite" => tmtp::transport_suite(g),
        "identity" => vec![tmtp::Transport::Identity],
        "adjacency" => vec![tmtp::Transport::Adjacency],
        "level-step" => vec![tmtp::Transport::LevelStep {
            step: c.get("step", 1i64)?,
        }],
        "sphere-level" => vec![tmtp::Transport::SphereLevel {
            radius: c.get("sphere-radius", 2u32)?,
            offset: c.get("offset", 0i64)?,
        }],
        other => return Err(CliError::Usage(format!("unknown transport {other:?}"))),
    })
}

fn tmtp_verify(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let w = c.weights(&g)?;
    let mut rows = Vec::new();
    let mut all_equal = true;
    for f in transports(c, &g)? {
        let r = tmtp::verify_tmtp(&g, &w, &f)?;
        all_equal &= r.equal;
        rows.push(json!({
            "transport": r.transport,
            "lhs": format_rational(&r.lhs),
            "lhs_value": crate::exact::to_f64(&r.lhs),
            "rhs": format_rational(&r.rhs),
            "rhs_value": crate::exact::to_f64(&r.rhs),
            "equal": r.equal,
        }));
    }
    let result = json!({
        "weights": w.a.iter().map(rv).collect::<Vec<_>>(),
        "transports": rows.clone(),
        "all_equal": all_equal,
    });
    Ok(Outcome::with_rows(result, rows).check(all_equal, "tilted mass transport mismatch"))
}

fn tmtp_mu(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let mu = tmtp::solve_mu(&g)?;
    let chain = tmtp::lazy_orbit_chain(&g);
    let ok = mu.routes_agree() && mu.max_residual().is_zero();
    let rows = (0..g.orbit_count)
        .map(|i| {
            json!({
                "orbit": i,
                "degree": g.orbit_degrees[i],
                "chain_stationary": format_rational(&chain.stationary[i]),
                "mu": format_rational(&mu.weights.a[i]),
                "mu_value": crate::exact::to_f64(&mu.weights.a[i]),
                "linear_solution": format_rational(&mu.linear_solution[i]),
                "residual": format_rational(&mu.residuals[i]),
            })
        })
        .collect::<Vec<_>>();
    let result = json!({
        "mu": mu.weights.a.iter().map(rv).collect::<Vec<_>>(),
        "linear_solution": mu.linear_solution.iter().map(rv).collect::<Vec<_>>(),
        "residuals": mu.residuals.iter().map(rv).collect::<Vec<_>>(),
        "chain_stationary": chain.stationary.iter().map(rv).collect::<Vec<_>>(),
        "routes_agree": mu.routes_agree(),
    });
    Ok(
        Outcome::with_rows(result, rows)
            .check(ok, "harmonicity system and biasing recipe disagree"),
    )
}

fn conductance(c: &mut Ctx) -> CliResult<tmtp::Conductance> {
    let name: String = c.get("conductance", "unit".to_string())?;
    Ok(match name.as_str() {
        "unit" => tmtp::Conductance::Unit,
        "sqrt" => tmtp::Conductance::SqrtStabilizer,
        "level-offset" => {
            let raw: String = c.req("offset-values")?;
            let mut values = BTreeMap::new();
            for item in raw.split(',') {
                let (k, v) = item
                    .split_once(':')
                    .ok_or_else(|| CliError::Usage(format!("bad offset value {item:?}")))?;
                let k: u64 = parse_value("offset-values", k.trim())?;
                let v = parse_rational(v)
                    .ok_or_else(|| CliError::Usage(format!("bad conductance {v:?}")))?;
                values.insert(k, v);
            }
            tmtp::Conductance::ByLevelOffset { values }
        }
        other => return Err(CliError::Usage(format!("unknown conductance {other:?}"))),
    })
}

fn tmtp_harmonic(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let w = c.weights(&g)?;
    let cond = conductance(c)?;
    let win = c.ball_window(&g, 4)?;
    let r = tmtp::harmonicity_residual(&g, &w, &g.origin(), &win, &cond)?;
    let result = json!({
        "weights": w.a.iter().map(rv).collect::<Vec<_>>(),
        "conductance": to_value(&cond),
        "tested_vertices": r.tested,
        "max_residual": surd_value(&r.max_residual),
        "argmax": r.argmax.map(|i| to_value(&win.vertices[i])),
        "exactly_zero": r.is_exactly_zero(),
    });
    Ok(Outcome::new(result))
}

fn tmtp_cocycle(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let w = c.weights(&g)?;
    let trials = c.trials(1000)?;
    let seed = c.seed();
    let dev = tmtp::cocycle_check(&g, &w, trials, seed)?;
    Ok(
        Outcome::new(json!({ "max_deviation": rv(&dev), "triples": trials }))
            .check(dev.is_zero(), "cocycle identity violated"),
    )
}

// ---------------------------------------------------------------- perc

fn perc_sample(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let win = c.ball_window(&g, 4)?;
    let p = c.probability("p", None)?;
    let seed = c.seed();
    let emit = c.get("emit-config", false)?;
    let cfg = percolation::sample_config(win.clone(), p, seed)?;
    let mut result = json!({
        "window": window_summary(&win, false)?,
        "p": p,
        "open_edges": cfg.open_count(),
        "edges": win.edges.len(),
        "open_fraction": cfg.open_count() as f64 / win.edges.len().max(1) as f64,
    });
    if emit {
        result["config"] = serde_json::from_str(&cfg.to_json()?).map_err(Error::from)?;
    }
    Ok(Outcome::new(result))
}

fn perc_clusters(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let win = c.ball_window(&g, 4)?;
    let p = c.probability("p", None)?;
    let seed = c.seed();
    let cfg = percolation::sample_config(win, p, seed)?;
    let dec = percolation::clusters(&cfg);
    let mut sorted = dec.clusters.clone();
    sorted.sort_by(|a, b| b.size.cmp(&a.size).then(a.root.cmp(&b.root)));
    let rows: Vec<Value> = sorted.iter().take(20).map(to_value).collect();
    let result = json!({
        "clusters": dec.clusters.len(),
        "origin_cluster": to_value(dec.cluster_of(0)),
        "largest": rows.clone(),
    });
    Ok(Outcome::with_rows(result, rows))
}

fn perc_connect(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let p = c.probability("p", None)?;
    let d: u32 = c.get("distance", 5)?;
    let margin = c.get("margin", 0u32)?;
    let trials = c.trials(10_000)?;
    let seed = c.seed();
    let o = g.origin();
    let y = geodesic_targets(&g, &o, d)?
        .pop()
        .ok_or_else(|| CliError::Usage("distance must be positive".into()))?;
    let est = percolation::connectivity_estimate(&g, p, &o, &y, trials, seed, margin)?;
    Ok(Outcome::new(json!({
        "target": to_value(&y),
        "distance": d,
        "p_hat": est.p_hat,
        "se": est.se,
        "hits": est.hits,
        "n_trials": est.trials,
        "estimator": "lower bound (free boundary)",
    })))
}

fn perc_decay(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let p = c.probability("p", None)?;
    let d: u32 = c.get("max-distance", 6)?;
    let margin = c.get("margin", 0u32)?;
    let trials = c.trials(10_000)?;
    let seed = c.seed();
    let o = g.origin();
    let targets = geodesic_targets(&g, &o, d)?;
    let rows = percolation::decay_curve(&g, p, &o, &targets, trials, seed, margin)?;
    let table: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "distance": r.distance,
                "p_hat": r.p_hat,
                "se": r.se,
                "n_trials": r.n_trials,
                "running_min": r.running_min,
            })
        })
        .collect();
    Ok(Outcome::with_rows(
        json!({ "rows": to_value(&rows) }),
        table,
    ))
}

fn perc_mass(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let win = c.ball_window(&g, 6)?;
    let p = c.probability("p", None)?;
    let seed = c.seed();
    let radii: Vec<u32> = c.list("radii", "1,2,3,4,5,6")?;
    let cfg = percolation::sample_config(win, p, seed)?;
    let sums = percolation::tilted_mass(&cfg, 0, &radii)?;
    let rows: Vec<Value> = radii
        .iter()
        .zip(&sums)
        .map(|(r, m)| json!({"radius": r, "mass": format_rational(m), "mass_value": crate::exact::to_f64(m)}))
        .collect();
    Ok(Outcome::with_rows(json!({ "rows": rows.clone() }), rows))
}

fn perc_ray(c: &mut Ctx) -> CliResult<Outcome> {
    let b = c.get("b", 2u32)?;
    let g = GraphFamily::new(FamilyKind::FixedEndTree { b })?;
    let win = c.ball_window(&g, 8)?;
    let radii: Vec<u32> = c.list("radii", "8,16,32,64")?;
    let seed = c.seed();
    let s = percolation::ray_decoration_sample(&win, seed)?;
    let degrees = s.omega1_out_degrees(&win);
    let full: Vec<usize> = degrees.iter().flatten().copied().collect();
    let n0: Vec<usize> = (0..win.edges.len())
        .filter(|&e| s.heights[e] == Some(0) && !s.censored[e])
        .collect();
    let inserted = n0.iter().filter(|&&e| s.omega2[e]).count();
    let rate = inserted as f64 / n0.len().max(1) as f64;
    let ceff = percolation::ray_cluster_conductance(&g, seed, &radii)?;
    let rows: Vec<Value> = radii
        .iter()
        .zip(&ceff)
        .map(|(r, x)| json!({"R": r, "C_eff": x.c_eff, "iterations": x.iterations, "residual": x.residual}))
        .collect();
    let result = json!({
        "edges": win.edges.len(),
        "omega1_edges": s.omega1.count_ones(),
        "omega2_edges": s.omega2.count_ones(),
        "censored_edges": s.censored.count_ones(),
        "omega1_out_degree_min": full.iter().min(),
        "omega1_out_degree_max": full.iter().max(),
        "n0_edges": n0.len(),
        "n0_insertion_rate": rate,
        "n0_insertion_se": (rate * (1.0 - rate) / n0.len().max(1) as f64).sqrt(),
        "conductance": rows.clone(),
    });
    Ok(Outcome::with_rows(result, rows))
}

// ---------------------------------------------------------------- walk

fn walk_config(c: &mut Ctx, default_radius: u32) -> CliResult<percolation::Config> {
    let g = c.family()?;
    let win = c.ball_window(&g, default_radius)?;
    let p = c.probability("p", Some(1.0))?;
    let seed = c.seed();
    Ok(percolation::sample_config(win, p, seed)?)
}

fn walk_kernel(c: &mut Ctx) -> CliResult<Outcome> {
    let cfg = walk_config(c, 2)?;
    let v: usize = c.get("vertex", 0)?;
    let kind: String = c.get("kind", "sqrt-biased".to_string())?;
    let kind = match kind.as_str() {
        "sqrt-biased" => walks::KernelKind::SqrtBiased,
        "delayed-srw" => walks::KernelKind::DelayedSrw,
        "plain-srw" => walks::KernelKind::PlainSrw,
        other => return Err(CliError::Usage(format!("unknown kernel {other:?}"))),
    };
    let d = walks::kernel(kind, &cfg, v)?;
    let rev = walks::reversed_kernel(&cfg, v)?;
    let win = &cfg.window;
    let mut rows: Vec<Value> = d
        .moves
        .iter()
        .map(|(y, w)| {
            json!({"target": to_value(&win.vertices[*y]), "probability": w.to_string(), "value": w.to_f64()})
        })
        .collect();
    rows.push(
        json!({"target": "stay", "probability": d.stay.to_string(), "value": d.stay.to_f64()}),
    );
    let biased = walks::biased_kernel(&cfg, v)?;
    let result = json!({
        "vertex": to_value(&win.vertices[v]),
        "distribution": rows.clone(),
        "reversed_equals_biased": rev == biased,
    });
    Ok(Outcome::with_rows(result, rows))
}

fn walk_simulate(c: &mut Ctx) -> CliResult<Outcome> {
    let cfg = walk_config(c, 6)?;
    let steps = c.get("steps", 1000u64)?;
    let back = c.get("back-steps", 1000u64)?;
    let policy = policy(c, "halt")?;
    let seed = cfg.seed;
    let t = walks::simulate_two_sided(&cfg, 0, steps, back, seed, policy)?;
    let win = &cfg.window;
    let rows: Vec<Value> = (t.min_index()..=t.max_index())
        .map(|n| {
            let v = &win.vertices[t.get(n).unwrap()];
            json!({
                "index": n,
                "orbit": v.orbit,
                "level": v.level,
                "address": serde_json::to_string(&v.address).unwrap_or_default(),
            })
        })
        .collect();
    let result = json!({
        "min_index": t.min_index(),
        "max_index": t.max_index(),
        "truncated_forward": t.truncated_forward,
        "truncated_backward": t.truncated_backward,
        "positions": rows.clone(),
    });
    Ok(Outcome::with_rows(result, rows))
}

fn policy(c: &mut Ctx, default: &str) -> CliResult<walks::BoundaryPolicy> {
    let p: String = c.get("policy", default.to_string())?;
    match p.as_str() {
        "halt" => Ok(walks::BoundaryPolicy::Halt),
        "reflect" => Ok(walks::BoundaryPolicy::Reflect),
        other => Err(CliError::Usage(format!(
            "unknown boundary policy {other:?}"
        ))),
    }
}

fn walk_stationarity(c: &mut Ctx) -> CliResult<Outcome> {
    let cfg = walk_config(c, 3)?;
    let r = walks::stationarity_check(&cfg)?;
    let ok = r.max_stationary_deviation.is_zero() && r.max_detailed_balance_deviation.is_zero();
    Ok(Outcome::new(json!({
        "vertices": r.vertices,
        "max_stationary_deviation": surd_value(&r.max_stationary_deviation),
        "max_detailed_balance_deviation": surd_value(&r.max_detailed_balance_deviation),
        "max_conductance_deviation": surd_value(&r.max_conductance_deviation),
    }))
    .check(ok, "stationarity violated"))
}

/// Forward and backward visit frequencies of the origin's cluster at
/// `set-p` for a walk on the coupled configuration at `p`.
pub fn frequency_trial(
    win: &Arc<Window>,
    p: f64,
    set_p: f64,
    steps: u64,
    seed: u64,
    trial: u64,
) -> crate::Result<(f64, f64)> {
    let coupling = EdgeCoupling::new(win.clone(), seed, trial);
    let cfg = coupling.config(p)?;
    let set_cfg = coupling.config(set_p)?;
    let mut in_set = vec![false; win.len()];
    for v in set_cfg.cluster_of(0) {
        in_set[v] = true;
    }
    let t = walks::simulate_two_sided(
        &cfg,
        0,
        steps,
        steps,
        rng::derive(seed, trial),
        walks::BoundaryPolicy::Reflect,
    )?;
    let n = steps as i64;
    let fwd = walks::frequency(&t, &in_set, 0, n)?;
    let bwd = walks::frequency(&t, &in_set, -n, 0)?;
    Ok((crate::exact::to_f64(&fwd), crate::exact::to_f64(&bwd)))
}

fn walk_frequency(c: &mut Ctx) -> CliResult<Outcome> {
    let g = c.family()?;
    let win = c.ball_window(&g, 8)?;
    let p = c.probability("p", Some(0.5))?;
    let set_p = c.probability("set-p", Some(0.4))?;
    let steps = c.get("steps", 100_000u64)?;
    let trials = c.trials(20)?;
    let seed = c.seed();
    let results = (0..trials)
        .into_par_iter()
        .map(|t| frequency_trial(&win, p, set_p, steps, seed, t))
        .collect::<crate::Result<Vec<_>>>()?;
    let rows: Vec<Value> = results
        .iter()
        .enumerate()
        .map(|(t, (f, b))| json!({"trial": t, "forward": f, "backward": b, "abs_diff": (f - b).abs()}))
        .collect();
    let mean_abs = results.iter().map(|(f, b)| (f - b).abs()).sum::<f64>() / trials as f64;
    let result = json!({
        "steps": steps,
        "mean_abs_diff": mean_abs,
        "trials": rows.clone(),
    });
    Ok(Outcome::with_rows(result, rows))
}

fn walk_conductance(c: &mut Ctx) -> CliResult<Outcome> {
    let cfg = walk_config(c, 6)?;
    let radii: Vec<u32> = c.list("radii", "1,2,3,4,5,6")?;
    let weight: String = c.get("weight", "unit".to_string())?;
    let weight = match weight.as_str() {
        "unit" => walks::EdgeWeight::Unit,
        "sqrt" => walks::EdgeWeight::SqrtStabilizer,
        other => return Err(CliError::Usage(format!("unknown edge weight {other:?}"))),
    };
    let mut rows = Vec::new();
    for &r in &radii {
        let x = walks::effective_conductance(&cfg, 0, r, weight)?;
        rows.push(
            json!({"R": r, "C_eff": x.c_eff, "iterations": x.iterations, "residual": x.residual}),
        );
    }
    Ok(Outcome::with_rows(json!({ "rows": rows.clone() }), rows))
}

// ---------------------------------------------------------------- threshold

fn threshold_ph(c: &mut Ctx) -> CliResult<Outcome> {
    let ph = thresholds::ph_closed_form(c.req("n1")?, c.req("n2")?)?;
    Ok(Outcome::new(json!({
        "n1": ph.n1,
        "n2": ph.n2,
        "p_h": ph.value,
        "exact": ph.exact.as_ref().map(format_rational),
    })))
}

fn threshold_slab(c: &mut Ctx) -> CliResult<Outcome> {
    let n1 = c.req("n1")?;
    let n2 = c.req("n2")?;
    let n = c.req("n")?;
    let tol = c.get("tol", thresholds::DEFAULT_TOLERANCE)?;
    let sg = thresholds::slab_state_graph(n1, n2, n)?;
    let base = json!({"n1": n1, "n2": n2, "n": n, "states": sg.states.len()});
    match thresholds::slab_spectral_radius(&sg, tol, thresholds::DEFAULT_MAX_ITERATIONS) {
        Ok(s) => {
            let mut v = base;
            v["lambda_star"] = json!(s.lambda_star);
            v["inv_lambda"] = json!(1.0 / s.lambda_star);
            v["iterations"] = json!(s.iterations);
            v["bfs_estimate"] = json!(thresholds::bfs_growth_estimate(
                &sg,
                thresholds::GROWTH_DEPTH
            ));
            Ok(Outcome::new(v))
        }
        Err(Error::DegenerateSlab) => {
            let mut v = base;
            v["degenerate"] = json!(true);
            v["p_c"] = json!(1.0);
            Ok(Outcome::new(v))
        }
        Err(e) => Err(e.into()),
    }
}

fn threshold_scan(c: &mut Ctx) -> CliResult<Outcome> {
    let n1 = c.req("n1")?;
    let n2 = c.req("n2")?;
    let n_max = c.get("n-max", 32u32)?;
    let tol = c.get("tol", thresholds::DEFAULT_TOLERANCE)?;
    let rep = thresholds::ph_limit_scan(n1, n2, n_max, tol)?;
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            json!({
                "n1": n1, "n2": n2, "n": r.n, "states": r.states,
                "lambda_star": r.lambda_star, "inv_lambda": r.inv_lambda,
                "bfs_estimate": r.bfs_estimate, "closed_form": rep.closed_form,
                "gap": r.inv_lambda - rep.closed_form,
            })
        })
        .collect();
    Ok(Outcome::with_rows(to_value(&rep), rows))
}

fn threshold_pu(c: &mut Ctx) -> CliResult<Outcome> {
    let b = c.req("b")?;
    Ok(Outcome::new(
        json!({ "b": b, "p_u_lower_bound": thresholds::pu_lower_bound(b)? }),
    ))
}

// ---------------------------------------------------------------- dispatch

const STOCHASTIC: &[&str] = &[
    "tmtp cocycle",
    "perc sample",
    "perc clusters",
    "perc connect",
    "perc decay",
    "perc mass",
    "perc ray-decoration",
    "walk kernel",
    "walk simulate",
    "walk stationarity",
    "walk frequency",
    "walk conductance",
];

/// Runs a `RunSpec`; returns the completed spec and the outcome.
fn execute(spec: RunSpec) -> (RunSpec, CliResult<Outcome>) {
    let mut c = Ctx { spec };
    if STOCHASTIC.contains(&c.spec.subcommand.as_str()) {
        c.seed();
    }
    let out = match c.spec.subcommand.as_str() {
        "graph info" => graph_info(&mut c),
        "graph ball" => graph_ball(&mut c),
        "graph slab" => graph_slab(&mut c),
        "tmtp verify" => tmtp_verify(&mut c),
        "tmtp mu" => tmtp_mu(&mut c),
        "tmtp harmonic" => tmtp_harmonic(&mut c),
        "tmtp cocycle" => tmtp_cocycle(&mut c),
        "perc sample" => perc_sample(&mut c),
        "perc clusters" => perc_clusters(&mut c),
        "perc connect" => perc_connect(&mut c),
        "perc decay" => perc_decay(&mut c),
        "perc mass" => perc_mass(&mut c),
        "perc ray-decoration" => perc_ray(&mut c),
        "walk kernel" => walk_kernel(&mut c),
        "walk simulate" => walk_simulate(&mut c),
        "walk stationarity" => walk_stationarity(&mut c),
        "walk frequency" => walk_frequency(&mut c),
        "walk conductance" => walk_conductance(&mut c),
        "threshold ph" => threshold_ph(&mut c),
        "threshold slab-spectral" => threshold_slab(&mut c),
        "threshold scan" => threshold_scan(&mut c),
        "threshold pu-bound" => threshold_pu(&mut c),
        other => Err(CliError::Usage(format!("unknown subcommand {other:?}"))),
    };
    (c.spec, out)
}

fn scalar_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn render_csv(spec: &RunSpec, outcome: &Outcome, wall: Option<f64>) -> CliResult<String> {
    let rows: Vec<Value> = match &outcome.rows {
        Some(r) => r.clone(),
        None => vec![outcome.result.clone()],
    };
    let mut text = String::new();
    text.push_str(&format!(
        "# {} {}\n",
        crate::report::TOOL_NAME,
        crate::report::TOOL_VERSION
    ));
    text.push_str(&format!(
        "# run {}\n",
        serde_json::to_string(spec).map_err(Error::from)?
    ));
    if let Some(t) = wall {
        text.push_str(&format!("# wall_time_s {t}\n"));
    }
    let headers: Vec<String> = match rows.first() {
        Some(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Failure(Error::Io(e.to_string()));
    w.write_record(&headers).map_err(io)?;
    for row in &rows {
        let obj: Map<String, Value> = row.as_object().cloned().unwrap_or_default();
        let record: Vec<String> = headers
            .iter()
            .map(|h| obj.get(h).map(scalar_cell).unwrap_or_default())
            .collect();
        w.write_record(&record).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Failure(Error::Io(e.to_string())))?;
    text.push_str(&String::from_utf8_lossy(&bytes));
    Ok(text)
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Default, Clone)]
struct Common {
    /// Seed for all random streams (generated and recorded when omitted).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo trials.
    #[arg(long)]
    trials: Option<u64>,
    /// Size of the worker pool; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Report format: json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Config file of key=value lines; flags take precedence.
    #[arg(long)]
    config: Option<String>,
    /// Embed the wall time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug, Default, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
struct FamilyArgs {
    /// fixed-end-tree, oriented-tree, grandparent, diestel-leader,
    /// subdivided-tree, lattice, checkerboard or product.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    b: Option<u32>,
    #[arg(long)]
    n1: Option<u32>,
    #[arg(long)]
    n2: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    dim: Option<u32>,
    /// Base family of a product with `Z^dim`.
    #[arg(long)]
    base_family: Option<String>,
}

macro_rules! op_args {
    ($name:ident { $($(#[$m:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Args, Debug, Default, Clone, Serialize)]
        #[serde(rename_all = "kebab-case")]
        struct $name {
            $($(#[$m])* #[arg(long)] $field: Option<$ty>,)*
        }
    };
}

op_args!(BallArgs {
    radius: u32,
    emit_window: bool
});
op_args!(SlabArgs {
    n_levels: u32,
    depth: u32,
    emit_window: bool
});
op_args!(VerifyArgs {
    /// suite, identity, adjacency, level-step or sphere-level.
    transport: String,
    step: i64,
    sphere_radius: u32,
    offset: i64,
    /// mu, uniform, or comma-separated rationals.
    weights: String,
});
op_args!(WeightsArgs { weights: String });
op_args!(HarmonicArgs {
    radius: u32,
    weights: String,
    /// unit, sqrt or level-offset.
    conductance: String,
    /// For level-offset: `offset:value` pairs, e.g. `1:3,2:1/7`.
    offset_values: String,
});
op_args!(SampleArgs {
    radius: u32,
    p: f64,
    emit_config: bool
});
op_args!(ClusterArgs {
    radius: u32,
    p: f64
});
op_args!(ConnectArgs {
    p: f64,
    distance: u32,
    margin: u32
});
op_args!(DecayArgs {
    p: f64,
    max_distance: u32,
    margin: u32
});
op_args!(MassArgs {
    radius: u32,
    p: f64,
    radii: String
});
op_args!(RayArgs {
    b: u32,
    radius: u32,
    radii: String
});
op_args!(KernelArgs {
    radius: u32,
    p: f64,
    vertex: usize,
    kind: String
});
op_args!(SimulateArgs {
    radius: u32,
    p: f64,
    steps: u64,
    back_steps: u64,
    policy: String
});
op_args!(StationarityArgs {
    radius: u32,
    p: f64
});
op_args!(FrequencyArgs {
    radius: u32,
    p: f64,
    set_p: f64,
    steps: u64
});
op_args!(ConductanceArgs {
    radius: u32,
    p: f64,
    radii: String,
    weight: String
});
op_args!(PhArgs { n1: u32, n2: u32 });
op_args!(SlabSpectralArgs {
    n1: u32,
    n2: u32,
    n: u32,
    tol: f64
});
op_args!(ScanArgs {
    n1: u32,
    n2: u32,
    n_max: u32,
    tol: f64
});
op_args!(PuArgs { b: u32 });

#[derive(Parser, Debug)]
#[command(
    name = "perclab",
    version,
    about = "Percolation laboratory for nonunimodular graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Graph families and windows.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Tilted mass-transport checks.
    #[command(subcommand)]
    Tmtp(TmtpCmd),
    /// Bond percolation.
    #[command(subcommand)]
    Perc(PercCmd),
    /// Square-root-biased walks.
    #[command(subcommand)]
    Walk(WalkCmd),
    /// Thresholds of oriented trees.
    #[command(subcommand)]
    Threshold(ThresholdCmd),
    /// Re-run the RunSpec embedded in a JSON report.
    Replay {
        report: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct WithFamily<T: Args> {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    op: T,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Plain<T: Args> {
    #[command(flatten)]
    op: T,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum GraphCmd {
    /// Orbits, degrees, modular base and origin neighborhoods.
    Info(WithFamily<NoArgs>),
    /// Ball around the origin.
    Ball(WithFamily<BallArgs>),
    /// Slab component of the origin.
    Slab(WithFamily<SlabArgs>),
}

#[derive(Subcommand, Debug)]
enum TmtpCmd {
    /// Exact tilted mass transport for one transport or the bundled suite.
    Verify(WithFamily<VerifyArgs>),
    /// Harmonic orbit weights, by biasing and by elimination.
    Mu(WithFamily<NoArgs>),
    /// Harmonicity residual of the modular function on a ball.
    Harmonic(WithFamily<HarmonicArgs>),
    /// Cocycle identity on random triples.
    Cocycle(WithFamily<WeightsArgs>),
}

#[derive(Subcommand, Debug)]
enum PercCmd {
    /// One configuration on a ball.
    Sample(WithFamily<SampleArgs>),
    /// Cluster decomposition of one configuration.
    Clusters(WithFamily<ClusterArgs>),
    /// Two-point connectivity at a given distance.
    Connect(WithFamily<ConnectArgs>),
    /// Connectivity along a geodesic.
    Decay(WithFamily<DecayArgs>),
    /// Tilted mass of the origin's cluster.
    Mass(WithFamily<MassArgs>),
    /// Ray-decoration process on a fixed-end tree.
    RayDecoration(Plain<RayArgs>),
}

#[derive(Subcommand, Debug)]
enum WalkCmd {
    /// Exact transition probabilities at a vertex.
    Kernel(WithFamily<KernelArgs>),
    /// Two-sided trajectory from the origin.
    Simulate(WithFamily<SimulateArgs>),
    /// Exact stationarity and detailed balance.
    Stationarity(WithFamily<StationarityArgs>),
    /// Forward and backward visit frequencies.
    Frequency(WithFamily<FrequencyArgs>),
    /// Effective conductance to spheres.
    Conductance(WithFamily<ConductanceArgs>),
}

#[derive(Subcommand, Debug)]
enum ThresholdCmd {
    /// Closed form for p_h.
    Ph(Plain<PhArgs>),
    /// Perron root of one slab.
    SlabSpectral(Plain<SlabSpectralArgs>),
    /// 1/λ* over slabs n = 1..n_max.
    Scan(Plain<ScanArgs>),
    /// Lower bound for p_u of T_{b+1} × Z.
    PuBound(Plain<PuArgs>),
}

#[derive(Args, Debug, Default, Clone, Serialize)]
struct NoArgs {}

fn flag_map<T: Serialize>(v: &T, out: &mut BTreeMap<String, String>) {
    if let Ok(Value::Object(m)) = serde_json::to_value(v) {
        for (k, v) in m {
            if v.is_null() {
                continue;
            }
            out.insert(k, scalar_cell(&v));
        }
    }
}

fn common_map(c: &Common, out: &mut BTreeMap<String, String>) {
    if let Some(s) = c.seed {
        out.insert("seed".into(), s.to_string());
    }
    if let Some(t) = c.trials {
        out.insert("trials".into(), t.to_string());
    }
    if let Some(f) = &c.format {
        out.insert("format".into(), f.clone());
    }
    if let Some(o) = &c.out {
        out.insert("out".into(), o.clone());
    }
}

fn family_flags(f: &FamilyArgs, out: &mut BTreeMap<String, String>) {
    flag_map(f, out);
}

enum Invocation {
    Run {
        name: &'static str,
        flags: BTreeMap<String, String>,
        common: Common,
    },
    Replay {
        report: String,
        common: Common,
    },
}

fn with_family<T: Args + Serialize>(name: &'static str, a: WithFamily<T>) -> Invocation {
    let mut flags = BTreeMap::new();
    family_flags(&a.family, &mut flags);
    flag_map(&a.op, &mut flags);
    common_map(&a.common, &mut flags);
    Invocation::Run {
        name,
        flags,
        common: a.common,
    }
}

fn plain<T: Args + Serialize>(name: &'static str, a: Plain<T>) -> Invocation {
    let mut flags = BTreeMap::new();
    flag_map(&a.op, &mut flags);
    common_map(&a.common, &mut flags);
    Invocation::Run {
        name,
        flags,
        common: a.common,
    }
}

fn invocation(cmd: Command) -> Invocation {
    match cmd {
        Command::Graph(g) => match g {
            GraphCmd::Info(a) => with_family("graph info", a),
            GraphCmd::Ball(a) => with_family("graph ball", a),
            GraphCmd::Slab(a) => with_family("graph slab", a),
        },
        Command::Tmtp(t) => match t {
            TmtpCmd::Verify(a) => with_family("tmtp verify", a),
            TmtpCmd::Mu(a) => with_family("tmtp mu", a),
            TmtpCmd::Harmonic(a) => with_family("tmtp harmonic", a),
            TmtpCmd::Cocycle(a) => with_family("tmtp cocycle", a),
        },
        Command::Perc(p) => match p {
            PercCmd::Sample(a) => with_family("perc sample", a),
            PercCmd::Clusters(a) => with_family("perc clusters", a),
            PercCmd::Connect(a) => with_family("perc connect", a),
            PercCmd::Decay(a) => with_family("perc decay", a),
            PercCmd::Mass(a) => with_family("perc mass", a),
            PercCmd::RayDecoration(a) => plain("perc ray-decoration", a),
        },
        Command::Walk(w) => match w {
            WalkCmd::Kernel(a) => with_family("walk kernel", a),
            WalkCmd::Simulate(a) => with_family("walk simulate", a),
            WalkCmd::Stationarity(a) => with_family("walk stationarity", a),
            WalkCmd::Frequency(a) => with_family("walk frequency", a),
            WalkCmd::Conductance(a) => with_family("walk conductance", a),
        },
        Command::Threshold(t) => match t {
            ThresholdCmd::Ph(a) => plain("threshold ph", a),
            ThresholdCmd::SlabSpectral(a) => plain("threshold slab-spectral", a),
            ThresholdCmd::Scan(a) => plain("threshold scan", a),
            ThresholdCmd::PuBound(a) => plain("threshold pu-bound", a),
        },
        Command::Replay { report, common } => Invocation::Replay { report, common },
    }
}

fn emit(
    spec: &RunSpec,
    outcome: &Outcome,
    wall: f64,
    timing: bool,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let wall_field = timing.then_some(wall);
    let text = match spec.format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&envelope(spec, outcome.result.clone(), wall_field))
                    .map_err(Error::from)?;
            s.push('\n');
            s
        }
        Format::Csv => render_csv(spec, outcome, wall_field)?,
    };
    match &spec.output_path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Failure(e.into())),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failure(e.into())),
    }
}

fn run_spec(spec: RunSpec, common: &Common, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let job = || execute(spec);
    let (spec, outcome) = match common.workers {
        Some(0) => {
            let _ = writeln!(stderr, "usage error: --workers must be positive");
            return EXIT_USAGE;
        }
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(job),
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot start worker pool: {e}");
                return EXIT_FAILURE;
            }
        },
        None => job(),
    };
    let wall = start.elapsed().as_secs_f64();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Failure(_) => EXIT_FAILURE,
            };
        }
    };
    if let Err(e) = emit(&spec, &outcome, wall, common.timing, stdout) {
        let _ = writeln!(stderr, "{e}");
        return EXIT_FAILURE;
    }
    match outcome.failed {
        Some(what) => {
            let _ = writeln!(stderr, "check failed: {what}");
            EXIT_FAILURE
        }
        None => EXIT_OK,
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn dispatch_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match invocation(cli.command) {
        Invocation::Run {
            name,
            flags,
            common,
        } => match load_runspec(name, common.config.as_deref(), flags) {
            Ok(spec) => run_spec(spec, &common, stdout, stderr),
            Err(e) => {
                let _ = writeln!(stderr, "{e}");
                EXIT_USAGE
            }
        },
        Invocation::Replay { report, common } => {
            let spec = std::fs::read_to_string(&report)
                .map_err(|e| format!("cannot read {report}: {e}"))
                .and_then(|t| serde_json::from_str::<Value>(&t).map_err(|e| e.to_string()))
                .and_then(|v| {
                    serde_json::from_value::<RunSpec>(v["run"].clone()).map_err(|e| e.to_string())
                });
            match spec {
                Ok(mut spec) => {
                    if let Some(o) = &common.out {
                        spec.output_path = Some(o.clone());
                    }
                    run_spec(spec, &common, stdout, stderr)
                }
                Err(e) => {
                    let _ = writeln!(stderr, "usage error: {e}");
                    EXIT_USAGE
                }
            }
        }
    }
}

pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    dispatch_with(argv, &mut out, &mut err)
}
