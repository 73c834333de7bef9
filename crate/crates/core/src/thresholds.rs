//! Percolation thresholds of oriented trees: the closed form for `p_h`,
//! spectral radii of slab trees and the cogrowth bound for `p_u` on
//! `T_{b+1} × Z`.
//!
//! The component of the origin in a slab of `n + 1` consecutive levels of
//! the `(1, n1, n2)`-oriented tree is a periodic tree. Its vertex types are
//! pairs (level inside the slab, type of the edge through which the vertex
//! was entered), and `p_c` of the slab is the inverse of the Perron root of
//! the type matrix.

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rat, Rational};
use crate::graphs::{slab_component, FamilyKind, GraphFamily};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;
pub const SELF_TEST_DEPTH: u32 = 12;
/// Vertex budget of the direct BFS in the construction self-test.
pub const SELF_TEST_BUDGET: u128 = 250_000;
pub const GROWTH_DEPTH: u32 = 18;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhClosedForm {
    pub n1: u32,
    pub n2: u32,
    pub value: f64,
    /// `1/(2k)` when `n1 = n2 = k`.
    #[serde(with = "opt_rational")]
    pub exact: Option<Rational>,
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::exact::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| {
                parse_rational(&t)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {t:?}")))
            })
            .transpose()
    }
}

/// `p_h` of `T_{n1+n2+1}` with the `(1, n1, n2)` orientation:
/// `(1 + 2s − √((2s + 1)² − 4(n1 + n2))) / (2(n1 + n2))` with `s = √(n1 n2)`.
pub fn ph_closed_form(n1: u32, n2: u32) -> Result<PhClosedForm> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Parameter("n1 and n2 must be at least 1".into()));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let s = (a * b).sqrt();
    let value =
        (1.0 + 2.0 * s - ((2.0 * s + 1.0).powi(2) - 4.0 * (a + b)).sqrt()) / (2.0 * (a + b));
    // With n1 = n2 = k the discriminant is (2k - 1)², so p_h = 1/(2k).
    let exact = (n1 == n2).then(|| rat(1, 2 * n1 as i64));
    Ok(PhClosedForm {
        n1,
        n2,
        value,
        exact,
    })
}

/// `1/(√b + 1 + √(2√b − 1))`.
pub fn pu_lower_bound(b: u32) -> Result<f64> {
    if b < 2 {
        return Err(Error::Parameter("b must be at least 2".into()));
    }
    let r = (b as f64).sqrt();
    Ok(1.0 / (r + 1.0 + (2.0 * r - 1.0).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entry {
    Unoriented,
    Forward,
    Backward,
    Root,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlabState {
    pub level: u32,
    pub entry: Entry,
}

/// Type graph of the slab tree: `children[s]` lists `(t, count)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlabStateGraph {
    pub n1: u32,
    pub n2: u32,
    pub n: u32,
    pub states: Vec<SlabState>,
    pub children: Vec<Vec<(usize, u64)>>,
    pub root: usize,
}

fn child_counts(n1: u32, n2: u32, n: u32, s: SlabState) -> Vec<(SlabState, u64)> {
    let i = s.level;
    let mut out = Vec::new();
    if s.entry != Entry::Unoriented {
        out.push((
            SlabState {
                level: i,
                entry: Entry::Unoriented,
            },
            1,
        ));
    }
    if i < n {
        let c = if s.entry == Entry::Backward {
            n1 - 1
        } else {
            n1
        };
        if c > 0 {
            out.push((
                SlabState {
                    level: i + 1,
                    entry: Entry::Forward,
                },
                c as u64,
            ));
        }
    }
    if i > 0 {
        let c = if s.entry == Entry::Forward {
            n2 - 1
        } else {
            n2
        };
        if c > 0 {
            out.push((
                SlabState {
                    level: i - 1,
                    entry: Entry::Backward,
                },
                c as u64,
            ));
        }
    }
    out
}

impl SlabStateGraph {
    /// Type graph without the BFS self-test.
    pub fn build(n1: u32, n2: u32, n: u32) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Parameter("n1 and n2 must be at least 1".into()));
        }
        let root = SlabState {
            level: 0,
            entry: Entry::Root,
        };
        let mut index = HashMap::from([(root, 0usize)]);
        let mut states = vec![root];
        let mut children = Vec::new();
        let mut head = 0;
        while head < states.len() {
            let s = states[head];
            let mut row = Vec::new();
            for (t, c) in child_counts(n1, n2, n, s) {
                let j = *index.entry(t).or_insert_with(|| {
                    states.push(t);
                    states.len() - 1
                });
                row.push((j, c));
            }
            children.push(row);
            head += 1;
        }
        Ok(SlabStateGraph {
            n1,
            n2,
            n,
            states,
            children,
            root: 0,
        })
    }

    /// Sphere sizes `|S_0|, …, |S_depth|` of the slab tree.
    pub fn sphere_sizes(&self, depth: u32) -> Vec<u128> {
        let mut counts = vec![0u128; self.states.len()];
        counts[self.root] = 1;
        let mut out = vec![1u128];
        for _ in 0..depth {
            let mut next = vec![0u128; counts.len()];
            for (s, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &(t, k) in &self.children[s] {
                    next[t] += c * k as u128;
                }
            }
            counts = next;
            out.push(counts.iter().sum());
        }
        out
    }

    /// Compares sphere sizes with a direct BFS of the slab component.
    pub fn self_test(&self, depth: u32) -> Result<()> {
        let g = GraphFamily::new(FamilyKind::OrientedTree {
            n1: self.n1,
            n2: self.n2,
        })?;
        let win = slab_component(&g, &g.origin(), self.n, depth)?;
        let direct: Vec<u128> = win.sphere_sizes().into_iter().map(|c| c as u128).collect();
        let mut typed = self.sphere_sizes(depth);
        while typed.last() == Some(&0) && typed.len() > direct.len() {
            typed.pop();
        }
        if typed != direct {
            return Err(Error::Construction(format!(
                "slab ({},{}) n = {}: type graph spheres {typed:?} != BFS spheres {direct:?}",
                self.n1, self.n2, self.n
            )));
        }
        Ok(())
    }

    /// Largest depth `≤ SELF_TEST_DEPTH` whose ball fits the self-test budget.
    pub fn self_test_depth(&self) -> u32 {
        let sizes = self.sphere_sizes(SELF_TEST_DEPTH);
        let mut total = 0u128;
        for (d, s) in sizes.iter().enumerate() {
            total += s;
            if total > SELF_TEST_BUDGET {
                return d.saturating_sub(1) as u32;
            }
        }
        SELF_TEST_DEPTH
    }

    /// Whether the count matrix is invariant under `i ↦ n − i` with
    /// forward and backward entries swapped.
    pub fn is_reflection_symmetric(&self) -> bool {
        let reflect = |s: SlabState| SlabState {
            level: self.n - s.level,
            entry: match s.entry {
                Entry::Forward => Entry::Backward,
                Entry::Backward => Entry::Forward,
                e => e,
            },
        };
        let index: HashMap<SlabState, usize> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i))
            .collect();
        let edges: HashMap<(SlabState, SlabState), u64> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.iter().map(move |&(t, c)| ((s, t), c)))
            .map(|((s, t), c)| ((self.states[s], self.states[t]), c))
            .collect();
        edges.iter().all(|(&(s, t), &c)| {
            if s.entry == Entry::Root {
                return true;
            }
            let (rs, rt) = (reflect(s), reflect(t));
            index.contains_key(&rs) && edges.get(&(rs, rt)) == Some(&c)
        })
    }

    /// Row sums of the count matrix over non-root states.
    pub fn row_sum_bounds(&self) -> (u64, u64) {
        let sums: Vec<u64> = (0..self.states.len())
            .filter(|&s| s != self.root)
            .map(|s| self.children[s].iter().map(|&(_, c)| c).sum())
            .collect();
        (
            sums.iter().copied().min().unwrap_or(0),
            sums.iter().copied().max().unwrap_or(0),
        )
    }
}

/// Type graph of the slab of `n + 1` levels, validated against direct BFS
/// to depth [`SELF_TEST_DEPTH`] (less for fast-growing slabs, see
/// [`SlabStateGraph::self_test_depth`]).
pub fn slab_state_graph(n1: u32, n2: u32, n: u32) -> Result<SlabStateGraph> {
    let sg = SlabStateGraph::build(n1, n2, n)?;
    sg.self_test(sg.self_test_depth())?;
    Ok(sg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub lambda_star: f64,
    /// Collatz–Wielandt bracket at termination.
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

/// Perron root of one strongly connected block by power iteration on
/// `A + I` after the level similarity `A ↦ D A D⁻¹`, `D = diag(√(n1/n2)^level)`,
/// which makes forward and backward entries comparable.
fn block_perron(
    sg: &SlabStateGraph,
    block: &[usize],
    tol: f64,
    max_iterations: usize,
) -> Result<SpectralResult> {
    let local: HashMap<usize, usize> = block.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let r = (sg.n1 as f64 / sg.n2 as f64).sqrt();
    let rows: Vec<Vec<(usize, f64)>> = block
        .iter()
        .map(|&s| {
            sg.children[s]
                .iter()
                .filter_map(|&(t, c)| {
                    let k = *local.get(&t)?;
                    let shift = sg.states[s].level as i32 - sg.states[t].level as i32;
                    Some((k, c as f64 * r.powi(shift)))
                })
                .collect()
        })
        .collect();
    let m = block.len();
    let mut x = vec![1.0; m];
    let mut y = vec![0.0; m];
    for it in 1..=max_iterations {
        // y = (A + I) x, with A acting on the right: y_s = x_s + Σ_t A[s,t] x_t.
        for s in 0..m {
            y[s] = x[s] + rows[s].iter().map(|&(t, a)| a * x[t]).sum::<f64>();
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for s in 0..m {
            let ratio = y[s] / x[s];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let norm = y.iter().fold(0.0f64, |a, &v| a.max(v));
        for s in 0..m {
            x[s] = y[s] / norm;
        }
        if hi - lo <= tol * lo {
            return Ok(SpectralResult {
                lambda_star: 0.5 * (lo + hi) - 1.0,
                lower: lo - 1.0,
                upper: hi - 1.0,
                iterations: it,
            });
        }
        if it == max_iterations {
            return Err(Error::Numeric {
                message: format!("power iteration did not converge in {max_iterations} iterations"),
                residual: (hi - lo) / lo,
            });
        }
    }
    unreachable!()
}

/// Largest Perron root over the recurrent blocks of the type graph.
pub fn slab_spectral_radius(
    sg: &SlabStateGraph,
    tol: f64,
    max_iterations: usize,
) -> Result<SpectralResult> {
    if sg.n == 0 {
        return Err(Error::DegenerateSlab);
    }
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..sg.states.len()).map(|s| graph.add_node(s)).collect();
    for (s, row) in sg.children.iter().enumerate() {
        for &(t, _) in row {
            graph.add_edge(nodes[s], nodes[t], ());
        }
    }
    let mut best: Option<SpectralResult> = None;
    for comp in tarjan_scc(&graph) {
        let block: Vec<usize> = comp.iter().map(|&ix| graph[ix]).collect();
        let recurrent =
            block.len() > 1 || sg.children[block[0]].iter().any(|&(t, _)| t == block[0]);
        if !recurrent {
            continue;
        }
        let res = block_perron(sg, &block, tol, max_iterations)?;
        if best.is_none_or(|b| res.lambda_star > b.lambda_star) {
            best = Some(res);
        }
    }
    best.ok_or(Error::DegenerateSlab)
}

/// Growth estimate `(|S_d| / |S_{d−4}|)^{1/4}`. The even span cancels the
/// period-two oscillation of sphere sizes; two steps are not enough for thin
/// slabs, whose type graphs have slowly decaying oscillating modes.
pub fn bfs_growth_estimate(sg: &SlabStateGraph, depth: u32) -> f64 {
    const SPAN: usize = 4;
    let s = sg.sphere_sizes(depth);
    let d = depth as usize;
    if d < SPAN || s[d - SPAN] == 0 {
        return 0.0;
    }
    (s[d] as f64 / s[d - SPAN] as f64).powf(1.0 / SPAN as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u32,
    pub states: usize,
    pub lambda_star: f64,
    pub inv_lambda: f64,
    pub bfs_estimate: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n1: u32,
    pub n2: u32,
    pub rows: Vec<ScanRow>,
    pub closed_form: f64,
    pub monotone: bool,
    /// `inv_lambda` of the last row minus the closed form.
    pub terminal_gap: f64,
}

impl SpectralReport {
    /// Smallest `n` whose gap to the closed form is at most `gap`.
    pub fn first_n_within(&self, gap: f64) -> Option<u32> {
        self.rows
            .iter()
            .find(|r| r.inv_lambda - self.closed_form <= gap)
            .map(|r| r.n)
    }
}

pub const MONOTONE_SLACK: f64 = 1e-9;

/// `1/λ*` of slabs `n = 1..=n_max`, validated and compared with the closed
/// form. Fails if the sequence increases by more than [`MONOTONE_SLACK`].
pub fn ph_limit_scan(n1: u32, n2: u32, n_max: u32, tol: f64) -> Result<SpectralReport> {
    if n_max < 2 {
        return Err(Error::Parameter("n_max must be at least 2".into()));
    }
    let closed_form = ph_closed_form(n1, n2)?.value;
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let sg = if n <= SELF_TEST_DEPTH {
            slab_state_graph(n1, n2, n)?
        } else {
            // Beyond the self-test depth the BFS cannot see the top level,
            // so the check would repeat the one at n = SELF_TEST_DEPTH.
            SlabStateGraph::build(n1, n2, n)?
        };
        let spec = slab_spectral_radius(&sg, tol, DEFAULT_MAX_ITERATIONS)?;
        rows.push(ScanRow {
            n,
            states: sg.states.len(),
            lambda_star: spec.lambda_star,
            inv_lambda: 1.0 / spec.lambda_star,
            bfs_estimate: bfs_growth_estimate(&sg, GROWTH_DEPTH),
            iterations: spec.iterations,
        });
    }
    for w in rows.windows(2) {
        if w[1].inv_lambda > w[0].inv_lambda + MONOTONE_SLACK {
            return Err(Error::Numeric {
                message: format!("1/λ* increases from n = {} to n = {}", w[0].n, w[1].n),
                residual: w[1].inv_lambda - w[0].inv_lambda,
            });
        }
    }
    let terminal_gap = rows.last().unwrap().inv_lambda - closed_form;
    Ok(SpectralReport {
        n1,
        n2,
        rows,
        closed_form,
        monotone: true,
        terminal_gap,
    })
}
