use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::family::{FamilyKind, GraphFamily, VertexRef};
use crate::error::{Error, Result};

pub const WINDOW_FORMAT_VERSION: u32 = 1;

/// Default cap on the number of enumerated vertices.
pub const DEFAULT_MAX_VERTICES: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WindowKind {
    Ball { radius: u32 },
    SlabComponent { n_levels: u32, depth: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub multiplicity: u32,
}

/// Finite canonical enumeration of a ball or a slab component.
///
/// Vertices are in BFS order from the center (neighbors visited in the
/// family's order); edges are sorted by `(u, v)` with `u < v`. A vertex is on
/// the boundary when one of its neighbors in the ambient graph (the whole
/// family for balls, the level slab for slab components) is missing.
#[derive(Clone, Debug)]
pub struct Window {
    pub family: GraphFamily,
    pub center: VertexRef,
    pub kind: WindowKind,
    pub vertices: Vec<VertexRef>,
    pub edges: Vec<Edge>,
    pub boundary: Vec<usize>,
    distance: Vec<u32>,
    is_boundary: Vec<bool>,
    adjacency: Vec<Vec<(usize, usize)>>,
    index: HashMap<VertexRef, usize>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: &VertexRef) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// BFS distance from the center inside the ambient graph.
    pub fn distance(&self, i: usize) -> u32 {
        self.distance[i]
    }

    pub fn distances(&self) -> &[u32] {
        &self.distance
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    /// `(neighbor index, edge index)` pairs of vertex `i` inside the window.
    pub fn adjacent(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.is_boundary[i])
    }

    /// Sphere sizes `|{v : d(center, v) = r}|` for `r = 0..=max distance`.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let max = self.distance.iter().copied().max().unwrap_or(0) as usize;
        let mut out = vec![0; max + 1];
        for &d in &self.distance {
            out[d as usize] += 1;
        }
        out
    }

    /// BFS distances from an arbitrary window vertex along window edges.
    pub fn distances_from(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for &(y, _) in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    fn from_parts(
        family: GraphFamily,
        center: VertexRef,
        kind: WindowKind,
        vertices: Vec<VertexRef>,
        edges: Vec<Edge>,
        boundary: Vec<usize>,
        distance: Vec<u32>,
    ) -> Result<Self> {
        let n = vertices.len();
        if distance.len() != n {
            return Err(Error::Parameter("distance list length mismatch".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::Parameter(format!("duplicate vertex at {i}")));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            if edge.u >= n || edge.v >= n || edge.multiplicity == 0 {
                return Err(Error::Parameter(format!("edge {e} is out of range")));
            }
            adjacency[edge.u].push((edge.v, e));
            adjacency[edge.v].push((edge.u, e));
        }
        let mut is_boundary = vec![false; n];
        for &b in &boundary {
            if b >= n {
                return Err(Error::Parameter(format!("boundary index {b} out of range")));
            }
            is_boundary[b] = true;
        }
        Ok(Window {
            family,
            center,
            kind,
            vertices,
            edges,
            boundary,
            distance,
            is_boundary,
            adjacency,
            index,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = WindowDoc {
            version: WINDOW_FORMAT_VERSION,
            family: self.family.kind.clone(),
            center: self.center.clone(),
            kind: self.kind,
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| [e.u, e.v, e.multiplicity as usize])
                .collect(),
            boundary: self.boundary.clone(),
            distance: self.distance.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: WindowDoc = serde_json::from_str(text)?;
        if doc.version != WINDOW_FORMAT_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported window format version {}",
                doc.version
            )));
        }
        let family = GraphFamily::new(doc.family)?;
        for v in doc.vertices.iter().chain(std::iter::once(&doc.center)) {
            family.validate(v)?;
        }
        let edges = doc
            .edges
            .iter()
            .map(|&[u, v, m]| Edge {
                u,
                v,
                multiplicity: m as u32,
            })
            .collect();
        Window::from_parts(
            family,
            doc.center,
            doc.kind,
            doc.vertices,
            edges,
            doc.boundary,
            doc.distance,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct WindowDoc {
    version: u32,
    family: FamilyKind,
    center: VertexRef,
    kind: WindowKind,
    vertices: Vec<VertexRef>,
    edges: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    distance: Vec<u32>,
}

/// Vertices, edges, boundary indices and distances of an exploration.
type Explored = (Vec<VertexRef>, Vec<Edge>, Vec<usize>, Vec<u32>);

fn explore(
    g: &GraphFamily,
    center: &VertexRef,
    max_depth: u32,
    keep: impl Fn(&VertexRef) -> bool,
    max_vertices: usize,
) -> Result<Explored> {
    g.validate(center)?;
    let mut vertices = vec![center.clone()];
    let mut distance = vec![0u32];
    let mut index: HashMap<VertexRef, usize> = HashMap::new();
    index.insert(center.clone(), 0);
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut boundary = Vec::new();
    let mut head = 0;
    while head < vertices.len() {
        let d = distance[head];
        let mut row = Vec::with_capacity(g.degree(&vertices[head]));
        let mut outside = false;
        for nb in g.neighbors_unchecked(&vertices[head]) {
            if !keep(&nb) {
                continue;
            }
            match index.get(&nb) {
                Some(&j) => row.push(j),
                None if d < max_depth => {
                    if vertices.len() >= max_vertices {
                        return Err(Error::Resource(format!(
                            "window exceeds {max_vertices} vertices"
                        )));
                    }
                    let j = vertices.len();
                    index.insert(nb.clone(), j);
                    vertices.push(nb);
                    distance.push(d + 1);
                    row.push(j);
                }
                None => outside = true,
            }
        }
        if outside {
            boundary.push(head);
        }
        rows.push(row);
        head += 1;
    }
    let mut edges = Vec::new();
    for (i, row) in rows.iter_mut().enumerate() {
        row.sort_unstable();
        let mut k = 0;
        while k < row.len() {
            let j = row[k];
            let mut mult = 0;
            while k < row.len() && row[k] == j {
                mult += 1;
                k += 1;
            }
            if i < j {
                edges.push(Edge {
                    u: i,
                    v: j,
                    multiplicity: mult,
                });
            }
        }
    }
    Ok((vertices, edges, boundary, distance))
}

/// `B(o, radius)` with the default vertex budget.
pub fn ball(g: &GraphFamily, o: &VertexRef, radius: u32) -> Result<Window> {
    ball_with_budget(g, o, radius, DEFAULT_MAX_VERTICES)
}

pub fn ball_with_budget(
    g: &GraphFamily,
    o: &VertexRef,
    radius: u32,
    max_vertices: usize,
) -> Result<Window> {
    let (vertices, edges, boundary, distance) = explore(g, o, radius, |_| true, max_vertices)?;
    Window::from_parts(
        g.clone(),
        o.clone(),
        WindowKind::Ball { radius },
        vertices,
        edges,
        boundary,
        distance,
    )
}

/// BFS exploration to `depth` of the component of `o` inside the levels
/// `level(o) ..= level(o) + n_levels`.
pub fn slab_component(g: &GraphFamily, o: &VertexRef, n_levels: u32, depth: u32) -> Result<Window> {
    slab_component_with_budget(g, o, n_levels, depth, DEFAULT_MAX_VERTICES)
}

pub fn slab_component_with_budget(
    g: &GraphFamily,
    o: &VertexRef,
    n_levels: u32,
    depth: u32,
    max_vertices: usize,
) -> Result<Window> {
    // Oriented trees with n1 = n2 are unimodular but keep their height
    // function, so only families whose levels are all equal are rejected.
    if g.neighbors_unchecked(o).iter().all(|v| v.level == o.level) {
        return Err(Error::Unsupported(format!(
            "{} has a single level; slabs need a level structure",
            g.kind
        )));
    }
    let lo = o.level;
    let hi = o.level + n_levels as i64;
    let (vertices, edges, boundary, distance) =
        explore(g, o, depth, |v| (lo..=hi).contains(&v.level), max_vertices)?;
    Window::from_parts(
        g.clone(),
        o.clone(),
        WindowKind::SlabComponent { n_levels, depth },
        vertices,
        edges,
        boundary,
        distance,
    )
}

/// Vertices at distances `1..=len` from `o` along a geodesic that always
/// takes the first distance-increasing neighbor.
pub fn geodesic_targets(g: &GraphFamily, o: &VertexRef, len: u32) -> Result<Vec<VertexRef>> {
    let win = ball(g, o, len)?;
    let mut out = Vec::with_capacity(len as usize);
    let mut cur = 0usize;
    for step in 1..=len {
        let next = g
            .neighbors_unchecked(&win.vertices[cur])
            .into_iter()
            .filter_map(|nb| win.index_of(&nb))
            .find(|&j| win.distance(j) == step)
            .ok_or_else(|| Error::Precondition(format!("no vertex at distance {step}")))?;
        out.push(win.vertices[next].clone());
        cur = next;
    }
    Ok(out)
}
