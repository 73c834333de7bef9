//! Exact checks of the tilted mass-transport principle.
//!
//! Everything here is exact: modular ratios are rationals and square-root
//! conductances live in `Q(√q)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{int, QuadField, Rational, Surd};
use crate::graphs::{
    ball, modular_ratio_unchecked, sqrt_measure_product, GraphFamily, OrbitWeights, VertexRef,
    Window,
};
use crate::linear;
use crate::report::rational_vec;
use crate::rng;

/// The lazy Markov chain induced on orbits by simple random walk.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitChain {
    pub transition: Vec<Vec<Rational>>,
    pub stationary: Vec<Rational>,
}

/// Number of neighbors of `o_i` lying in each orbit.
fn orbit_neighbor_counts(g: &GraphFamily) -> Vec<Vec<usize>> {
    (0..g.orbit_count)
        .map(|i| {
            let mut row = vec![0; g.orbit_count];
            for nb in g.neighbors_unchecked(&g.representative(i)) {
                row[nb.orbit] += 1;
            }
            row
        })
        .collect()
}

pub fn lazy_orbit_chain(g: &GraphFamily) -> OrbitChain {
    let l = g.orbit_count;
    let counts = orbit_neighbor_counts(g);
    let half = Rational::new(1.into(), 2.into());
    let transition: Vec<Vec<Rational>> = (0..l)
        .map(|i| {
            let deg = int(g.orbit_degrees[i] as i64);
            (0..l)
                .map(|j| {
                    let step = int(counts[i][j] as i64) / (int(2) * &deg);
                    if i == j {
                        &half + step
                    } else {
                        step
                    }
                })
                .collect()
        })
        .collect();
    // π (P - I) = 0 with the last equation replaced by Σ π = 1.
    let mut a: Vec<Vec<Rational>> = (0..l)
        .map(|j| {
            (0..l)
                .map(|i| {
                    if i == j {
                        &transition[i][j] - Rational::one()
                    } else {
                        transition[i][j].clone()
                    }
                })
                .collect()
        })
        .collect();
    let mut b = vec![Rational::zero(); l];
    a[l - 1] = vec![Rational::one(); l];
    b[l - 1] = Rational::one();
    let stationary =
        linear::solve(&a, &b).expect("orbit chain of a connected graph is irreducible");
    OrbitChain {
        transition,
        stationary,
    }
}

/// The unique weights making `Δ(x, ·)` harmonic, computed two ways.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSolution {
    pub weights: OrbitWeights,
    /// Solution of the harmonicity system by exact elimination.
    #[serde(with = "rational_vec")]
    pub linear_solution: Vec<Rational>,
    /// `Σ_{z∼o_j} (μ_z m(z) − μ_j m(o_j))` for each orbit `j`.
    #[serde(with = "rational_vec")]
    pub residuals: Vec<Rational>,
}

impl MuSolution {
    pub fn routes_agree(&self) -> bool {
        self.weights.a == self.linear_solution
    }

    pub fn max_residual(&self) -> Rational {
        self.residuals
            .iter()
            .map(|r| r.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Coefficient rows of the harmonicity system: row `j` applied to `a`
/// gives `Σ_{z∼o_j} a_z m(z) − deg(o_j) a_j m(o_j)`.
fn harmonic_system(g: &GraphFamily) -> Vec<Vec<Rational>> {
    (0..g.orbit_count)
        .map(|j| {
            let y = g.representative(j);
            let mut row = vec![Rational::zero(); g.orbit_count];
            for z in g.neighbors_unchecked(&y) {
                row[z.orbit] += g.stabilizer_measure(&z);
            }
            row[j] -= int(g.orbit_degrees[j] as i64) * g.stabilizer_measure(&y);
            row
        })
        .collect()
}

pub fn solve_mu(g: &GraphFamily) -> Result<MuSolution> {
    let l = g.orbit_count;
    let chain = lazy_orbit_chain(g);
    let biased: Vec<Rational> = (0..l)
        .map(|i| &chain.stationary[i] / int(g.orbit_degrees[i] as i64))
        .collect();
    let total: Rational = biased.iter().sum();
    let mu: Vec<Rational> = biased.iter().map(|x| x / &total).collect();

    let system = harmonic_system(g);
    let mut linear_solution = None;
    for drop in (0..l).rev() {
        let mut a = system.clone();
        let mut b = vec![Rational::zero(); l];
        a[drop] = vec![Rational::one(); l];
        b[drop] = Rational::one();
        if let Some(x) = linear::solve(&a, &b) {
            linear_solution = Some(x);
            break;
        }
    }
    let linear_solution = linear_solution.ok_or_else(|| Error::Numeric {
        message: "harmonicity system has no unique normalized solution".into(),
        residual: f64::NAN,
    })?;
    let residuals = system
        .iter()
        .map(|row| row.iter().zip(&mu).map(|(c, a)| c * a).sum())
        .collect();
    Ok(MuSolution {
        weights: OrbitWeights::new(g, mu)?,
        linear_solution,
        residuals,
    })
}

/// Edge conductances for the harmonicity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Conductance {
    Unit,
    /// `c(y, z) = √(m(y) m(z))`.
    SqrtStabilizer,
    /// `c(y, z)` depends on `|level(z) − level(y)|`; missing offsets get 1.
    ByLevelOffset {
        #[serde(with = "offset_map")]
        values: BTreeMap<u64, Rational>,
    },
}

mod offset_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::exact::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(m: &BTreeMap<u64, Rational>, s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|(k, v)| (*k, format_rational(v)))
            .collect::<BTreeMap<u64, String>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<u64, Rational>, D::Error> {
        BTreeMap::<u64, String>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                parse_rational(&v)
                    .map(|r| (k, r))
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {v:?}")))
            })
            .collect()
    }
}

impl Conductance {
    fn value(
        &self,
        field: &QuadField,
        g: &GraphFamily,
        y: &VertexRef,
        z: &VertexRef,
    ) -> Result<Surd> {
        match self {
            Conductance::Unit => Ok(field.one()),
            Conductance::SqrtStabilizer => sqrt_measure_product(g, field, y, z),
            Conductance::ByLevelOffset { values } => {
                let off = (z.level - y.level).unsigned_abs();
                let c = values.get(&off).cloned().unwrap_or_else(Rational::one);
                if !c.is_positive() {
                    return Err(Error::Parameter("conductances must be positive".into()));
                }
                Ok(field.from_rational(c))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct HarmonicReport {
    /// Largest residual over the tested vertices.
    pub max_residual: Surd,
    pub tested: usize,
    /// Window index of a vertex attaining the maximum.
    pub argmax: Option<usize>,
}

impl HarmonicReport {
    pub fn is_exactly_zero(&self) -> bool {
        self.max_residual.is_zero()
    }
}

/// `max_y |Δ(x,y) − Σ_{z∼y} c(y,z) Δ(x,z) / Σ_{z∼y} c(y,z)|` over the
/// interior of `win`.
pub fn harmonicity_residual(
    g: &GraphFamily,
    w: &OrbitWeights,
    x: &VertexRef,
    win: &Window,
    c: &Conductance,
) -> Result<HarmonicReport> {
    g.validate(x)?;
    let interior: Vec<usize> = win.interior().collect();
    if interior.is_empty() {
        return Err(Error::Precondition(
            "window has no interior vertices".into(),
        ));
    }
    let field = QuadField::new(g.modular_base.clone());
    let residuals: Vec<(usize, Surd)> = interior
        .par_iter()
        .map(|&i| {
            let y = &win.vertices[i];
            let dy = modular_ratio_unchecked(g, w, x, y);
            let mut weighted = field.zero();
            let mut total = field.zero();
            for z in g.neighbors_unchecked(y) {
                let cz = c.value(&field, g, y, &z)?;
                let dz = modular_ratio_unchecked(g, w, x, &z);
                weighted = weighted + cz.scale(&dz);
                total = total + cz;
            }
            let diff = weighted - total.scale(&dy);
            Ok((i, (diff / total).abs()))
        })
        .collect::<Result<_>>()?;
    let (argmax, max_residual) = residuals
        .into_iter()
        .max_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(Ordering::Equal)
                .then(b.0.cmp(&a.0))
        })
        .expect("interior is nonempty");
    Ok(HarmonicReport {
        max_residual,
        tested: interior.len(),
        argmax: Some(argmax),
    })
}

/// A diagonally invariant transport with bounded support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transport {
    /// `1{u = v}`.
    Identity,
    /// Number of edges between `u` and `v`.
    Adjacency,
    /// Edges from `u` to a neighbor `step` levels higher.
    LevelStep { step: i64 },
    /// `1{d(u,v) = radius, level(v) − level(u) = offset}`.
    SphereLevel { radius: u32, offset: i64 },
}

impl Transport {
    pub fn name(&self) -> String {
        match self {
            Transport::Identity => "identity".into(),
            Transport::Adjacency => "adjacency".into(),
            Transport::LevelStep { step } => format!("level-step({step})"),
            Transport::SphereLevel { radius, offset } => {
                format!("sphere-level({radius},{offset})")
            }
        }
    }

    pub fn support_radius(&self) -> u32 {
        match self {
            Transport::Identity => 0,
            Transport::Adjacency | Transport::LevelStep { .. } => 1,
            Transport::SphereLevel { radius, .. } => *radius,
        }
    }

    /// `f(u, v)` given the graph distance `dist = d(u, v)`.
    pub fn evaluate(&self, g: &GraphFamily, u: &VertexRef, v: &VertexRef, dist: u32) -> Rational {
        let edges = || {
            g.neighbors_unchecked(u)
                .into_iter()
                .filter(|z| z == v)
                .count() as i64
        };
        let value = match self {
            Transport::Identity => (u == v) as i64,
            Transport::Adjacency => {
                if dist == 1 {
                    edges()
                } else {
                    0
                }
            }
            Transport::LevelStep { step } => {
                if dist == 1 && v.level - u.level == *step {
                    edges()
                } else {
                    0
                }
            }
            Transport::SphereLevel { radius, offset } => {
                (dist == *radius && v.level - u.level == *offset) as i64
            }
        };
        int(value)
    }
}

/// The bundled transports that are meaningful on `g`.
pub fn transport_suite(g: &GraphFamily) -> Vec<Transport> {
    let mut out = vec![Transport::Identity, Transport::Adjacency];
    if !g.is_unimodular() {
        out.push(Transport::LevelStep { step: 1 });
        out.push(Transport::LevelStep { step: 2 });
        out.push(Transport::SphereLevel {
            radius: 2,
            offset: 0,
        });
        out.push(Transport::SphereLevel {
            radius: 3,
            offset: 1,
        });
    } else {
        out.push(Transport::SphereLevel {
            radius: 2,
            offset: 0,
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmtpReport {
    pub transport: String,
    #[serde(with = "crate::report::rational_str")]
    pub lhs: Rational,
    #[serde(with = "crate::report::rational_str")]
    pub rhs: Rational,
    pub equal: bool,
}

/// `Σ_i a_i Σ_x f(o_i, x)` against `Σ_i a_i Σ_x f(x, o_i) Δ(o_i, x)`.
pub fn verify_tmtp(g: &GraphFamily, w: &OrbitWeights, f: &Transport) -> Result<TmtpReport> {
    let mut lhs = Rational::zero();
    let mut rhs = Rational::zero();
    for i in 0..g.orbit_count {
        let o = g.representative(i);
        let win = ball(g, &o, f.support_radius())?;
        let mut out_mass = Rational::zero();
        let mut in_mass = Rational::zero();
        for (k, x) in win.vertices.iter().enumerate() {
            let d = win.distance(k);
            out_mass += f.evaluate(g, &o, x, d);
            let back = f.evaluate(g, x, &o, d);
            if !back.is_zero() {
                in_mass += back * modular_ratio_unchecked(g, w, &o, x);
            }
        }
        lhs += &w.a[i] * out_mass;
        rhs += &w.a[i] * in_mass;
    }
    Ok(TmtpReport {
        transport: f.name(),
        equal: lhs == rhs,
        lhs,
        rhs,
    })
}

/// Largest `|Δ(x,y)Δ(y,z) − Δ(x,z)|` over random triples in `B(o, 4)`.
pub fn cocycle_check(
    g: &GraphFamily,
    w: &OrbitWeights,
    trials: u64,
    seed: u64,
) -> Result<Rational> {
    let win = ball(g, &g.origin(), 4)?;
    let mut rng = rng::stream(seed, 0);
    let mut worst = Rational::zero();
    for _ in 0..trials {
        let mut pick = || &win.vertices[rng.gen_range(0..win.len())];
        let (x, y, z) = (pick(), pick(), pick());
        let lhs = modular_ratio_unchecked(g, w, x, y) * modular_ratio_unchecked(g, w, y, z);
        let dev = (lhs - modular_ratio_unchecked(g, w, x, z)).abs();
        if dev > worst {
            worst = dev;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::graphs::FamilyKind;

    fn fam(kind: FamilyKind) -> GraphFamily {
        GraphFamily::new(kind).unwrap()
    }

    #[test]
    fn transitive_chain_is_trivial() {
        let g = fam(FamilyKind::Grandparent { b: 2 });
        let c = lazy_orbit_chain(&g);
        assert_eq!(c.stationary, vec![int(1)]);
        assert_eq!(c.transition, vec![vec![int(1)]]);
    }

    #[test]
    fn subdivided_tree_chain_and_mu() {
        let g = fam(FamilyKind::SubdividedFixedEndTree { b: 2 });
        let c = lazy_orbit_chain(&g);
        assert_eq!(c.stationary, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(c.transition[0], vec![rat(1, 2), rat(1, 2)]);
        let mu = solve_mu(&g).unwrap();
        assert_eq!(mu.weights.a, vec![rat(2, 5), rat(3, 5)]);
        assert!(mu.routes_agree());
        assert!(mu.max_residual().is_zero());
    }

    #[test]
    fn checkerboard_mu_is_inverse_measure() {
        let g = fam(FamilyKind::CheckerboardLattice { dim: 2 });
        let mu = solve_mu(&g).unwrap();
        let inv: Vec<Rational> = g.orbit_m.iter().map(|m| m.recip()).collect();
        let total: Rational = inv.iter().sum();
        let expected: Vec<Rational> = inv.iter().map(|x| x / &total).collect();
        assert_eq!(mu.weights.a, expected);
    }

    #[test]
    fn harmonic_on_oriented_tree() {
        let g = fam(FamilyKind::OrientedTree { n1: 1, n2: 2 });
        let win = ball(&g, &g.origin(), 3).unwrap();
        let w = OrbitWeights::uniform(&g);
        let r = harmonicity_residual(&g, &w, &g.origin(), &win, &Conductance::Unit).unwrap();
        assert!(r.is_exactly_zero());
    }

    #[test]
    fn non_mu_weights_break_harmonicity() {
        let g = fam(FamilyKind::SubdividedFixedEndTree { b: 2 });
        let win = ball(&g, &g.origin(), 3).unwrap();
        let w = OrbitWeights::uniform(&g);
        let r = harmonicity_residual(&g, &w, &g.origin(), &win, &Conductance::Unit).unwrap();
        assert!(!r.is_exactly_zero());
    }

    #[test]
    fn level_offset_conductance_is_harmonic_on_grandparent() {
        let g = fam(FamilyKind::Grandparent { b: 2 });
        let win = ball(&g, &g.origin(), 2).unwrap();
        let w = OrbitWeights::uniform(&g);
        let c = Conductance::ByLevelOffset {
            values: [(1, rat(3, 1)), (2, rat(1, 7))].into_iter().collect(),
        };
        let r = harmonicity_residual(&g, &w, &g.origin(), &win, &c).unwrap();
        assert!(r.is_exactly_zero());
    }

    #[test]
    fn sqrt_stabilizer_conductance_residual_on_grandparent() {
        // Σ_z √(m(y)m(z)) m(z) ≠ m(y) Σ_z √(m(y)m(z)) at b = 2: the
        // conductance rescales under automorphisms, so it is not invariant.
        let g = fam(FamilyKind::Grandparent { b: 2 });
        let win = ball(&g, &g.origin(), 1).unwrap();
        let w = OrbitWeights::uniform(&g);
        let r =
            harmonicity_residual(&g, &w, &g.origin(), &win, &Conductance::SqrtStabilizer).unwrap();
        // At y = o: weighted sum 12.035..., m(o) · total 6.828...
        let f = r.max_residual.to_f64();
        assert!((f - (12.035534 - 6.828427) / 6.828427).abs() < 1e-5, "{f}");
    }

    #[test]
    fn empty_interior_is_an_error() {
        let g = fam(FamilyKind::EuclideanLattice { dim: 1 });
        let win = ball(&g, &g.origin(), 0).unwrap();
        let w = OrbitWeights::uniform(&g);
        assert!(matches!(
            harmonicity_residual(&g, &w, &g.origin(), &win, &Conductance::Unit),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tmtp_examples() {
        let t = fam(FamilyKind::OrientedTree { n1: 1, n2: 2 });
        let w = OrbitWeights::uniform(&t);
        let r = verify_tmtp(&t, &w, &Transport::LevelStep { step: 1 }).unwrap();
        assert_eq!((r.lhs, r.rhs), (int(1), int(1)));
        let gp = fam(FamilyKind::Grandparent { b: 2 });
        let w = OrbitWeights::uniform(&gp);
        let r = verify_tmtp(&gp, &w, &Transport::LevelStep { step: 2 }).unwrap();
        assert_eq!((r.lhs, r.rhs), (int(1), int(1)));
        let r = verify_tmtp(&gp, &w, &Transport::Identity).unwrap();
        assert_eq!((r.lhs, r.rhs), (int(1), int(1)));
    }

    #[test]
    fn tmtp_detects_a_wrong_tilt() {
        // Dropping the tilt must break the identity for a level-changing transport.
        let t = fam(FamilyKind::OrientedTree { n1: 1, n2: 2 });
        let win = ball(&t, &t.origin(), 1).unwrap();
        let f = Transport::LevelStep { step: 1 };
        let o = t.origin();
        let untilted: Rational = win
            .vertices
            .iter()
            .enumerate()
            .map(|(k, x)| f.evaluate(&t, x, &o, win.distance(k)))
            .sum();
        assert_eq!(untilted, int(2));
    }

    #[test]
    fn cocycle_exact() {
        let g = fam(FamilyKind::DiestelLeader { k: 2, n: 3 });
        let w = OrbitWeights::uniform(&g);
        assert!(cocycle_check(&g, &w, 200, 1).unwrap().is_zero());
    }
}
