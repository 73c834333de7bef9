use std::fmt;

use num_traits::One;
use serde::{Deserialize, Serialize};

use super::address::{Address, HoroAddr};
use crate::error::{Error, Result};
use crate::exact::{int, pow_i, rat, Rational};

const MAX_BRANCHING: u32 = 64;
const MAX_DIM: u32 = 16;

/// Parameters of a bundled infinite graph family.
///
/// Tree-based families are parametrized by `b`, the number of offspring of
/// each vertex (degree `b + 1` in the underlying tree).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Regular tree of degree `b + 1` with the end-fixing group.
    FixedEndTree {
        b: u32,
    },
    /// `T_{n1+n2+1}` with a `(1, n1, n2)` partial orientation.
    OrientedTree {
        n1: u32,
        n2: u32,
    },
    /// Fixed-end tree plus an edge from every vertex to its grandparent.
    Grandparent {
        b: u32,
    },
    /// Horocyclic product of `T_{k+1}` and `T_{n+1}`.
    DiestelLeader {
        k: u32,
        n: u32,
    },
    /// `base × Z^dim`.
    ProductWithZ {
        base: Box<FamilyKind>,
        dim: u32,
    },
    /// Fixed-end tree with a new vertex at the midpoint of every edge.
    SubdividedFixedEndTree {
        b: u32,
    },
    EuclideanLattice {
        dim: u32,
    },
    /// `Z^dim` with vertices labelled by coordinate-sum parity (two orbits).
    CheckerboardLattice {
        dim: u32,
    },
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::FixedEndTree { b } => write!(f, "fixed_end_tree({b})"),
            FamilyKind::OrientedTree { n1, n2 } => write!(f, "oriented_tree({n1},{n2})"),
            FamilyKind::Grandparent { b } => write!(f, "grandparent({b})"),
            FamilyKind::DiestelLeader { k, n } => write!(f, "diestel_leader({k},{n})"),
            FamilyKind::ProductWithZ { base, dim } => write!(f, "product_with_z({base},{dim})"),
            FamilyKind::SubdividedFixedEndTree { b } => {
                write!(f, "subdivided_fixed_end_tree({b})")
            }
            FamilyKind::EuclideanLattice { dim } => write!(f, "euclidean_lattice({dim})"),
            FamilyKind::CheckerboardLattice { dim } => write!(f, "checkerboard_lattice({dim})"),
        }
    }
}

/// A vertex of an infinite family: orbit label, level (exponent of the
/// modular base relative to the origin) and canonical address.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexRef {
    pub orbit: usize,
    pub level: i64,
    pub address: Address,
}

/// Immutable descriptor of an infinite quasi-transitive graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFamily {
    pub kind: FamilyKind,
    pub orbit_count: usize,
    #[serde(with = "crate::report::rational_str")]
    pub modular_base: Rational,
    pub orbit_degrees: Vec<usize>,
    /// Stabilizer measure of each orbit representative, `m(o_0) = 1`.
    #[serde(with = "crate::report::rational_vec")]
    pub orbit_m: Vec<Rational>,
}

impl GraphFamily {
    pub fn new(kind: FamilyKind) -> Result<Self> {
        validate(&kind)?;
        let orbit_degrees = degrees(&kind);
        let orbit_count = orbit_degrees.len();
        Ok(GraphFamily {
            modular_base: modular_base(&kind),
            orbit_m: vec![Rational::one(); orbit_count],
            orbit_degrees,
            orbit_count,
            kind,
        })
    }

    pub fn is_unimodular(&self) -> bool {
        self.modular_base.is_one()
    }

    pub fn is_transitive(&self) -> bool {
        self.orbit_count == 1
    }

    pub fn degree(&self, v: &VertexRef) -> usize {
        self.orbit_degrees[v.orbit]
    }

    pub fn origin(&self) -> VertexRef {
        self.representative(0)
    }

    /// Representative `o_i` of orbit `i`; all representatives sit on level 0.
    pub fn representative(&self, orbit: usize) -> VertexRef {
        assert!(orbit < self.orbit_count, "orbit {orbit} out of range");
        let address = representative_address(&self.kind, orbit);
        VertexRef {
            orbit,
            level: 0,
            address,
        }
    }

    pub fn vertex(&self, address: Address) -> Result<VertexRef> {
        let (orbit, level) = orbit_level(&self.kind, &address)?;
        Ok(VertexRef {
            orbit,
            level,
            address,
        })
    }

    pub fn validate(&self, v: &VertexRef) -> Result<()> {
        let (orbit, level) = orbit_level(&self.kind, &v.address)?;
        if orbit != v.orbit || level != v.level {
            return Err(Error::Address(format!(
                "fields (orbit {}, level {}) disagree with address (orbit {orbit}, level {level})",
                v.orbit, v.level
            )));
        }
        Ok(())
    }

    /// Neighbors in the documented deterministic order, with multiplicity.
    pub fn neighbors(&self, v: &VertexRef) -> Result<Vec<VertexRef>> {
        self.validate(v)?;
        Ok(self.neighbors_unchecked(v))
    }

    /// As [`neighbors`](Self::neighbors) for a vertex already known valid.
    pub fn neighbors_unchecked(&self, v: &VertexRef) -> Vec<VertexRef> {
        neighbor_addresses(&self.kind, &v.address)
            .into_iter()
            .map(|a| {
                let (orbit, level) = orbit_level_unchecked(&self.kind, &a);
                VertexRef {
                    orbit,
                    level,
                    address: a,
                }
            })
            .collect()
    }

    /// Stabilizer measure `m(v) = m(o_orbit) · q^level`.
    pub fn stabilizer_measure(&self, v: &VertexRef) -> Rational {
        &self.orbit_m[v.orbit] * pow_i(&self.modular_base, v.level)
    }
}

fn validate(kind: &FamilyKind) -> Result<()> {
    let tree = |b: u32, what: &str| {
        if (2..=MAX_BRANCHING).contains(&b) {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "{what}: b must lie in 2..={MAX_BRANCHING}, got {b}"
            )))
        }
    };
    let dim = |d: u32| {
        if (1..=MAX_DIM).contains(&d) {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "dimension must lie in 1..={MAX_DIM}, got {d}"
            )))
        }
    };
    match kind {
        FamilyKind::FixedEndTree { b } => tree(*b, "fixed_end_tree"),
        FamilyKind::Grandparent { b } => tree(*b, "grandparent"),
        FamilyKind::SubdividedFixedEndTree { b } => tree(*b, "subdivided_fixed_end_tree"),
        FamilyKind::OrientedTree { n1, n2 } => {
            if *n1 < 1 || *n2 < 1 || n1 + n2 > MAX_BRANCHING {
                Err(Error::Parameter(format!(
                    "oriented_tree needs n1, n2 >= 1 and n1 + n2 <= {MAX_BRANCHING}, got ({n1},{n2})"
                )))
            } else {
                Ok(())
            }
        }
        FamilyKind::DiestelLeader { k, n } => {
            tree(*k, "diestel_leader k")?;
            tree(*n, "diestel_leader n")
        }
        FamilyKind::ProductWithZ { base, dim: d } => {
            if matches!(**base, FamilyKind::ProductWithZ { .. }) {
                return Err(Error::Parameter(
                    "product_with_z base must not itself be a product".into(),
                ));
            }
            dim(*d)?;
            validate(base)
        }
        FamilyKind::EuclideanLattice { dim: d } | FamilyKind::CheckerboardLattice { dim: d } => {
            dim(*d)
        }
    }
}

fn degrees(kind: &FamilyKind) -> Vec<usize> {
    match kind {
        FamilyKind::FixedEndTree { b } => vec![*b as usize + 1],
        FamilyKind::OrientedTree { n1, n2 } => vec![(1 + n1 + n2) as usize],
        FamilyKind::Grandparent { b } => vec![(b + 2 + b * b) as usize],
        FamilyKind::DiestelLeader { k, n } => vec![(k + n) as usize],
        FamilyKind::ProductWithZ { base, dim } => degrees(base)
            .into_iter()
            .map(|d| d + 2 * *dim as usize)
            .collect(),
        FamilyKind::SubdividedFixedEndTree { b } => vec![*b as usize + 1, 2],
        FamilyKind::EuclideanLattice { dim } => vec![2 * *dim as usize],
        FamilyKind::CheckerboardLattice { dim } => vec![2 * *dim as usize; 2],
    }
}

fn modular_base(kind: &FamilyKind) -> Rational {
    match kind {
        FamilyKind::FixedEndTree { b }
        | FamilyKind::Grandparent { b }
        | FamilyKind::SubdividedFixedEndTree { b } => int(*b as i64),
        FamilyKind::OrientedTree { n1, n2 } => rat(*n2 as i64, *n1 as i64),
        FamilyKind::DiestelLeader { k, n } => rat(*k as i64, *n as i64),
        FamilyKind::ProductWithZ { base, .. } => modular_base(base),
        FamilyKind::EuclideanLattice { .. } | FamilyKind::CheckerboardLattice { .. } => {
            Rational::one()
        }
    }
}

fn origin_address(kind: &FamilyKind) -> Address {
    match kind {
        FamilyKind::FixedEndTree { .. }
        | FamilyKind::Grandparent { .. }
        | FamilyKind::SubdividedFixedEndTree { .. } => Address::Horo(HoroAddr::origin()),
        FamilyKind::OrientedTree { .. } => Address::Word(Vec::new()),
        FamilyKind::DiestelLeader { .. } => Address::Pair(HoroAddr::origin(), HoroAddr::origin()),
        FamilyKind::ProductWithZ { base, dim } => {
            Address::Product(Box::new(origin_address(base)), vec![0; *dim as usize])
        }
        FamilyKind::EuclideanLattice { dim } | FamilyKind::CheckerboardLattice { dim } => {
            Address::Lattice(vec![0; *dim as usize])
        }
    }
}

fn representative_address(kind: &FamilyKind, orbit: usize) -> Address {
    match (kind, orbit) {
        (_, 0) => origin_address(kind),
        (FamilyKind::SubdividedFixedEndTree { .. }, 1) => Address::Midpoint(HoroAddr::origin()),
        (FamilyKind::CheckerboardLattice { dim }, 1) => {
            let mut c = vec![0; *dim as usize];
            c[0] = 1;
            Address::Lattice(c)
        }
        (FamilyKind::ProductWithZ { base, dim }, i) => Address::Product(
            Box::new(representative_address(base, i)),
            vec![0; *dim as usize],
        ),
        _ => unreachable!("no orbit {orbit} in {kind}"),
    }
}

// Oriented-tree slot letters: 0 = unoriented, 1..=n1 = forward (out-edges),
// n1+1..=n1+n2 = backward (in-edges).
fn arrival_slot(letter: u32, n1: u32) -> u32 {
    if letter == 0 {
        0
    } else if letter <= n1 {
        n1 + 1
    } else {
        1
    }
}

fn letter_level(letter: u32, n1: u32) -> i64 {
    if letter == 0 {
        0
    } else if letter <= n1 {
        1
    } else {
        -1
    }
}

fn horo_check(h: &HoroAddr, b: u32) -> Result<()> {
    if h.is_canonical(b) {
        Ok(())
    } else {
        Err(Error::Address(format!(
            "non-canonical tree address {h:?} for b = {b}"
        )))
    }
}

fn orbit_level(kind: &FamilyKind, address: &Address) -> Result<(usize, i64)> {
    let bad = || Error::Address(format!("address {address:?} does not belong to {kind}"));
    match (kind, address) {
        (FamilyKind::FixedEndTree { b }, Address::Horo(h))
        | (FamilyKind::Grandparent { b }, Address::Horo(h)) => {
            horo_check(h, *b)?;
            Ok((0, h.level()))
        }
        (FamilyKind::SubdividedFixedEndTree { b }, Address::Horo(h)) => {
            horo_check(h, *b)?;
            Ok((0, h.level()))
        }
        (FamilyKind::SubdividedFixedEndTree { b }, Address::Midpoint(h)) => {
            horo_check(h, *b)?;
            Ok((1, h.level()))
        }
        (FamilyKind::OrientedTree { n1, n2 }, Address::Word(w)) => {
            let mut level = 0;
            for (i, &l) in w.iter().enumerate() {
                if l > n1 + n2 {
                    return Err(Error::Address(format!("slot {l} out of range")));
                }
                if i > 0 && l == arrival_slot(w[i - 1], *n1) {
                    return Err(Error::Address(format!("word {w:?} backtracks at {i}")));
                }
                level += letter_level(l, *n1);
            }
            Ok((0, level))
        }
        (FamilyKind::DiestelLeader { k, n }, Address::Pair(x, y)) => {
            horo_check(x, *k)?;
            horo_check(y, *n)?;
            if x.level() + y.level() != 0 {
                return Err(Error::Address(format!(
                    "heights {} and {} do not cancel",
                    x.level(),
                    y.level()
                )));
            }
            Ok((0, x.level()))
        }
        (FamilyKind::ProductWithZ { base, dim }, Address::Product(a, z)) => {
            if z.len() != *dim as usize {
                return Err(bad());
            }
            orbit_level(base, a)
        }
        (FamilyKind::EuclideanLattice { dim }, Address::Lattice(c)) => {
            if c.len() != *dim as usize {
                return Err(bad());
            }
            Ok((0, 0))
        }
        (FamilyKind::CheckerboardLattice { dim }, Address::Lattice(c)) => {
            if c.len() != *dim as usize {
                return Err(bad());
            }
            Ok(((c.iter().sum::<i64>().rem_euclid(2)) as usize, 0))
        }
        _ => Err(bad()),
    }
}

fn orbit_level_unchecked(kind: &FamilyKind, address: &Address) -> (usize, i64) {
    match (kind, address) {
        (_, Address::Horo(h)) => (0, h.level()),
        (_, Address::Midpoint(h)) => (1, h.level()),
        (FamilyKind::OrientedTree { n1, .. }, Address::Word(w)) => {
            (0, w.iter().map(|&l| letter_level(l, *n1)).sum())
        }
        (_, Address::Pair(x, _)) => (0, x.level()),
        (FamilyKind::ProductWithZ { base, .. }, Address::Product(a, _)) => {
            orbit_level_unchecked(base, a)
        }
        (FamilyKind::CheckerboardLattice { .. }, Address::Lattice(c)) => {
            ((c.iter().sum::<i64>().rem_euclid(2)) as usize, 0)
        }
        (_, Address::Lattice(_)) => (0, 0),
        _ => unreachable!("address/family mismatch"),
    }
}

fn lattice_steps(c: &[i64]) -> Vec<Vec<i64>> {
    let mut out = Vec::with_capacity(2 * c.len());
    for i in 0..c.len() {
        for s in [1, -1] {
            let mut v = c.to_vec();
            v[i] += s;
            out.push(v);
        }
    }
    out
}

fn neighbor_addresses(kind: &FamilyKind, address: &Address) -> Vec<Address> {
    match (kind, address) {
        (FamilyKind::FixedEndTree { b }, Address::Horo(h)) => {
            let mut out = vec![Address::Horo(h.parent())];
            out.extend((0..*b).map(|i| Address::Horo(h.child(i))));
            out
        }
        (FamilyKind::Grandparent { b }, Address::Horo(h)) => {
            let parent = h.parent();
            let mut out = vec![Address::Horo(parent.clone())];
            let children: Vec<HoroAddr> = (0..*b).map(|i| h.child(i)).collect();
            out.extend(children.iter().cloned().map(Address::Horo));
            out.push(Address::Horo(parent.parent()));
            for c in &children {
                out.extend((0..*b).map(|j| Address::Horo(c.child(j))));
            }
            out
        }
        (FamilyKind::SubdividedFixedEndTree { b }, Address::Horo(h)) => {
            let mut out = vec![Address::Midpoint(h.clone())];
            out.extend((0..*b).map(|i| Address::Midpoint(h.child(i))));
            out
        }
        (FamilyKind::SubdividedFixedEndTree { .. }, Address::Midpoint(h)) => {
            vec![Address::Horo(h.clone()), Address::Horo(h.parent())]
        }
        (FamilyKind::OrientedTree { n1, n2 }, Address::Word(w)) => {
            let back = w.last().map(|&l| arrival_slot(l, *n1));
            (0..=n1 + n2)
                .map(|s| {
                    let mut v = w.clone();
                    if Some(s) == back {
                        v.pop();
                    } else {
                        v.push(s);
                    }
                    Address::Word(v)
                })
                .collect()
        }
        (FamilyKind::DiestelLeader { k, n }, Address::Pair(x, y)) => {
            let mut out = Vec::with_capacity((k + n) as usize);
            let px = x.parent();
            out.extend((0..*n).map(|j| Address::Pair(px.clone(), y.child(j))));
            let py = y.parent();
            out.extend((0..*k).map(|i| Address::Pair(x.child(i), py.clone())));
            out
        }
        (FamilyKind::ProductWithZ { base, .. }, Address::Product(a, z)) => {
            let mut out: Vec<Address> = neighbor_addresses(base, a)
                .into_iter()
                .map(|na| Address::Product(Box::new(na), z.clone()))
                .collect();
            out.extend(
                lattice_steps(z)
                    .into_iter()
                    .map(|nz| Address::Product(a.clone(), nz)),
            );
            out
        }
        (
            FamilyKind::EuclideanLattice { .. } | FamilyKind::CheckerboardLattice { .. },
            Address::Lattice(c),
        ) => lattice_steps(c).into_iter().map(Address::Lattice).collect(),
        _ => unreachable!("address/family mismatch"),
    }
}
