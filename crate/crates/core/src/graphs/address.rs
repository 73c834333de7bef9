use serde::{Deserialize, Serialize};

/// A vertex of a regular tree with a fixed end, relative to the origin.
///
/// The vertex is reached by climbing `up` steps toward the end and then
/// descending through the child indices in `down`. The origin's ancestors
/// form the spine: every spine vertex is child `0` of its parent, so the
/// representation is canonical when `up > 0` implies `down[0] != 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HoroAddr {
    pub up: u32,
    pub down: Vec<u32>,
}

impl HoroAddr {
    pub fn origin() -> Self {
        HoroAddr {
            up: 0,
            down: Vec::new(),
        }
    }

    /// Height along the horocycle: `+1` per step toward the end.
    pub fn level(&self) -> i64 {
        self.up as i64 - self.down.len() as i64
    }

    pub fn is_canonical(&self, b: u32) -> bool {
        if self.down.iter().any(|&c| c >= b) {
            return false;
        }
        !(self.up > 0 && self.down.first() == Some(&0))
    }

    pub fn parent(&self) -> HoroAddr {
        if self.down.is_empty() {
            HoroAddr {
                up: self.up + 1,
                down: Vec::new(),
            }
        } else {
            let mut down = self.down.clone();
            down.pop();
            HoroAddr { up: self.up, down }
        }
    }

    pub fn child(&self, i: u32) -> HoroAddr {
        if self.down.is_empty() && self.up > 0 && i == 0 {
            HoroAddr {
                up: self.up - 1,
                down: Vec::new(),
            }
        } else {
            let mut down = self.down.clone();
            down.push(i);
            HoroAddr { up: self.up, down }
        }
    }

    /// Index of this vertex among its parent's children.
    pub fn child_index(&self) -> u32 {
        self.down.last().copied().unwrap_or(0)
    }

    /// Tree distance to the origin.
    pub fn distance_to_origin(&self) -> u32 {
        self.up + self.down.len() as u32
    }

    fn push_words(&self, out: &mut Vec<u64>) {
        out.push(self.up as u64);
        out.push(self.down.len() as u64);
        out.extend(self.down.iter().map(|&c| c as u64));
    }
}

/// Family-specific canonical vertex identifier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Address {
    /// Integer coordinates in `Z^d`.
    Lattice(Vec<i64>),
    /// Reduced slot word from the origin of an oriented tree.
    Word(Vec<u32>),
    /// Vertex of a fixed-end tree (also used by grandparent graphs).
    Horo(HoroAddr),
    /// Midpoint of the edge from the given tree vertex to its parent.
    Midpoint(HoroAddr),
    /// Diestel–Leader vertex: a pair of horocycle positions with opposite heights.
    Pair(HoroAddr, HoroAddr),
    /// Vertex of `base × Z^d`.
    Product(Box<Address>, Vec<i64>),
}

impl Address {
    /// Stable word encoding used for keyed hashing.
    pub fn key_words(&self, out: &mut Vec<u64>) {
        match self {
            Address::Lattice(c) => {
                out.push(1);
                out.push(c.len() as u64);
                out.extend(c.iter().map(|&x| x as u64));
            }
            Address::Word(w) => {
                out.push(2);
                out.push(w.len() as u64);
                out.extend(w.iter().map(|&x| x as u64));
            }
            Address::Horo(h) => {
                out.push(3);
                h.push_words(out);
            }
            Address::Midpoint(h) => {
                out.push(4);
                h.push_words(out);
            }
            Address::Pair(x, y) => {
                out.push(5);
                x.push_words(out);
                y.push_words(out);
            }
            Address::Product(base, z) => {
                out.push(6);
                base.key_words(out);
                out.push(z.len() as u64);
                out.extend(z.iter().map(|&x| x as u64));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spine_children_collapse() {
        let o = HoroAddr::origin();
        let p = o.parent();
        assert_eq!(
            p,
            HoroAddr {
                up: 1,
                down: vec![]
            }
        );
        assert_eq!(p.child(0), o);
        let sib = p.child(1);
        assert_eq!(sib.level(), 0);
        assert_eq!(sib.parent(), p);
        assert!(sib.is_canonical(2));
        assert!(!HoroAddr {
            up: 1,
            down: vec![0]
        }
        .is_canonical(2));
    }

    #[test]
    fn distance_and_child_index() {
        let v = HoroAddr::origin().parent().parent().child(1).child(0);
        assert_eq!(v.distance_to_origin(), 4);
        assert_eq!(v.level(), 0);
        assert_eq!(v.child_index(), 0);
        assert_eq!(HoroAddr::origin().child_index(), 0);
    }
}
