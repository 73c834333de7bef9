//! Lazy descriptors of the bundled infinite graph families.
//!
//! Every family exposes orbit labels, integer levels and a rational
//! modular base `q`, so that `m(v) = m(orbit(v)) · q^level(v)`. Orbit
//! representatives all sit on level 0.
//!
//! Diestel–Leader `DL(k, n)` is built from a `k`-ary and an `n`-ary tree
//! with fixed ends; a vertex `(x, y)` has `h(x) + h(y) = 0`. Take
//! `u = (x, y)` and `v = (parent x, child y)`. The stabilizer of `u` moves
//! `v` among the `n` children of `y`'s parent, and the stabilizer of `v`
//! moves `u` among the `k` children of `parent x`, so
//! `m(v)/m(u) = |Γ_v u| / |Γ_u v| = k/n`.

mod address;
mod family;
mod weights;
mod window;

pub use address::{Address, HoroAddr};
pub use family::{FamilyKind, GraphFamily, VertexRef};
pub(crate) use weights::modular_ratio_unchecked;
pub use weights::{
    measure_ratio, modular_ratio, sqrt_measure_product, sqrt_measure_ratio, OrbitWeights,
};
pub use window::{
    ball, ball_with_budget, geodesic_targets, slab_component, slab_component_with_budget, Edge,
    Window, WindowKind, DEFAULT_MAX_VERTICES, WINDOW_FORMAT_VERSION,
};
